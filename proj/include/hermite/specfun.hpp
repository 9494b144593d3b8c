#pragma once

#include <stdexcept>

namespace hermite::specfun {

/// Parameter-domain violation or series non-convergence.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Gamma function via the Lanczos approximation (g = 7, 9 terms) with reflection.
double gamma(double x);
/// 1/Gamma(x); exactly zero at the poles x = 0, -1, -2, ...
double rgamma(double x);

/// Kummer's confluent hypergeometric function M(a, b, x) = 1F1(a; b; x).
/// Requires b not a nonpositive integer and |x| <= 50.
double kummer_m(double a, double b, double x);

/// Tricomi's confluent hypergeometric function U(a, b, x) for x > 0 and
/// non-integer b. Uses the connection formula through M, switching to the
/// large-x asymptotic series where it converges.
double kummer_u(double a, double b, double x);

/// Value and first two zeta-derivatives of a solution of z'' = 2 zeta z' + lambda z.
struct HermiteValue {
    double z = 0.0;
    double dz = 0.0;
    double d2z = 0.0;
};

/// True when a = 1/2 + lambda/4 is a nonpositive integer, so that zeta*U(a, 3/2, zeta^2)
/// is a multiple of the odd solution and the even basis takes its place.
bool hermite_odd_basis_degenerate(double lambda);

/// z = C1 * zeta * M(a, 3/2, zeta^2) + C2 * w2(zeta), a = 1/2 + lambda/4, where w2 is
/// zeta * U(a, 3/2, zeta^2) (requires zeta > 0 when C2 != 0), or the even solution
/// M(lambda/4, 1/2, zeta^2) when hermite_odd_basis_degenerate(lambda).
HermiteValue hermite_solution(double lambda, double c1, double c2, double zeta);
double hermite_z(double lambda, double c1, double c2, double zeta);
double hermite_z_prime(double lambda, double c1, double c2, double zeta);

/// Even solution M(lambda/4, 1/2, zeta^2) with derivatives; valid on the whole line.
HermiteValue hermite_even(double lambda, double zeta);

}  // namespace hermite::specfun
