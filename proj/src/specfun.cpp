#include "hermite/specfun.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <string>

namespace hermite::specfun {

namespace {

bool is_nonpositive_integer(double v)
{
    return v <= 0.0 && std::abs(v - std::round(v)) < 1e-12;
}

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

// Neumaier compensated accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v)
    {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

struct SeriesResult {
    double value = 0.0;
    double magnitude = 0.0;  // sum of |terms|, a cancellation estimate
};

SeriesResult m_series(double a, double b, double x)
{
    constexpr int kMaxTerms = 10000;
    CompensatedSum s;
    double magnitude = 0.0;
    double term = 1.0;
    for (int k = 0; k < kMaxTerms; ++k) {
        s.add(term);
        magnitude += std::abs(term);
        const double ratio = (a + k) / (b + k) * x / (k + 1);
        term *= ratio;
        if (term == 0.0) return {s.value(), magnitude};
        // Converged once terms are tiny and shrinking.
        if (std::abs(ratio) < 1.0 && std::abs(term) < 1e-17 * std::abs(s.value())) return {s.value(), magnitude};
    }
    throw DomainError("kummer_m: series did not converge within 10000 terms");
}

// U(a, b, x) for a >= 1 from x^-a / Gamma(a) * int_0^inf e^-s s^(a-1) (1 + s/x)^(b-a-1) ds.
double u_integral(double a, double b, double x)
{
    thread_local boost::math::quadrature::exp_sinh<double> quad;
    const double log_norm = boost::math::lgamma(a);
    const auto f = [&](double s) {
        if (!(s > 0.0) || !std::isfinite(s)) return 0.0;
        return std::exp((a - 1.0) * std::log(s) - s + (b - a - 1.0) * std::log1p(s / x) - log_norm);
    };
    return std::pow(x, -a) * quad.integrate(f);
}

// Integral at a + n >= 1 and a + n + 1, then the recurrence
// U(a-1) = -(b - 2a - x) U(a) - a (a - b + 1) U(a+1) downwards, the stable
// direction for U.
double u_by_recurrence(double a, double b, double x)
{
    const int n = a >= 1.0 ? 0 : static_cast<int>(std::ceil(1.0 - a));
    double top = a + n;
    double hi = u_integral(top + 1.0, b, x);
    double lo = u_integral(top, b, x);
    for (int k = 0; k < n; ++k) {
        const double next = -(b - 2.0 * top - x) * lo - top * (top - b + 1.0) * hi;
        hi = lo;
        lo = next;
        top -= 1.0;
    }
    return lo;
}

}  // namespace

double gamma(double x)
{
    if (is_nonpositive_integer(x)) throw DomainError("gamma: pole at " + std::to_string(x));
    return boost::math::tgamma(x);
}

double rgamma(double x)
{
    if (is_nonpositive_integer(x)) return 0.0;
    return 1.0 / gamma(x);
}

double kummer_m(double a, double b, double x)
{
    if (is_nonpositive_integer(b)) throw DomainError("kummer_m: b must not be a nonpositive integer");
    if (std::abs(x) > 50.0) throw DomainError("kummer_m: |x| > 50 is outside the supported domain");
    if (x == 0.0) return 1.0;
    if (x < -30.0) return std::exp(x) * m_series(b - a, b, -x).value;
    const SeriesResult direct = m_series(a, b, x);
    if (x < 0.0 && direct.magnitude > 1e4 * std::abs(direct.value)) {
        // Heavy cancellation in the alternating series; Kummer's transformation
        // M(a,b,x) = e^x M(b-a,b,-x) has (eventually) positive terms.
        const SeriesResult flipped = m_series(b - a, b, -x);
        const double direct_loss = direct.magnitude / std::abs(direct.value);
        const double flipped_loss = flipped.magnitude / std::abs(flipped.value);
        if (flipped_loss < direct_loss) return std::exp(x) * flipped.value;
    }
    return direct.value;
}

double kummer_u(double a, double b, double x)
{
    if (x <= 0.0) throw DomainError("kummer_u: requires x > 0");
    if (is_integer(b)) throw DomainError("kummer_u: integer b is not supported");

    // Asymptotic series x^-a * sum (a)_k (a-b+1)_k / k! (-1/x)^k, used when it
    // reaches full precision before its terms start to grow.
    {
        const double a2 = a - b + 1.0;
        CompensatedSum s;
        double term = 1.0;
        bool converged = false;
        for (int k = 0; k < 200; ++k) {
            s.add(term);
            const double next = term * (a + k) * (a2 + k) / (k + 1) * (-1.0 / x);
            if (next == 0.0 || std::abs(next) < 1e-17 * std::abs(s.value())) {
                converged = true;
                break;
            }
            if (std::abs(next) > std::abs(term)) break;
            term = next;
        }
        if (converged) return std::pow(x, -a) * s.value();
    }

    // The connection formula below cancels badly once U is small next to e^x.
    if (x > 1.0) return u_by_recurrence(a, b, x);

    const double first = gamma(1.0 - b) * rgamma(a - b + 1.0);
    const double second = gamma(b - 1.0) * rgamma(a);
    double value = 0.0;
    if (first != 0.0) value += first * kummer_m(a, b, x);
    if (second != 0.0) value += second * std::pow(x, 1.0 - b) * kummer_m(a - b + 1.0, 2.0 - b, x);
    return value;
}

bool hermite_odd_basis_degenerate(double lambda) { return is_nonpositive_integer(0.5 + lambda / 4.0); }

HermiteValue hermite_even(double lambda, double zeta)
{
    const double c = lambda / 4.0;
    const double x = zeta * zeta;
    const double m0 = kummer_m(c, 0.5, x);
    const double m1 = kummer_m(c + 1.0, 1.5, x);
    const double m2 = kummer_m(c + 2.0, 2.5, x);
    return {m0, 4.0 * c * zeta * m1, 4.0 * c * m1 + 16.0 / 3.0 * c * (c + 1.0) * x * m2};
}

HermiteValue hermite_solution(double lambda, double c1, double c2, double zeta)
{
    const double a = 0.5 + lambda / 4.0;
    const double x = zeta * zeta;
    HermiteValue out;
    if (c1 != 0.0) {
        const double m0 = kummer_m(a, 1.5, x);
        const double m1 = kummer_m(a + 1.0, 2.5, x);
        const double m2 = kummer_m(a + 2.0, 3.5, x);
        out.z += c1 * zeta * m0;
        out.dz += c1 * (m0 + 4.0 * a / 3.0 * x * m1);
        out.d2z += c1 * (4.0 * a * zeta * m1 + 16.0 / 15.0 * a * (a + 1.0) * zeta * x * m2);
    }
    if (c2 != 0.0) {
        if (hermite_odd_basis_degenerate(lambda)) {
            const HermiteValue w = hermite_even(lambda, zeta);
            out.z += c2 * w.z;
            out.dz += c2 * w.dz;
            out.d2z += c2 * w.d2z;
        } else {
            if (zeta <= 0.0) throw DomainError("hermite_z: the U component requires zeta > 0");
            const double u0 = kummer_u(a, 1.5, x);
            const double u1 = kummer_u(a + 1.0, 2.5, x);
            const double u2 = kummer_u(a + 2.0, 3.5, x);
            out.z += c2 * zeta * u0;
            out.dz += c2 * (u0 - 2.0 * a * x * u1);
            out.d2z += c2 * (-6.0 * a * zeta * u1 + 4.0 * a * (a + 1.0) * zeta * x * u2);
        }
    }
    return out;
}

double hermite_z(double lambda, double c1, double c2, double zeta)
{
    return hermite_solution(lambda, c1, c2, zeta).z;
}

double hermite_z_prime(double lambda, double c1, double c2, double zeta)
{
    return hermite_solution(lambda, c1, c2, zeta).dz;
}

}  // namespace hermite::specfun
