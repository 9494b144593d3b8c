#include "hermite/specfun.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>
#include <boost/numeric/odeint.hpp>
#include <doctest.h>

#include <array>
#include <cmath>

using namespace hermite::specfun;

namespace {

bool close(double got, double want, double tol)
{
    return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

}  // namespace

TEST_CASE("gamma")
{
    CHECK(close(hermite::specfun::gamma(5.0), 24.0, 1e-13));
    CHECK(close(hermite::specfun::gamma(0.5), std::sqrt(M_PI), 1e-13));
    CHECK(close(hermite::specfun::gamma(-1.5), boost::math::tgamma(-1.5), 1e-12));
    CHECK(rgamma(0.0) == 0.0);
    CHECK(rgamma(-3.0) == 0.0);
}

TEST_CASE("Kummer M closed forms")
{
    CHECK(close(kummer_m(1, 2, 1), std::exp(1.0) - 1, 1e-12));
    CHECK(close(kummer_m(0.5, 1.5, -1), std::sqrt(M_PI) * std::erf(1.0) / 2, 1e-10));
    CHECK(kummer_m(0.3, 1.7, 0.0) == 1.0);
    CHECK(kummer_m(-2, 0.5, 3.0) == doctest::Approx(1 - 4 * 3.0 + 4 * 9.0 / 3));  // Hermite polynomial
    CHECK_THROWS_AS(kummer_m(1, -2, 1), DomainError);
}

TEST_CASE("Kummer M against boost")
{
    for (double a = -2.25; a <= 3; a += 0.5)
        for (double b : {0.5, 1.5, 2.5})
            for (double x = -10; x <= 10; x += 1.25)
                CHECK_MESSAGE(close(kummer_m(a, b, x), boost::math::hypergeometric_1F1(a, b, x), 1e-9),
                              a << " " << b << " " << x);
}

TEST_CASE("Tricomi U closed forms")
{
    // U(a, a + 1, x) = x^-a.
    CHECK(close(kummer_u(0.5, 1.5, 4.0), 0.5, 1e-12));
    CHECK(close(kummer_u(0.5, 1.5, 1e4) * 100, 1.0, 1e-6));
    CHECK(close(kummer_u(1.25, 2.25, 0.7), std::pow(0.7, -1.25), 1e-10));
    // U(1/2, 1/2, x^2) = sqrt(pi) e^(x^2) erfc(x).
    CHECK(close(kummer_u(0.5, 0.5, 1.44), std::sqrt(M_PI) * std::exp(1.44) * std::erfc(1.2), 1e-10));
    CHECK_THROWS_AS(kummer_u(0.5, 2.0, 1.0), DomainError);
    CHECK_THROWS_AS(kummer_u(0.5, 1.5, -1.0), DomainError);
}

TEST_CASE("property: contiguous relations")
{
    for (double a = -2; a <= 3; a += 0.25) {
        for (double b : {0.5, 1.5, 2.5}) {
            for (double x = -10; x <= 10; x += 0.5) {
                const double m0 = kummer_m(a - 1, b, x), m1 = kummer_m(a, b, x), m2 = kummer_m(a + 1, b, x);
                const double scale = std::abs((b - a) * m0) + std::abs((2 * a - b + x) * m1) + std::abs(a * m2);
                CHECK(std::abs((b - a) * m0 + (2 * a - b + x) * m1 - a * m2) <= 1e-9 * std::max(1.0, scale));
                if (x <= 0) continue;
                const double u0 = kummer_u(a - 1, b, x), u1 = kummer_u(a, b, x), u2 = kummer_u(a + 1, b, x);
                const double uscale =
                    std::abs(u0) + std::abs((b - 2 * a - x) * u1) + std::abs(a * (a - b + 1) * u2);
                CHECK_MESSAGE(std::abs(u0 + (b - 2 * a - x) * u1 + a * (a - b + 1) * u2) <= 1e-9 * std::max(1.0, uscale),
                              a << " " << b << " " << x);
            }
        }
    }
}

TEST_CASE("property: Kummer transformation M(a, b, x) = e^x M(b - a, b, -x)")
{
    for (double a = -1.7; a <= 3; a += 0.6)
        for (double b : {0.5, 1.5, 2.5, 3.3})
            for (double x = -8; x <= 8; x += 0.8)
                CHECK(close(kummer_m(a, b, x), std::exp(x) * kummer_m(b - a, b, -x), 1e-9));
}

TEST_CASE("Hermite solutions")
{
    const HermiteValue origin = hermite_solution(0.6, 1.0, 0.0, 0.0);
    CHECK(origin.z == 0.0);
    CHECK(origin.dz == doctest::Approx(1.0));
    const HermiteValue even = hermite_even(0.7, 0.0);
    CHECK(even.z == 1.0);
    CHECK(even.dz == 0.0);
    CHECK(even.d2z == doctest::Approx(0.7));
    CHECK(hermite_z(0.6, 1.0, 0.0, 1.0) == doctest::Approx(kummer_m(0.65, 1.5, 1.0)));
    // lambda = -2: a = 0, the odd basis degenerates and the even one is used.
    CHECK(hermite_odd_basis_degenerate(-2.0));
    CHECK_FALSE(hermite_odd_basis_degenerate(-1.0));
}

TEST_CASE("property: Hermite solutions agree with numerical integration")
{
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    for (const double lambda : {-2.0, -1.0, 0.6, 2.0}) {
        for (const auto& [c1, c2] : {std::pair{1.0, 0.0}, std::pair{0.4, -0.7}}) {
            const double z0 = 0.1;
            const HermiteValue start = hermite_solution(lambda, c1, c2, z0);
            State s{start.z, start.dz};
            const auto rhs = [lambda](const State& y, State& dy, double zeta) {
                dy[0] = y[1];
                dy[1] = 2 * zeta * y[1] + lambda * y[0];
            };
            odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-12, 1e-12), rhs, s,
                                       z0, 3.0, 1e-3);
            const HermiteValue end = hermite_solution(lambda, c1, c2, 3.0);
            CHECK_MESSAGE(close(s[0], end.z, 1e-7), lambda << " " << c1 << " " << c2);
            CHECK(close(s[1], end.dz, 1e-7));
            CHECK(close(end.d2z, 2 * 3.0 * end.dz + lambda * end.z, 1e-10));
        }
    }
}
