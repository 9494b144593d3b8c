#pragma once

#include "hermite/parser.hpp"

#include <random>
#include <string>

namespace testing {

inline hermite::Expression P(const std::string& text)
{
    return hermite::normalize(hermite::parse_expression(text));
}

/// Random trees over a few symbols, z, z' and zeta. `with_z` off keeps the
/// tree free of function atoms so it can be evaluated directly; `polynomial`
/// keeps z and z' outside of function calls and negative powers.
class ExprGen {
public:
    explicit ExprGen(std::uint64_t seed) : rng_(seed) {}

    hermite::Expression operator()(int depth, bool with_z = true, bool polynomial = true)
    {
        using hermite::Expression;
        const int pick = depth <= 0 ? 0 : uniform(0, 9);
        if (pick <= 2) return leaf(with_z);
        switch (pick) {
        case 3:
        case 4:
            return (*this)(depth - 1, with_z, polynomial) + (*this)(depth - 1, with_z, polynomial);
        case 5:
        case 6:
            return (*this)(depth - 1, with_z, polynomial) * (*this)(depth - 1, with_z, polynomial);
        case 7:
            return Expression::power((*this)(depth - 1, with_z, polynomial), uniform(2, 3));
        case 8: {
            if (!functions) return (*this)(depth - 1, with_z, polynomial) * leaf(with_z);
            // Functions of z-free arguments only when collecting.
            const Expression arg = (*this)(depth - 1, with_z && !polynomial, polynomial);
            return uniform(0, 1) ? hermite::sin(arg) : hermite::exp(arg * Expression(Rational(1, 4)));
        }
        default:
            return (*this)(depth - 1, with_z, polynomial) - (*this)(depth - 1, with_z, polynomial);
        }
    }

    /// Off: no sin/exp nodes (strict collection needs polynomial zeta).
    bool functions = true;

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

private:
    using Rational = hermite::Rational;

    hermite::Expression leaf(bool with_z)
    {
        using hermite::Expression;
        const int k = uniform(0, with_z ? 6 : 4);
        switch (k) {
        case 0:
            return Expression(Rational(uniform(-4, 4), uniform(1, 3)));
        case 1:
            return Expression::symbol("a");
        case 2:
            return Expression::symbol("g1");
        case 3:
        case 4:
            return Expression::symbol("zeta");
        case 5:
            return Expression::fn("z");
        default:
            return Expression::deriv("z", 1);
        }
    }

    std::mt19937_64 rng_;
};

}  // namespace testing
