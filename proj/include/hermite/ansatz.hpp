#pragma once

#include "hermite/expr.hpp"
#include "hermite/reduce.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hermite {

/// u = sum_{i=0}^{N} g_i z^i.
struct AnsatzSpec {
    int N = 1;
    std::vector<std::string> coefficients;
    Expression u;
};

/// One coefficient equation per monomial; every coefficient must vanish.
struct AlgebraicSystem {
    std::vector<std::pair<MonomialKey, Expression>> equations;
    std::vector<std::string> unknowns;
    CollectMode mode = CollectMode::Strict;
};

/// The balancing principle produced a non-integer or nonpositive degree.
class BalanceError : public std::runtime_error {
public:
    BalanceError(const std::string& what, Rational value) : std::runtime_error(what), value_(std::move(value)) {}
    const Rational& value() const { return value_; }

private:
    Rational value_;
};

/// Degree bookkeeping deg(u^(k)) = N + k; equates the highest linear derivative
/// term with the strongest nonlinearity.
int compute_balance(const ReducedODE& ode);

AnsatzSpec build_ansatz(int N);

/// Eliminates z^(k), k >= 2, using z'' = 2 zeta z' + lambda z.
Expression hermite_rewrite(const Expression& e);

/// Substitutes the ansatz into the ODE, rewrites with the Hermite equation and
/// collects coefficients.
AlgebraicSystem assemble_system(const ReducedODE& ode, const AnsatzSpec& spec, CollectMode mode);

/// The sum of coefficient * monomial over all equations.
Expression recombine(const AlgebraicSystem& system);

}  // namespace hermite
