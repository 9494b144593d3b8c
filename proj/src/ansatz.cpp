#include "hermite/ansatz.hpp"

#include <algorithm>
#include <map>

namespace hermite {

int compute_balance(const ReducedODE& ode)
{
    const Expression lhs = normalize(ode.lhs);
    const std::string& u = ode.model.unknown;
    std::function<bool(const Expression&)> has_symbolic_power = [&](const Expression& e) {
        if (e.kind() == Kind::Apply && e.name() == "pow" && max_derivative_order(e, u) >= 0) return true;
        return std::any_of(e.children().begin(), e.children().end(), has_symbolic_power);
    };
    if (has_symbolic_power(lhs)) throw std::invalid_argument("balance: nonlinearity exponent n must be bound to an integer");

    // Each term contributes a degree p*N + q.
    int linear_order = -1;
    int best_p = 0;
    int best_q = 0;
    for (const auto& term : terms_of(lhs)) {
        int p = 0;
        int q = 0;
        for (const auto& [base, k] : factor_powers(split_term(term).second)) {
            if (base.kind() != Kind::FnAtom || base.name() != u) continue;
            p += k;
            q += k * base.derivative_order();
        }
        if (p == 1) linear_order = std::max(linear_order, q);
        if (p > best_p || (p == best_p && q > best_q)) {
            best_p = p;
            best_q = q;
        }
    }
    if (linear_order < 0) throw BalanceError("balance: no linear derivative term", Rational(0));
    if (best_p < 2) throw BalanceError("balance: equation is linear in u", Rational(0));
    const Rational N = Rational(linear_order - best_q) / Rational(best_p - 1);
    if (N <= 0 || boost::multiprecision::denominator(N) != 1)
        throw BalanceError("balance: N = " + N.str() + " is not a positive integer", N);
    return static_cast<int>(boost::multiprecision::numerator(N));
}

AnsatzSpec build_ansatz(int N)
{
    if (N < 1) throw std::invalid_argument("ansatz degree must be at least 1");
    AnsatzSpec spec;
    spec.N = N;
    std::vector<Expression> terms;
    const Expression z = Expression::fn(sym::z);
    for (int i = 0; i <= N; ++i) {
        spec.coefficients.push_back("g" + std::to_string(i));
        terms.push_back(Expression::symbol(spec.coefficients.back()) * pow(z, i));
    }
    spec.u = normalize(Expression::sum(std::move(terms)));
    return spec;
}

namespace {

// Replacement for z^(k) in terms of z and z'; rules up to order 6 are built once.
Expression next_rule(const Expression& previous, const Expression& second)
{
    return substitute(differentiate(previous, sym::zeta), Expression::deriv(sym::z, 2), second);
}

Expression hermite_rule(int k)
{
    static const std::vector<Expression> table = [] {
        const Expression z = Expression::fn(sym::z);
        const Expression zp = Expression::deriv(sym::z, 1);
        const Expression zeta = Expression::symbol(sym::zeta);
        const Expression lambda = Expression::symbol(sym::lambda);
        std::vector<Expression> t(3);
        t[2] = normalize(Expression(2) * zeta * zp + lambda * z);
        while (t.size() <= 6) t.push_back(next_rule(t.back(), t[2]));
        return t;
    }();
    if (k < static_cast<int>(table.size())) return table[static_cast<std::size_t>(k)];
    Expression r = table.back();
    for (int j = static_cast<int>(table.size()); j <= k; ++j) r = next_rule(r, table[2]);
    return r;
}

}  // namespace

Expression hermite_rewrite(const Expression& e)
{
    Expression out = normalize(e);
    int order = max_derivative_order(out, sym::z);
    while (order >= 2) {
        out = substitute(out, Expression::deriv(sym::z, order), hermite_rule(order));
        order = max_derivative_order(out, sym::z);
    }
    return out;
}

AlgebraicSystem assemble_system(const ReducedODE& ode, const AnsatzSpec& spec, CollectMode mode)
{
    const std::string& u = ode.model.unknown;
    Expression lhs = normalize(ode.lhs);
    const int order = std::max(0, max_derivative_order(lhs, u));
    std::vector<Expression> derivs{spec.u};
    for (int k = 1; k <= order; ++k) derivs.push_back(differentiate(derivs.back(), sym::zeta));
    for (int k = order; k >= 0; --k) lhs = substitute(lhs, Expression::deriv(u, k), derivs[static_cast<std::size_t>(k)]);
    if (max_derivative_order(lhs, u) >= 0)
        throw std::invalid_argument("assemble: nonlinearity exponent n must be bound to an integer");

    AlgebraicSystem sys;
    sys.mode = mode;
    for (auto& [key, coef] : collect(hermite_rewrite(lhs), mode)) sys.equations.emplace_back(key, coef);

    sys.unknowns = spec.coefficients;
    sys.unknowns.push_back(sym::lambda);
    if (ode.frame.c.kind() == Kind::Symbol) sys.unknowns.push_back(ode.frame.c.name());
    for (const auto& p : ode.model.solve_for)
        if (std::find(sys.unknowns.begin(), sys.unknowns.end(), p) == sys.unknowns.end()) sys.unknowns.push_back(p);
    return sys;
}

Expression recombine(const AlgebraicSystem& system)
{
    std::vector<Expression> terms;
    for (const auto& [key, coef] : system.equations) terms.push_back(coef * monomial(key));
    return normalize(Expression::sum(std::move(terms)));
}

}  // namespace hermite
