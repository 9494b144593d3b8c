#include "hermite/expr.hpp"
#include "hermite/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace hermite {

namespace {

bool is_independent(const std::string& var)
{
    return var == sym::x || var == sym::t || var == sym::zeta;
}

Expression diff_raw(const Expression& e, const std::string& var);

Expression diff_apply(const Expression& e, const std::string& var)
{
    const auto& args = e.children();
    const std::string& f = e.name();
    if (f == "sin") return cos(args[0]) * diff_raw(args[0], var);
    if (f == "cos") return -(sin(args[0]) * diff_raw(args[0], var));
    if (f == "exp") return e * diff_raw(args[0], var);
    if (f == "sqrt") return Expression(Rational(1, 2)) * diff_raw(args[0], var) * pow(e, -1);
    if (f == "pow") {
        if (contains_symbol(args[1], var))
            throw std::domain_error("derivative of a power with variable exponent is not supported");
        return args[1] * general_pow(args[0], args[1] - Expression(1)) * diff_raw(args[0], var);
    }
    if (f == "kummerM" || f == "kummerU") {
        if (contains_symbol(args[0], var) || contains_symbol(args[1], var))
            throw std::domain_error(f + ": derivative with respect to a parameter is not supported");
        const Expression a1 = args[0] + Expression(1);
        const Expression b1 = args[1] + Expression(1);
        const Expression darg = diff_raw(args[2], var);
        if (f == "kummerM") return args[0] / args[1] * kummer_m(a1, b1, args[2]) * darg;
        return -(args[0] * kummer_u(a1, b1, args[2]) * darg);
    }
    throw std::domain_error("cannot differentiate function " + f);
}

Expression diff_raw(const Expression& e, const std::string& var)
{
    switch (e.kind()) {
    case Kind::Constant:
        return Expression(0);
    case Kind::Symbol:
        return Expression(e.name() == var ? 1 : 0);
    case Kind::FnAtom: {
        if (!is_independent(var)) return Expression(0);
        auto orders = e.orders();
        orders.emplace_back(var, 1);
        return Expression::fn(e.name(), orders);
    }
    case Kind::Power: {
        const Expression& b = e.children()[0];
        const int k = e.exponent();
        return Expression(k) * pow(b, k - 1) * diff_raw(b, var);
    }
    case Kind::Product: {
        const auto& ch = e.children();
        std::vector<Expression> terms;
        for (std::size_t i = 0; i < ch.size(); ++i) {
            Expression d = normalize(diff_raw(ch[i], var));
            if (d.is_zero()) continue;
            std::vector<Expression> factors;
            for (std::size_t j = 0; j < ch.size(); ++j) factors.push_back(i == j ? d : ch[j]);
            terms.push_back(Expression::product(std::move(factors)));
        }
        return Expression::sum(std::move(terms));
    }
    case Kind::Sum: {
        std::vector<Expression> terms;
        for (const auto& c : e.children()) terms.push_back(diff_raw(c, var));
        return Expression::sum(std::move(terms));
    }
    case Kind::Apply:
        return diff_apply(e, var);
    }
    return Expression(0);
}

Expression replace_raw(const Expression& e, const std::function<std::optional<Expression>(const Expression&)>& rule)
{
    if (auto r = rule(e)) return *r;
    switch (e.kind()) {
    case Kind::Constant:
    case Kind::Symbol:
    case Kind::FnAtom:
        return e;
    case Kind::Power:
        return pow(replace_raw(e.children()[0], rule), e.exponent());
    case Kind::Product:
    case Kind::Sum:
    case Kind::Apply: {
        std::vector<Expression> ch;
        ch.reserve(e.children().size());
        bool changed = false;
        for (const auto& c : e.children()) {
            ch.push_back(replace_raw(c, rule));
            changed = changed || !(ch.back() == c);
        }
        if (!changed) return e;
        if (e.kind() == Kind::Product) return Expression::product(std::move(ch));
        if (e.kind() == Kind::Sum) return Expression::sum(std::move(ch));
        return Expression::apply(e.name(), std::move(ch));
    }
    }
    return e;
}

void walk(const Expression& e, const std::function<void(const Expression&)>& visit)
{
    visit(e);
    for (const auto& c : e.children()) walk(c, visit);
}

}  // namespace

Expression differentiate(const Expression& e, const std::string& var)
{
    return normalize(diff_raw(normalize(e), var));
}

Expression substitute(const Expression& e, const Expression& target, const Expression& replacement)
{
    if (target.kind() != Kind::Symbol && target.kind() != Kind::FnAtom)
        throw std::invalid_argument("substitution target must be a symbol or function atom");
    return normalize(replace_raw(e, [&](const Expression& n) -> std::optional<Expression> {
        if (n.kind() == target.kind() && n == target) return replacement;
        return std::nullopt;
    }));
}

Expression substitute(const Expression& e, const std::map<std::string, Expression>& replacements)
{
    if (replacements.empty()) return normalize(e);
    return normalize(replace_raw(e, [&](const Expression& n) -> std::optional<Expression> {
        if (n.kind() != Kind::Symbol) return std::nullopt;
        auto it = replacements.find(n.name());
        if (it == replacements.end()) return std::nullopt;
        return it->second;
    }));
}

bool contains(const Expression& e, const Expression& target)
{
    if (e == target) return true;
    return std::any_of(e.children().begin(), e.children().end(),
                       [&](const Expression& c) { return contains(c, target); });
}

bool contains_symbol(const Expression& e, const std::string& name)
{
    if (e.kind() == Kind::Symbol) return e.name() == name;
    return std::any_of(e.children().begin(), e.children().end(),
                       [&](const Expression& c) { return contains_symbol(c, name); });
}

std::vector<std::string> free_symbols(const Expression& e)
{
    std::set<std::string> names;
    walk(e, [&](const Expression& n) {
        if (n.kind() == Kind::Symbol) names.insert(n.name());
    });
    return {names.begin(), names.end()};
}

int max_derivative_order(const Expression& e, const std::string& fname)
{
    int best = -1;
    walk(e, [&](const Expression& n) {
        if (n.kind() == Kind::FnAtom && n.name() == fname) best = std::max(best, n.derivative_order());
    });
    return best;
}

Expression numerator(const Expression& e)
{
    Expression n = normalize(e);
    std::map<Expression, int, ExprLess> lcm;
    for (const auto& term : terms_of(n)) {
        for (const auto& [base, k] : factor_powers(split_term(term).second)) {
            if (k >= 0) continue;
            int& slot = lcm[base];
            slot = std::max(slot, -k);
        }
    }
    if (lcm.empty()) return n;
    std::vector<Expression> factors{n};
    for (const auto& [base, k] : lcm) factors.push_back(pow(base, k));
    return normalize(Expression::product(std::move(factors)));
}

bool is_zero(const Expression& e)
{
    Expression n = normalize(e);
    if (n.is_zero()) return true;
    return numerator(n).is_zero();
}

bool equivalent(const Expression& a, const Expression& b) { return is_zero(a - b); }

// --- evaluation ---------------------------------------------------------------

double evaluate(const Expression& e, const Bindings& bindings, const AtomEvaluator& atoms)
{
    switch (e.kind()) {
    case Kind::Constant:
        return static_cast<double>(e.value());
    case Kind::Symbol: {
        auto it = bindings.find(e.name());
        if (it != bindings.end()) return it->second;
        if (e.name() == sym::pi) return std::numbers::pi;
        throw EvaluationError("unbound symbol " + e.name());
    }
    case Kind::FnAtom: {
        if (atoms)
            if (auto v = atoms(e)) return *v;
        throw EvaluationError("no value for function atom " + e.name());
    }
    case Kind::Power: {
        const double b = evaluate(e.children()[0], bindings, atoms);
        if (b == 0.0 && e.exponent() < 0) throw EvaluationError("division by zero");
        return std::pow(b, e.exponent());
    }
    case Kind::Product: {
        double p = 1.0;
        for (const auto& c : e.children()) p *= evaluate(c, bindings, atoms);
        return p;
    }
    case Kind::Sum: {
        double s = 0.0;
        for (const auto& c : e.children()) s += evaluate(c, bindings, atoms);
        return s;
    }
    case Kind::Apply: {
        std::vector<double> a;
        for (const auto& c : e.children()) a.push_back(evaluate(c, bindings, atoms));
        const std::string& f = e.name();
        if (f == "sin") return std::sin(a[0]);
        if (f == "cos") return std::cos(a[0]);
        if (f == "exp") return std::exp(a[0]);
        if (f == "sqrt") {
            if (a[0] < 0) throw EvaluationError("sqrt of negative value (non-real)");
            return std::sqrt(a[0]);
        }
        if (f == "pow") {
            const double r = std::pow(a[0], a[1]);
            if (std::isnan(r)) throw EvaluationError("non-real power");
            return r;
        }
        try {
            if (f == "kummerM") return specfun::kummer_m(a[0], a[1], a[2]);
            if (f == "kummerU") return specfun::kummer_u(a[0], a[1], a[2]);
        } catch (const specfun::DomainError& err) {
            throw EvaluationError(err.what());
        }
        throw EvaluationError("unknown function " + f);
    }
    }
    return 0.0;
}

// --- collection --------------------------------------------------------------

Expression monomial(const MonomialKey& key)
{
    return normalize(Expression::product({pow(Expression::fn(sym::z), key.z),
                                          pow(Expression::deriv(sym::z, 1), key.zp),
                                          pow(Expression::symbol(sym::zeta), key.zeta)}));
}

std::map<MonomialKey, Expression> collect(const Expression& e, CollectMode mode)
{
    const Expression n = normalize(e);
    if (max_derivative_order(n, sym::z) > 1)
        throw std::invalid_argument("collect: expression contains z'' or higher; apply the Hermite rewrite first");
    const Expression z = Expression::fn(sym::z);
    const Expression zp = Expression::deriv(sym::z, 1);
    const Expression zeta = Expression::symbol(sym::zeta);

    std::map<MonomialKey, std::vector<Expression>> buckets;
    for (const auto& term : terms_of(n)) {
        auto [coef, factors] = split_term(term);
        MonomialKey key;
        std::vector<Expression> rest;
        for (const auto& [base, k] : factor_powers(factors)) {
            if (base == z || base == zp) {
                if (k < 0) throw std::invalid_argument("collect: negative power of z or z'");
                (base == z ? key.z : key.zp) = k;
                continue;
            }
            if (mode == CollectMode::Strict && base == zeta && k > 0) {
                key.zeta = k;
                continue;
            }
            if (contains(base, z) || contains(base, zp))
                throw std::invalid_argument("collect: z occurs non-polynomially");
            if (mode == CollectMode::Strict && contains(base, zeta))
                throw std::invalid_argument("collect: coefficient depends on zeta non-polynomially (strict mode)");
            rest.push_back(k == 1 ? base : pow(base, k));
        }
        rest.insert(rest.begin(), Expression(coef));
        buckets[key].push_back(Expression::product(std::move(rest)));
    }
    std::map<MonomialKey, Expression> out;
    for (auto& [key, parts] : buckets) {
        Expression coef = normalize(Expression::sum(std::move(parts)));
        if (!coef.is_zero()) out.emplace(key, coef);
    }
    return out;
}

std::string to_string(CollectMode mode) { return mode == CollectMode::Strict ? "strict" : "paper"; }

CollectMode collect_mode_from_string(const std::string& s)
{
    if (s == "strict") return CollectMode::Strict;
    if (s == "paper") return CollectMode::Paper;
    throw std::invalid_argument("unknown collection mode '" + s + "'");
}

}  // namespace hermite
