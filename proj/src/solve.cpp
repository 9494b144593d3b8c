#include "hermite/solve.hpp"

#include "hermite/parser.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace hermite {

namespace {

struct State {
    std::vector<Expression> eqs;
    std::map<std::string, Expression> assign;
    std::vector<Expression> nonzero;
    std::vector<Expression> assumptions;
    std::vector<std::string> trail;
};

class Pruned : public std::exception {};

// Coefficients of e as a polynomial in symbol v, or nullopt when v also
// occurs inside a function argument or a negative-power base.
std::optional<std::map<int, Expression>> poly_in(const Expression& e, const std::string& v)
{
    std::map<int, std::vector<Expression>> parts;
    for (const auto& term : terms_of(e)) {
        auto [coef, factors] = split_term(term);
        int deg = 0;
        std::vector<Expression> rest{Expression(coef)};
        for (const auto& [base, k] : factor_powers(factors)) {
            if (base.is_symbol(v)) {
                if (k < 0) return std::nullopt;
                deg = k;
            } else if (contains_symbol(base, v)) {
                return std::nullopt;
            } else {
                rest.push_back(k == 1 ? base : pow(base, k));
            }
        }
        parts[deg].push_back(Expression::product(std::move(rest)));
    }
    std::map<int, Expression> out;
    for (auto& [d, p] : parts) out.emplace(d, normalize(Expression::sum(std::move(p))));
    return out;
}

std::optional<Integer> exact_iroot(const Integer& v, int j)
{
    if (v < 0) return std::nullopt;
    const double guess = std::round(std::pow(static_cast<double>(v), 1.0 / j));
    for (Integer r = Integer(std::max(0.0, guess - 1.0)); r <= Integer(guess + 1.0); ++r) {
        Integer p = 1;
        for (int i = 0; i < j; ++i) p *= r;
        if (p == v) return r;
    }
    return std::nullopt;
}

// Principal j-th root of a single-term expression whose coefficient is a
// nonnegative rational j-th power and whose factor exponents divide by j.
std::optional<Expression> monomial_root(const Expression& e, int j)
{
    const auto terms = terms_of(e);
    if (terms.size() != 1) return std::nullopt;
    auto [coef, factors] = split_term(terms.front());
    if (coef < 0) return std::nullopt;
    auto num = exact_iroot(boost::multiprecision::numerator(coef), j);
    auto den = exact_iroot(boost::multiprecision::denominator(coef), j);
    if (!num || !den) return std::nullopt;
    std::vector<Expression> out{Expression(Rational(*num, *den))};
    for (const auto& [base, k] : factor_powers(factors)) {
        if (k % j != 0) return std::nullopt;
        out.push_back(pow(base, k / j));
    }
    return normalize(Expression::product(std::move(out)));
}

std::optional<Expression> monomial_sqrt(const Expression& e) { return monomial_root(e, 2); }

std::vector<Rational> rational_roots(const std::map<int, Expression>& coeffs)
{
    // Integer coefficients after clearing denominators.
    const int deg = coeffs.rbegin()->first;
    std::vector<Integer> a(static_cast<std::size_t>(deg) + 1, 0);
    Integer lcm = 1;
    for (const auto& [d, c] : coeffs) {
        const Integer den = boost::multiprecision::denominator(c.value());
        lcm = lcm / boost::multiprecision::gcd(lcm, den) * den;
    }
    for (const auto& [d, c] : coeffs)
        a[static_cast<std::size_t>(d)] = boost::multiprecision::numerator(c.value() * Rational(lcm));

    std::vector<Rational> roots;
    std::size_t low = 0;
    while (low < a.size() && a[low] == 0) ++low;
    if (low > 0) roots.emplace_back(0);
    if (low >= a.size() - 1) return roots;

    auto divisors = [](Integer v) {
        if (v < 0) v = -v;
        std::vector<Integer> out;
        for (Integer d = 1; d * d <= v; ++d)
            if (v % d == 0) {
                out.push_back(d);
                if (d * d != v) out.push_back(v / d);
            }
        return out;
    };
    const Integer a0 = a[low];
    const Integer an = a.back();
    // Coefficients with tens of digits make divisor enumeration pointless.
    if (boost::multiprecision::abs(a0) > Integer(1000000) || boost::multiprecision::abs(an) > Integer(1000000))
        return roots;
    std::set<Rational> seen;
    for (const auto& p : divisors(a0))
        for (const auto& q : divisors(an))
            for (int s : {1, -1}) {
                Rational r(Integer(s) * p, q);
                if (!seen.insert(r).second) continue;
                Rational acc = 0;
                for (std::size_t i = a.size(); i-- > 0;) acc = acc * r + Rational(a[i]);
                if (acc == 0) roots.push_back(r);
            }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// Bases that divide every term, with their smallest positive exponent.
std::map<Expression, int, ExprLess> common_factors(const Expression& e)
{
    std::map<Expression, int, ExprLess> common;
    bool first = true;
    for (const auto& term : terms_of(e)) {
        std::map<Expression, int, ExprLess> here;
        for (const auto& [base, k] : factor_powers(split_term(term).second))
            if (k > 0) here[base] = k;
        if (first) {
            common = std::move(here);
            first = false;
            continue;
        }
        for (auto it = common.begin(); it != common.end();) {
            auto f = here.find(it->first);
            if (f == here.end()) {
                it = common.erase(it);
            } else {
                it->second = std::min(it->second, f->second);
                ++it;
            }
        }
    }
    return common;
}

std::string describe(const std::string& v, const Expression& value) { return v + " = " + render(value); }

class Solver {
public:
    Solver(const AlgebraicSystem& system, const SolveOptions& options) : system_(system), options_(options)
    {
        // Elimination preference: model parameters and lambda before the
        // ansatz coefficients, higher coefficients first.
        std::vector<std::string> gs;
        for (const auto& u : system.unknowns) {
            unknown_set_.insert(u);
            if (u.size() > 1 && u[0] == 'g' && std::all_of(u.begin() + 1, u.end(), ::isdigit))
                gs.push_back(u);
            else
                order_.push_back(u);
        }
        order_.insert(order_.end(), gs.rbegin(), gs.rend());
    }

    SolveResult run()
    {
        State s;
        s.nonzero = options_.nonzero;
        for (const auto& [key, eq] : system_.equations) s.eqs.push_back(eq);
        try {
            if (simplify(s)) explore(std::move(s));
        } catch (const Pruned&) {
            result_.pruned.push_back("initial system violates a nonzero constraint");
        }
        finish();
        return std::move(result_);
    }

private:
    const AlgebraicSystem& system_;
    SolveOptions options_;
    std::set<std::string> unknown_set_;
    std::vector<std::string> order_;
    SolveResult result_;
    std::size_t visited_ = 0;
    bool budget_hit_ = false;

    bool has_unknowns(const Expression& e) const
    {
        for (const auto& s : free_symbols(e))
            if (unknown_set_.count(s)) return true;
        return false;
    }

    std::vector<std::string> unknowns_of(const Expression& e) const
    {
        std::vector<std::string> out;
        for (const auto& s : free_symbols(e))
            if (unknown_set_.count(s)) out.push_back(s);
        std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
        return out;
    }

    std::size_t rank(const std::string& v) const
    {
        return static_cast<std::size_t>(std::find(order_.begin(), order_.end(), v) - order_.begin());
    }

    bool known_nonzero(const State& s, const Expression& e) const
    {
        if (e.is_constant()) return !e.is_zero();
        if (!has_unknowns(e)) return true;
        for (const auto& n : s.nonzero)
            if (n == e || equivalent(n, e)) return true;
        return false;
    }

    // Drops common factors known to be nonzero and scales to a monic leading term.
    Expression reduce_equation(const State& s, const Expression& eq) const
    {
        Expression e = numerator(eq);
        if (e.is_zero() || e.is_constant()) return e;
        const auto common = common_factors(e);
        std::vector<Expression> factors{e};
        for (const auto& [base, k] : common)
            if (known_nonzero(s, base)) factors.push_back(pow(base, -k));
        e = normalize(Expression::product(std::move(factors)));
        const Rational lead = split_term(terms_of(e).front()).first;
        return normalize(e * Expression(Rational(1) / lead));
    }

    bool simplify(State& s) const
    {
        std::vector<Expression> out;
        std::set<Expression, ExprLess> seen;
        for (const auto& eq : s.eqs) {
            Expression e = reduce_equation(s, eq);
            if (e.is_zero()) continue;
            if (!has_unknowns(e)) return false;
            if (seen.insert(e).second) out.push_back(e);
        }
        std::stable_sort(out.begin(), out.end(), [](const Expression& a, const Expression& b) {
            return terms_of(a).size() < terms_of(b).size();
        });
        s.eqs = std::move(out);
        return true;
    }

    void assign(State& s, const std::string& v, const Expression& raw) const
    {
        const Expression value = normalize(raw);
        const std::map<std::string, Expression> rule{{v, value}};
        try {
            for (auto& [k, e] : s.assign) e = substitute(e, rule);
            for (auto& e : s.eqs) e = substitute(e, rule);
            for (auto& n : s.nonzero) {
                n = substitute(n, rule);
                if (is_zero(n)) throw Pruned();
            }
            for (auto& n : s.assumptions) {
                n = substitute(n, rule);
                if (is_zero(n)) throw Pruned();
            }
        } catch (const DivisionByZero&) {
            throw Pruned();
        }
        s.assign[v] = value;
        s.trail.push_back(describe(v, value));
    }

    void assume_nonzero(State& s, const Expression& e) const
    {
        if (e.is_constant()) return;
        s.nonzero.push_back(e);
        s.assumptions.push_back(e);
    }

    // Continue with a child state; pruned or inconsistent children are dropped.
    template <typename F>
    void branch(const State& parent, F&& step, const std::string& label)
    {
        State child = parent;
        try {
            step(child);
        } catch (const Pruned&) {
            result_.pruned.push_back(label + ": violates a nonzero constraint");
            return;
        }
        if (!simplify(child)) {
            result_.pruned.push_back(label + ": inconsistent");
            return;
        }
        explore(std::move(child));
    }

    void emit(State s)
    {
        SolutionBranch b;
        b.assignments = std::move(s.assign);
        for (const auto& u : system_.unknowns)
            if (!b.assignments.count(u)) b.free.push_back(u);
        b.provenance = std::move(s.trail);
        b.assumptions = std::move(s.assumptions);
        b.mode = system_.mode;
        result_.branches.push_back(std::move(b));
    }

    void give_up(const State& s, const std::string& why)
    {
        result_.incomplete = true;
        std::string text = why + ":";
        for (const auto& e : s.eqs) text += " [" + render(e) + " = 0]";
        result_.unsolved.push_back(text);
    }

    void explore(State s)
    {
        if (++visited_ > options_.max_branches) {
            if (!budget_hit_) give_up(s, "branch budget exhausted");
            budget_hit_ = true;
            return;
        }
        if (s.eqs.empty()) {
            emit(std::move(s));
            return;
        }
        if (try_factor(s, true)) return;
        if (try_linear(s, /*constant_only=*/true)) return;
        if (try_factor(s, false)) return;
        if (try_linear(s, false)) return;
        if (try_quadratic(s, true)) return;
        if (try_univariate(s)) return;
        if (try_split_linear(s)) return;
        if (try_quadratic(s, false)) return;
        give_up(s, "no elimination strategy applies");
    }

    // Branch on the common factors of an equation that contain unknowns.
    bool try_factor(const State& s, bool monomials_only)
    {
        for (std::size_t i = 0; i < s.eqs.size(); ++i) {
            const Expression& eq = s.eqs[i];
            const auto terms = terms_of(eq);
            if (monomials_only && terms.size() != 1) continue;

            std::vector<Expression> factors;
            std::vector<Expression> divide{eq};
            for (const auto& [base, k] : common_factors(eq)) {
                if (!has_unknowns(base)) continue;
                factors.push_back(base);
                divide.push_back(pow(base, -k));
            }
            if (factors.empty()) continue;
            const Expression rest = normalize(Expression::product(std::move(divide)));
            if (has_unknowns(rest)) factors.push_back(rest);
            if (factors.size() == 1 && terms.size() > 1 && factors.front() == rest) continue;

            std::vector<Expression> others;
            for (std::size_t j = 0; j < s.eqs.size(); ++j)
                if (j != i) others.push_back(s.eqs[j]);
            for (std::size_t k = 0; k < factors.size(); ++k) {
                const Expression f = factors[k];
                if (known_nonzero(s, f)) continue;
                branch(
                    s,
                    [&](State& child) {
                        child.eqs = others;
                        for (std::size_t m = 0; m < k; ++m) assume_nonzero(child, factors[m]);
                        if (f.kind() == Kind::Symbol)
                            assign(child, f.name(), Expression(0));
                        else
                            child.eqs.push_back(f);
                    },
                    render(f) + " = 0");
            }
            return true;
        }
        return false;
    }

    // v = -R/Q for an equation linear in v whose coefficient Q is free of
    // unknowns (and, with constant_only, a plain number).
    bool try_linear(const State& s, bool constant_only)
    {
        for (const auto& eq : s.eqs) {
            for (const auto& v : unknowns_of(eq)) {
                auto p = poly_in(eq, v);
                if (!p || p->rbegin()->first != 1) continue;
                const Expression q = p->at(1);
                if (constant_only ? !q.is_constant() : has_unknowns(q)) continue;
                const Expression r = p->count(0) ? p->at(0) : Expression(0);
                branch(
                    s,
                    [&](State& child) {
                        assume_nonzero(child, q);
                        assign(child, v, -(r / q));
                    },
                    v + " from " + render(eq));
                return true;
            }
        }
        return false;
    }

    // Q v + R = 0 with Q depending on unknowns: {Q = 0, R = 0} or v = -R/Q.
    bool try_split_linear(const State& s)
    {
        for (const auto& eq : s.eqs) {
            for (const auto& v : unknowns_of(eq)) {
                auto p = poly_in(eq, v);
                if (!p || p->rbegin()->first != 1) continue;
                const Expression q = p->at(1);
                const Expression r = p->count(0) ? p->at(0) : Expression(0);
                if (!known_nonzero(s, q))
                    branch(
                        s,
                        [&](State& child) {
                            child.eqs.push_back(q);
                            child.eqs.push_back(r);
                        },
                        render(q) + " = 0");
                branch(
                    s,
                    [&](State& child) {
                        assume_nonzero(child, q);
                        assign(child, v, -(r / q));
                    },
                    v + " from " + render(eq));
                return true;
            }
        }
        return false;
    }

    // a v^2 + b v + c = 0 with a free of unknowns.
    bool try_quadratic(const State& s, bool univariate)
    {
        for (const auto& eq : s.eqs) {
            const auto vars = unknowns_of(eq);
            if (univariate && vars.size() != 1) continue;
            for (const auto& v : vars) {
                auto p = poly_in(eq, v);
                if (!p || p->rbegin()->first != 2 || has_unknowns(p->at(2))) continue;
                const auto coeffs = dense(*p);
                branch_on_roots(s, v, coeffs.back(), quadratic_roots(coeffs), render(eq));
                return true;
            }
        }
        return false;
    }

    // Polynomials in a single unknown of degree 3..max_degree. Candidate roots
    // come from the rational root theorem (numeric coefficients) or from
    // monomial radicals of the constant-to-leading ratio (symbolic ones); each
    // found root is deflated and a linear or quadratic remainder is solved by formula.
    bool try_univariate(const State& s)
    {
        for (const auto& eq : s.eqs) {
            const auto vars = unknowns_of(eq);
            if (vars.size() != 1) continue;
            const std::string& v = vars.front();
            auto p = poly_in(eq, v);
            if (!p) continue;
            const int deg = p->rbegin()->first;
            if (deg < 3) continue;
            if (deg > options_.max_degree) {
                State leftover = s;
                leftover.eqs = {eq};
                give_up(leftover, "degree above the elimination ceiling");
                return true;
            }
            std::vector<Expression> coeffs = dense(*p);
            const Expression lead = coeffs.back();
            std::vector<Expression> roots;
            for (const auto& r : candidate_roots(coeffs)) {
                bool found = false;
                while (coeffs.size() > 1 && is_zero(horner(coeffs, r))) {
                    coeffs = deflate(coeffs, r);
                    found = true;
                }
                if (found) roots.push_back(r);
            }
            const std::size_t left = coeffs.size() - 1;
            if (left == 1) roots.push_back(normalize(-(coeffs[0] / coeffs[1])));
            if (left == 2) {
                for (const auto& r : quadratic_roots(coeffs)) roots.push_back(r);
            }
            if (left >= 3) {
                State leftover = s;
                std::vector<Expression> terms;
                for (std::size_t k = 0; k < coeffs.size(); ++k)
                    terms.push_back(coeffs[k] * pow(Expression::symbol(v), static_cast<int>(k)));
                leftover.eqs = {normalize(Expression::sum(std::move(terms)))};
                give_up(leftover, "no closed-form roots for " + v);
            }
            branch_on_roots(s, v, lead, roots, render(eq));
            return true;
        }
        return false;
    }

    static std::vector<Expression> dense(const std::map<int, Expression>& p)
    {
        std::vector<Expression> out(static_cast<std::size_t>(p.rbegin()->first) + 1, Expression(0));
        for (const auto& [k, c] : p) out[static_cast<std::size_t>(k)] = c;
        return out;
    }

    static Expression horner(const std::vector<Expression>& coeffs, const Expression& r)
    {
        std::vector<Expression> terms;
        for (std::size_t k = 0; k < coeffs.size(); ++k) terms.push_back(coeffs[k] * pow(r, static_cast<int>(k)));
        return normalize(Expression::sum(std::move(terms)));
    }

    // Synthetic division by (v - r).
    static std::vector<Expression> deflate(const std::vector<Expression>& coeffs, const Expression& r)
    {
        std::vector<Expression> q(coeffs.size() - 1, Expression(0));
        Expression carry(0);
        for (std::size_t k = coeffs.size() - 1; k >= 1; --k) {
            carry = normalize(carry * r + coeffs[k]);
            q[k - 1] = carry;
        }
        return q;
    }

    static std::vector<Expression> quadratic_roots(const std::vector<Expression>& c)
    {
        const Expression two_a = Expression(2) * c[2];
        const Expression disc = normalize(c[1] * c[1] - Expression(4) * c[2] * c[0]);
        if (disc.is_zero()) return {normalize(-(c[1] / two_a))};
        if (disc.is_constant() && disc.value() < 0) return {};
        const auto root = monomial_sqrt(disc);
        const Expression sq = root ? *root : sqrt(disc);
        return {normalize((-c[1] + sq) / two_a), normalize((-c[1] - sq) / two_a)};
    }

    static std::vector<Expression> candidate_roots(const std::vector<Expression>& coeffs)
    {
        std::vector<Expression> out;
        std::size_t low = 0;
        while (low < coeffs.size() && coeffs[low].is_zero()) ++low;
        if (low > 0) out.emplace_back(0);
        const bool numeric = std::all_of(coeffs.begin(), coeffs.end(), [](const Expression& e) { return e.is_constant(); });
        if (numeric) {
            std::map<int, Expression> p;
            for (std::size_t k = low; k < coeffs.size(); ++k)
                if (!coeffs[k].is_zero()) p.emplace(static_cast<int>(k - low), coeffs[k]);
            if (p.size() > 1)
                for (const auto& r : rational_roots(p))
                    if (r != 0) out.emplace_back(r);
            return out;
        }
        if (low + 1 >= coeffs.size()) return out;
        const Expression ratio = normalize(coeffs[low] / coeffs.back());
        const int span = static_cast<int>(coeffs.size() - 1 - low);
        for (int j = 1; j <= span; ++j)
            for (const Expression& target : {ratio, normalize(-ratio)})
                if (auto r = monomial_root(target, j)) {
                    out.push_back(*r);
                    out.push_back(normalize(-*r));
                }
        return out;
    }

    void branch_on_roots(const State& s, const std::string& v, const Expression& lead,
                         const std::vector<Expression>& roots, const std::string& source)
    {
        if (roots.empty()) result_.pruned.push_back(v + " from " + source + ": no real root");
        std::set<Expression, ExprLess> seen;
        for (const auto& r : roots) {
            if (!seen.insert(r).second) continue;
            branch(
                s,
                [&](State& child) {
                    assume_nonzero(child, lead);
                    assign(child, v, r);
                },
                describe(v, r));
        }
    }

    bool same_branch(const SolutionBranch& a, const SolutionBranch& b) const
    {
        if (a.assignments.size() != b.assignments.size()) return false;
        for (const auto& [k, v] : a.assignments) {
            auto it = b.assignments.find(k);
            if (it == b.assignments.end() || !(it->second == v)) return false;
        }
        return true;
    }

    // a's assignments are a strict subset of b's.
    bool subsumes(const SolutionBranch& a, const SolutionBranch& b) const
    {
        if (a.assignments.size() >= b.assignments.size()) return false;
        for (const auto& [k, v] : a.assignments) {
            auto it = b.assignments.find(k);
            if (it == b.assignments.end() || !(it->second == v)) return false;
        }
        return true;
    }

    void check(const SolutionBranch& b) const
    {
        std::mt19937_64 rng(20240607);
        std::uniform_real_distribution<double> dist(0.35, 1.65);
        for (const auto& [key, eq] : system_.equations) {
            const Expression r = apply_branch(eq, b);
            if (is_zero(r)) continue;
            int evaluated = 0;
            for (int attempt = 0; attempt < 8 && evaluated < 3; ++attempt) {
                Bindings values;
                for (const auto& name : free_symbols(r)) values[name] = dist(rng);
                try {
                    double scale = 0.0;
                    for (const auto& term : terms_of(r)) scale += std::abs(evaluate(term, values));
                    const double v = evaluate(r, values);
                    ++evaluated;
                    if (std::abs(v) > 1e-9 * std::max(1.0, scale))
                        throw std::logic_error("branch_solve: back-substitution left the residual " + render(r));
                } catch (const EvaluationError&) {
                    continue;
                }
            }
        }
    }

    void finish()
    {
        auto& bs = result_.branches;
        std::vector<SolutionBranch> unique;
        for (auto& b : bs)
            if (std::none_of(unique.begin(), unique.end(), [&](const SolutionBranch& u) { return same_branch(u, b); }))
                unique.push_back(std::move(b));
        std::vector<bool> dominated(unique.size(), false);
        for (std::size_t i = 0; i < unique.size(); ++i)
            for (std::size_t j = 0; j < unique.size() && !dominated[i]; ++j)
                dominated[i] = i != j && subsumes(unique[j], unique[i]);
        std::vector<SolutionBranch> kept;
        for (std::size_t i = 0; i < unique.size(); ++i) {
            if (dominated[i])
                result_.pruned.push_back("subsumed: " + unique[i].provenance.back());
            else
                kept.push_back(std::move(unique[i]));
        }
        for (const auto& b : kept) check(b);
        bs = std::move(kept);
    }
};

}  // namespace

Expression apply_branch(const Expression& e, const SolutionBranch& branch)
{
    Expression out = substitute(e, branch.assignments);
    for (int pass = 0; pass < 8; ++pass) {
        bool again = false;
        for (const auto& name : free_symbols(out))
            again = again || branch.assignments.count(name);
        if (!again) break;
        out = substitute(out, branch.assignments);
    }
    return out;
}

SolveResult branch_solve(const AlgebraicSystem& system, const SolveOptions& options)
{
    return Solver(system, options).run();
}

// --- Newton ------------------------------------------------------------------

namespace {

struct NumericSystem {
    std::vector<std::string> vars;
    std::vector<Expression> f;
    std::vector<std::vector<Expression>> jac;
    Bindings fixed;

    Bindings point(const Eigen::VectorXd& x) const
    {
        Bindings b = fixed;
        for (std::size_t i = 0; i < vars.size(); ++i) b[vars[i]] = x[static_cast<Eigen::Index>(i)];
        return b;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x) const
    {
        const Bindings b = point(x);
        Eigen::VectorXd r(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i) r[static_cast<Eigen::Index>(i)] = evaluate(f[i], b);
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const
    {
        const Bindings b = point(x);
        Eigen::MatrixXd m(static_cast<Eigen::Index>(f.size()), static_cast<Eigen::Index>(vars.size()));
        for (std::size_t i = 0; i < f.size(); ++i)
            for (std::size_t j = 0; j < vars.size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = evaluate(jac[i][j], b);
        return m;
    }
};

double norm_inf(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

NewtonResult newton_from(const NumericSystem& sys, Eigen::VectorXd x, const NewtonOptions& opt, std::mt19937_64& rng)
{
    NewtonResult out;
    int perturbations = 0;
    std::normal_distribution<double> kick(0.0, 1e-3);
    try {
        Eigen::VectorXd r = sys.residual(x);
        for (int it = 0; it < opt.max_iterations; ++it) {
            out.iterations = it;
            if (!r.allFinite()) break;
            if (norm_inf(r) < opt.tolerance) {
                out.converged = true;
                break;
            }
            const Eigen::MatrixXd j = sys.jacobian(x);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(j);
            if (qr.rank() < std::min<Eigen::Index>(j.rows(), j.cols())) {
                if (++perturbations > 3) {
                    out.message = "singular Jacobian";
                    break;
                }
                for (Eigen::Index k = 0; k < x.size(); ++k) x[k] += kick(rng);
                r = sys.residual(x);
                continue;
            }
            const Eigen::VectorXd dx = qr.solve(-r);
            double step = 1.0;
            Eigen::VectorXd trial = x + dx;
            Eigen::VectorXd rt = sys.residual(trial);
            while (!(rt.allFinite() && norm_inf(rt) < norm_inf(r)) && step > 1.0 / 1024.0) {
                step *= 0.5;
                trial = x + step * dx;
                rt = sys.residual(trial);
            }
            x = trial;
            r = rt;
            out.iterations = it + 1;
        }
        if (!out.converged && r.allFinite() && norm_inf(r) < opt.tolerance) out.converged = true;
        out.residual = r.allFinite() ? norm_inf(r) : std::numeric_limits<double>::infinity();
    } catch (const EvaluationError& e) {
        out.message = e.what();
        out.residual = std::numeric_limits<double>::infinity();
    }
    if (!out.converged && out.message.empty()) out.message = "diverged";
    for (std::size_t i = 0; i < sys.vars.size(); ++i) out.point[sys.vars[i]] = x[static_cast<Eigen::Index>(i)];
    return out;
}

}  // namespace

NewtonResult newton_refine(const AlgebraicSystem& system, const Bindings& bindings,
                           const std::optional<Bindings>& seed, const NewtonOptions& options)
{
    NumericSystem sys;
    sys.fixed = bindings;
    for (const auto& u : system.unknowns)
        if (!bindings.count(u)) sys.vars.push_back(u);
    for (const auto& [key, eq] : system.equations) {
        sys.f.push_back(eq);
        std::vector<Expression> row;
        for (const auto& v : sys.vars) row.push_back(differentiate(eq, v));
        sys.jac.push_back(std::move(row));
    }

    std::mt19937_64 rng(options.seed);
    const auto n = static_cast<Eigen::Index>(sys.vars.size());
    if (seed) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto it = seed->find(sys.vars[static_cast<std::size_t>(i)]);
            x[i] = it == seed->end() ? 0.0 : it->second;
        }
        return newton_from(sys, x, options, rng);
    }
    std::uniform_real_distribution<double> start(-options.start_radius, options.start_radius);
    NewtonResult best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int k = 0; k < options.starts; ++k) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) x[i] = start(rng);
        NewtonResult r = newton_from(sys, x, options, rng);
        if (r.converged) return r;
        if (r.residual < best.residual || k == 0) best = r;
    }
    best.message = "no start converged (" + best.message + ")";
    return best;
}

}  // namespace hermite
