#include "hermite/closure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

namespace hermite {

namespace {

Expression S(const char* name) { return Expression::symbol(name); }

}  // namespace

std::string to_string(ClosureKind kind)
{
    switch (kind) {
    case ClosureKind::ConstantDerivative:
        return "constant";
    case ClosureKind::ExactKummer:
        return "kummer";
    case ClosureKind::TrigDerivative:
        return "trig";
    }
    return "?";
}

ClosureKind closure_kind_from_string(const std::string& s)
{
    if (s == "constant") return ClosureKind::ConstantDerivative;
    if (s == "kummer") return ClosureKind::ExactKummer;
    if (s == "trig") return ClosureKind::TrigDerivative;
    throw std::invalid_argument("unknown closure case '" + s + "' (expected constant, kummer or trig)");
}

ClosureCase closure_formula(ClosureKind kind)
{
    const Expression zeta = S(sym::zeta);
    const Expression lambda = S(sym::lambda);
    const Expression c1 = S("C1");
    const Expression c2 = S("C2");
    const Expression root = sqrt(lambda);
    const Expression exponentials = c2 * exp(zeta * root) + c1 * exp(-(zeta * root));

    ClosureCase out;
    out.kind = kind;
    switch (kind) {
    case ClosureKind::ConstantDerivative: {
        const Expression h = S("h");
        out.z = normalize(exponentials - Expression(2) * h * zeta / lambda);
        out.zp = h;
        out.extra_unknowns = {"h"};
        break;
    }
    case ClosureKind::TrigDerivative: {
        const Expression A = S("A");
        const Expression B = S("B");
        const Expression l1 = lambda + Expression(1);
        const Expression particular =
            ((Expression(-2) * B * l1 * zeta - Expression(4) * A) * cos(zeta) -
             Expression(2) * (A * l1 * zeta - Expression(2) * B) * sin(zeta)) /
            pow(l1, 2);
        out.z = normalize(exponentials - particular);
        out.zp = normalize(A * sin(zeta) + B * cos(zeta));
        out.extra_unknowns = {"A", "B"};
        break;
    }
    case ClosureKind::ExactKummer: {
        const Expression a = Expression(Rational(1, 2)) + lambda / Expression(4);
        const Expression x = pow(zeta, 2);
        const Expression b = Expression(Rational(3, 2));
        const Expression b1 = Expression(Rational(5, 2));
        const Expression a1 = a + Expression(1);
        out.z = normalize(c1 * zeta * kummer_m(a, b, x) + c2 * zeta * kummer_u(a, b, x));
        out.zp = normalize(c1 * (kummer_m(a, b, x) + Expression(Rational(4, 3)) * a * x * kummer_m(a1, b1, x)) +
                           c2 * (kummer_u(a, b, x) - Expression(2) * a * x * kummer_u(a1, b1, x)));
        out.extra_unknowns = {"C1", "C2"};
        break;
    }
    }
    return out;
}

ClosureCase closure_formula(ClosureKind kind, const std::map<std::string, Expression>& replacements)
{
    ClosureCase out = closure_formula(kind);
    out.z = substitute(out.z, replacements);
    out.zp = substitute(out.zp, replacements);
    return out;
}

Expression closure_self_consistency(const ClosureCase& closure)
{
    return normalize(differentiate(closure.z, sym::zeta) - closure.zp);
}

namespace {

// Strict collection under z' = A sin(zeta) + B cos(zeta). After cos^2 -> 1 - sin^2
// the functions zeta^k sin^p cos^q (q <= 1) are linearly independent, so each
// coefficient must vanish. The key's zp slot holds 2p + q.
std::vector<std::pair<MonomialKey, Expression>> collect_trig_strict(const AlgebraicSystem& system,
                                                                    const ClosureCase& closure)
{
    const Expression s = Expression::symbol("sin_zeta"), c = Expression::symbol("cos_zeta");
    const Expression zeta = Expression::symbol(sym::zeta);
    if (closure.zp != normalize(Expression::symbol("A") * sin(zeta) + Expression::symbol("B") * cos(zeta)))
        throw std::invalid_argument("strict trig collection needs z' = A*sin(zeta) + B*cos(zeta)");
    const Expression closed = substitute(recombine(system), Expression::deriv(sym::z, 1),
                                         Expression::symbol("A") * s + Expression::symbol("B") * c);
    std::vector<std::pair<MonomialKey, Expression>> out;
    for (const auto& [zkey, coef] : collect(closed, CollectMode::Paper)) {
        // Reuse the (z, z', zeta) collector with sin -> z and cos -> z'.
        const Expression as_z = substitute(coef, {{"sin_zeta", Expression::fn(sym::z)},
                                                  {"cos_zeta", Expression::deriv(sym::z, 1)}});
        std::map<MonomialKey, Expression> terms = collect(as_z, CollectMode::Strict);
        int top = 0;
        for (const auto& [k, e] : terms) top = std::max(top, k.zp);
        for (int q = top; q >= 2; --q) {
            for (auto it = terms.begin(); it != terms.end();) {
                if (it->first.zp != q) {
                    ++it;
                    continue;
                }
                const MonomialKey lower{it->first.z, q - 2, it->first.zeta};
                const MonomialKey raised{it->first.z + 2, q - 2, it->first.zeta};
                terms[lower] = normalize(terms[lower] + it->second);
                terms[raised] = normalize(terms[raised] - it->second);
                it = terms.erase(it);
            }
        }
        for (const auto& [k, e] : terms)
            if (!e.is_zero()) out.emplace_back(MonomialKey{zkey.z, 2 * k.z + k.zp, k.zeta}, e);
    }
    return out;
}

}  // namespace

AlgebraicSystem apply_closure(const AlgebraicSystem& system, const ClosureCase& closure)
{
    AlgebraicSystem out;
    out.mode = system.mode;
    if (closure.kind == ClosureKind::ExactKummer && system.mode == CollectMode::Strict) {
        // The strict system already holds for every solution of the Hermite
        // equation, the exact one included; z' stays a collection variable.
        out.equations = system.equations;
    } else if (closure.kind == ClosureKind::TrigDerivative && system.mode == CollectMode::Strict) {
        out.equations = collect_trig_strict(system, closure);
    } else {
        const Expression closed = substitute(recombine(system), Expression::deriv(sym::z, 1), closure.zp);
        for (auto& [key, coef] : collect(closed, system.mode)) out.equations.emplace_back(key, coef);
    }
    out.unknowns = system.unknowns;
    for (const auto& u : closure.extra_unknowns)
        if (std::find(out.unknowns.begin(), out.unknowns.end(), u) == out.unknowns.end()) out.unknowns.push_back(u);
    return out;
}

ClosureEvaluator::ClosureEvaluator(const ClosureCase& closure) : kind_(closure.kind)
{
    if (kind_ == ClosureKind::ExactKummer) return;
    // One variant per pattern of vanishing C1/C2, so that sqrt(lambda) is only
    // needed when an exponential term is present.
    for (int mask = 0; mask < 4; ++mask) {
        std::map<std::string, Expression> zeros;
        if (mask & 1) zeros.emplace("C1", Expression(0));
        if (mask & 2) zeros.emplace("C2", Expression(0));
        Variant& v = variants_[static_cast<std::size_t>(mask)];
        v.z = substitute(closure.z, zeros);
        v.dz = differentiate(v.z, sym::zeta);
        v.d2z = differentiate(v.dz, sym::zeta);
    }
}

specfun::HermiteValue ClosureEvaluator::operator()(const Bindings& bindings, double zeta) const
{
    auto get = [&](const char* name) -> double {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw EvaluationError(std::string("closure: unbound symbol ") + name);
        return it->second;
    };
    const double lambda = get(sym::lambda);
    const double c1 = get("C1");
    const double c2 = get("C2");
    if (kind_ == ClosureKind::ExactKummer) return specfun::hermite_solution(lambda, c1, c2, zeta);

    if (kind_ == ClosureKind::ConstantDerivative && lambda == 0.0)
        throw specfun::DomainError("constant-derivative closure requires lambda != 0");
    if (kind_ == ClosureKind::TrigDerivative && lambda == -1.0)
        throw specfun::DomainError("trigonometric closure requires lambda != -1");
    const int mask = (c1 == 0.0 ? 1 : 0) | (c2 == 0.0 ? 2 : 0);
    if (lambda < 0.0 && mask != 3)
        throw specfun::DomainError("closure formula needs sqrt(lambda) with lambda < 0 (non-real)");

    const Variant& v = variants_[static_cast<std::size_t>(mask)];
    Bindings b = bindings;
    b[sym::zeta] = zeta;
    return {evaluate(v.z, b), evaluate(v.dz, b), evaluate(v.d2z, b)};
}

ZFunction closure_evaluator(const ClosureCase& closure, const Bindings& bindings)
{
    auto prepared = std::make_shared<const ClosureEvaluator>(closure);
    // Surface domain errors at construction rather than at the first point.
    (*prepared)(bindings, 1.0);
    return [prepared, bindings](double zeta) { return (*prepared)(bindings, zeta); };
}

}  // namespace hermite
