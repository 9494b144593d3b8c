#pragma once

#include "hermite/ansatz.hpp"
#include "hermite/expr.hpp"
#include "hermite/specfun.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace hermite {

enum class ClosureKind { ConstantDerivative, ExactKummer, TrigDerivative };

std::string to_string(ClosureKind kind);
/// Accepts "constant", "kummer" or "trig".
ClosureKind closure_kind_from_string(const std::string& s);

/// An assumption on z' together with the z(zeta) formula that accompanies it.
/// For the constant and trigonometric cases `zp` is the assumed form (h, or
/// A sin + B cos), not the derivative of `z`.
struct ClosureCase {
    ClosureKind kind = ClosureKind::ConstantDerivative;
    Expression z;
    Expression zp;
    std::vector<std::string> extra_unknowns;
};

/// Symbolic formulas in lambda, C1, C2 and h (constant) or A, B (trig).
ClosureCase closure_formula(ClosureKind kind);
/// Same, with some symbols replaced.
ClosureCase closure_formula(ClosureKind kind, const std::map<std::string, Expression>& replacements);

/// d/dzeta of the z formula minus the assumed z'.
Expression closure_self_consistency(const ClosureCase& closure);

/// Replaces z' by the closure's z' in every equation and re-collects in z
/// (and zeta in strict mode). Adds the closure's unknowns. The exact Kummer
/// closure leaves a strict-mode system unchanged. Strict trig collection also
/// separates zeta^k sin^p cos^q (q <= 1); the key's zp slot then holds 2p + q.
AlgebraicSystem apply_closure(const AlgebraicSystem& system, const ClosureCase& closure);

/// z, z' and z'' of the closure's z formula at zeta, with the remaining symbols bound.
using ZFunction = std::function<specfun::HermiteValue(double zeta)>;

/// The closure's z formula with its zeta-derivatives prepared once; the
/// bindings may change from call to call. Throws specfun::DomainError for
/// lambda = 0 (constant), lambda = -1 (trig) and for lambda < 0 when an
/// exponential term is present (non-real).
class ClosureEvaluator {
public:
    explicit ClosureEvaluator(const ClosureCase& closure);
    specfun::HermiteValue operator()(const Bindings& bindings, double zeta) const;

private:
    struct Variant {
        Expression z, dz, d2z;
    };
    ClosureKind kind_;
    std::array<Variant, 4> variants_;
};

/// ClosureEvaluator with fixed bindings.
ZFunction closure_evaluator(const ClosureCase& closure, const Bindings& bindings);

}  // namespace hermite
