#include "hermite/reduce.hpp"

#include <stdexcept>

namespace hermite {

ReducedODE apply_wave_transform(const ModelSpec& model, const TravelingWaveFrame& frame)
{
    if (frame.sigma != 1 && frame.sigma != -1) throw std::invalid_argument("wave frame sign must be +1 or -1");
    if (normalize(frame.c).is_zero()) throw std::invalid_argument("wave speed c must be nonzero");
    if (normalize(frame.mu).is_zero()) throw std::invalid_argument("wave scale mu must be nonzero");

    const Expression lhs = model.bound_lhs();
    const Expression dx = frame.mu;
    const Expression dt = Expression(frame.sigma) * frame.c * frame.mu;

    std::function<Expression(const Expression&)> rewrite = [&](const Expression& e) -> Expression {
        switch (e.kind()) {
        case Kind::FnAtom: {
            if (e.name() != model.unknown) throw std::invalid_argument("unexpected function " + e.name() + " in model");
            std::vector<Expression> factors;
            int order = 0;
            for (const auto& [var, k] : e.orders()) {
                if (var == sym::x) factors.push_back(pow(dx, k));
                else if (var == sym::t) factors.push_back(pow(dt, k));
                else throw std::invalid_argument("u must depend on x and t only");
                order += k;
            }
            factors.push_back(Expression::deriv(model.unknown, order));
            return Expression::product(std::move(factors));
        }
        case Kind::Power:
            return pow(rewrite(e.children()[0]), e.exponent());
        case Kind::Product:
        case Kind::Sum:
        case Kind::Apply: {
            std::vector<Expression> ch;
            for (const auto& c : e.children()) ch.push_back(rewrite(c));
            if (e.kind() == Kind::Product) return Expression::product(std::move(ch));
            if (e.kind() == Kind::Sum) return Expression::sum(std::move(ch));
            return Expression::apply(e.name(), std::move(ch));
        }
        default:
            return e;
        }
    };

    ReducedODE out;
    out.lhs = normalize(rewrite(lhs));
    if (contains_symbol(out.lhs, sym::x) || contains_symbol(out.lhs, sym::t))
        throw std::invalid_argument("equation depends explicitly on x or t; no travelling-wave reduction");
    out.frame = frame;
    out.model = model;
    out.order = std::max(0, max_derivative_order(out.lhs, model.unknown));
    return out;
}

}  // namespace hermite
