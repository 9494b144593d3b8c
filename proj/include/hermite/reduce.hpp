#pragma once

#include "hermite/expr.hpp"
#include "hermite/parser.hpp"

namespace hermite {

/// zeta = mu * (x + sigma * c * t).
struct TravelingWaveFrame {
    Expression c = Expression::symbol(sym::c);
    Expression mu = Expression::symbol(sym::mu);
    int sigma = -1;
};

/// Ordinary differential equation in u(zeta): lhs = 0.
struct ReducedODE {
    Expression lhs;
    TravelingWaveFrame frame;
    ModelSpec model;
    int order = 0;
};

/// Maps d/dx -> mu d/dzeta and d/dt -> sigma*c*mu d/dzeta on every
/// derivative of u. No common factors are divided out.
ReducedODE apply_wave_transform(const ModelSpec& model, const TravelingWaveFrame& frame = {});

}  // namespace hermite
