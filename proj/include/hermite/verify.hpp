#pragma once

#include "hermite/closure.hpp"
#include "hermite/expr.hpp"
#include "hermite/parser.hpp"
#include "hermite/reduce.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hermite {

enum class Classification { Exact, ConditionallyExact, Inconsistent, OutOfDomain };

std::string to_string(Classification c);

struct Thresholds {
    double exact = 1e-8;
    double inconsistent = 1e-3;
};

/// Pure function of the statistics: exact when max_abs <= exact * scale,
/// inconsistent above inconsistent * scale. In between the result is
/// conditionally exact only if a parameter locus was exhibited, inconsistent
/// otherwise.
Classification classify(double max_abs, double scale, bool locus_exhibited, const Thresholds& thresholds = {});

/// Uniform nodes lo, ..., hi.
struct Grid1D {
    double lo = 0.1;
    double hi = 2.0;
    int points = 64;

    std::vector<double> nodes() const;
    std::string describe() const;
};

struct Grid2D {
    Grid1D x{1.0, 3.0, 16};
    Grid1D t{0.0, 1.0, 16};

    std::string describe() const;
};

struct ResidualReport {
    std::string target;
    std::string grid;
    double max_abs = 0.0;
    double median_abs = 0.0;
    /// Largest |term| seen on the grid.
    double scale = 0.0;
    int evaluated = 0;
    int failed = 0;
    Classification classification = Classification::Exact;
    /// Parameter locus on which the residual vanishes identically, if known.
    std::optional<std::string> locus;
    std::vector<std::string> notes;
};

/// Raised when more than 10% of the grid nodes cannot be evaluated.
class VerificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace fd {

/// Weights of the `order`-th derivative at 0 on the given offsets (unit spacing).
std::vector<double> fornberg_weights(int order, const std::vector<double>& offsets);

struct Stencil {
    int order = 1;
    std::vector<double> offsets;
    std::vector<double> weights;
};

/// Symmetric stencil on -half_width..half_width.
Stencil central(int order, int half_width);

/// Default half width: accuracy order 8 for first and second derivatives.
int default_half_width(int order);

double apply(const Stencil& s, const std::function<double(double)>& f, double x, double h);

/// Relative step base * max(1, |x|).
double step(double x, double base);

/// eps^(1/(p+k)) for a stencil of accuracy p = 2*half_width and derivative
/// order k: balances truncation against roundoff.
double order_step(int order, int half_width);

}  // namespace fd

enum class DerivativeMode { Analytic, FiniteDifference };

struct ResidualOptions {
    DerivativeMode mode = DerivativeMode::Analytic;
    /// Finite-difference step of the Hermite residual, relative to max(1, |node|).
    double step = 4e-3;
    /// Multiplies the order-adaptive steps of the PDE and reduced residuals.
    double step_factor = 1.0;
    Thresholds thresholds;
    std::optional<std::string> locus;
};

/// z with every parameter frozen at a node, plus lambda there.
struct FrozenHermite {
    ZFunction z;
    double lambda = 0.0;
};
using NodeFreezer = std::function<FrozenHermite(double zeta)>;

/// Residual z'' - 2 zeta z' - lambda z over the grid (>= 64 points).
ResidualReport ode_residual(const ZFunction& z, double lambda, const Grid1D& grid,
                            const ResidualOptions& options = {});
/// Same, with parameters that may change from node to node.
ResidualReport ode_residual(const NodeFreezer& at_node, const Grid1D& grid, const ResidualOptions& options = {});

/// The equation, frame, closure and ansatz degree a branch belongs to.
struct WaveSetup {
    ModelSpec model;
    TravelingWaveFrame frame;
    ClosureCase closure;
    int N = 1;
};

/// Point evaluation of u = sum g_i z^i for one set of assignments. Assigned
/// symbols override the bindings and may depend on zeta, x and t; they are
/// evaluated at each point. When c or mu depend on zeta, zeta = mu (x + sigma c t)
/// is solved at each (x, t).
class WaveEvaluator {
public:
    WaveEvaluator(WaveSetup setup, const std::map<std::string, Expression>& assignments, Bindings bindings);

    /// Symbols needed for u (and the model) that have no value.
    std::vector<std::string> unbound() const;

    /// Bindings plus every assigned symbol at the point. x and t may be absent.
    Bindings resolve(double zeta, const std::optional<std::pair<double, double>>& xt = std::nullopt) const;
    double zeta_at(double x, double t) const;
    double u(double x, double t) const;
    double u_of_zeta(double zeta) const;
    FrozenHermite frozen(double zeta) const;

    const WaveSetup& setup() const { return setup_; }

private:
    double u_from(const Bindings& b, double zeta) const;

    WaveSetup setup_;
    std::map<std::string, Expression> resolved_;
    Bindings bindings_;
    ClosureEvaluator closure_;
    Expression frame_c_, frame_mu_;
    bool implicit_zeta_ = false;
};

/// PDE residual of the assembled u(x, t), derivatives by nested central differences.
ResidualReport pde_residual(const WaveEvaluator& wave, const Grid2D& grid, const ResidualOptions& options = {});

/// Residual of the travelling-wave ODE with u(zeta) differenced in zeta.
ResidualReport reduced_residual(const WaveEvaluator& wave, const Grid1D& grid, const ResidualOptions& options = {});

/// Hermite residual of the closure's z formula with parameters frozen per node.
ResidualReport hermite_residual(const WaveEvaluator& wave, const Grid1D& grid, const ResidualOptions& options = {});

/// Values of lambda on which the particular part of the closure's z formula
/// (C1 = C2 = 0) solves the Hermite equation identically, as "lambda = v".
/// Empty for the exact closure, whose residual is identically zero anyway.
std::vector<std::string> conditional_locus(const ClosureCase& closure);

}  // namespace hermite
