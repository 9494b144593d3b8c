#include "hermite/verify.hpp"

#include "hermite/ansatz.hpp"
#include "hermite/solve.hpp"
#include "hermite/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

namespace hermite {

std::string to_string(Classification c)
{
    switch (c) {
    case Classification::Exact: return "exact";
    case Classification::ConditionallyExact: return "conditionally-exact";
    case Classification::Inconsistent: return "inconsistent";
    case Classification::OutOfDomain: return "out-of-domain";
    }
    return "?";
}

Classification classify(double max_abs, double scale, bool locus_exhibited, const Thresholds& thresholds)
{
    if (!std::isfinite(max_abs) || !std::isfinite(scale)) return Classification::Inconsistent;
    if (max_abs <= thresholds.exact * scale) return Classification::Exact;
    if (max_abs > thresholds.inconsistent * scale) return Classification::Inconsistent;
    return locus_exhibited ? Classification::ConditionallyExact : Classification::Inconsistent;
}

std::vector<double> Grid1D::nodes() const
{
    std::vector<double> out;
    if (points < 1) return out;
    if (points == 1) return {lo};
    out.reserve(points);
    for (int i = 0; i < points; ++i) out.push_back(lo + (hi - lo) * i / (points - 1));
    return out;
}

namespace {

std::string num(double v)
{
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

}  // namespace

std::string Grid1D::describe() const
{
    return "[" + num(lo) + ", " + num(hi) + "] x " + std::to_string(points);
}

std::string Grid2D::describe() const
{
    return "x " + x.describe() + ", t " + t.describe();
}

// --- finite differences -----------------------------------------------------

namespace fd {

std::vector<double> fornberg_weights(int order, const std::vector<double>& offsets)
{
    const int n = static_cast<int>(offsets.size());
    if (order < 0 || n <= order) throw std::invalid_argument("fornberg_weights: too few nodes for the order");
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0;
    double c4 = offsets[0];
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = offsets[i];
        for (int j = 0; j < i; ++j) {
            const double c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][order];
    return w;
}

Stencil central(int order, int half_width)
{
    Stencil s;
    s.order = order;
    for (int k = -half_width; k <= half_width; ++k) s.offsets.push_back(k);
    s.weights = fornberg_weights(order, s.offsets);
    return s;
}

int default_half_width(int order)
{
    return 4 + std::max(0, order - 1) / 2;
}

double apply(const Stencil& s, const std::function<double(double)>& f, double x, double h)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
        if (s.weights[k] == 0.0) continue;
        acc += s.weights[k] * f(x + s.offsets[k] * h);
    }
    return acc / std::pow(h, s.order);
}

double step(double x, double base)
{
    return base * std::max(1.0, std::abs(x));
}

double order_step(int order, int half_width)
{
    return std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (2 * half_width + order));
}

}  // namespace fd

// --- residual accumulation ---------------------------------------------------

namespace {

struct NodeResult {
    double residual = 0.0;
    double scale = 0.0;
};

/// Runs `eval` on every node; failures are counted and the first one kept.
ResidualReport accumulate(std::string target, std::string grid, std::size_t count,
                          const std::function<NodeResult(std::size_t)>& eval, const ResidualOptions& options)
{
    ResidualReport report;
    report.target = std::move(target);
    report.grid = std::move(grid);
    report.locus = options.locus;
    std::vector<double> abs_values;
    std::string first_failure;
    for (std::size_t i = 0; i < count; ++i) {
        std::string failure;
        try {
            const NodeResult r = eval(i);
            if (std::isfinite(r.residual) && std::isfinite(r.scale)) {
                abs_values.push_back(std::abs(r.residual));
                report.scale = std::max(report.scale, r.scale);
                continue;
            }
            failure = "non-finite value";
        } catch (const EvaluationError& e) {
            failure = e.what();
        } catch (const std::domain_error& e) {
            failure = e.what();
        }
        ++report.failed;
        if (first_failure.empty()) first_failure = failure;
    }
    report.evaluated = static_cast<int>(abs_values.size());
    if (report.failed * 10 > static_cast<int>(count))
        throw VerificationError(report.target + ": evaluation failed at " + std::to_string(report.failed) + " of " +
                                std::to_string(count) + " nodes (" + first_failure + ")");
    if (report.failed > 0)
        report.notes.push_back(std::to_string(report.failed) + " nodes skipped: " + first_failure);
    if (!abs_values.empty()) {
        report.max_abs = *std::max_element(abs_values.begin(), abs_values.end());
        auto mid = abs_values.begin() + abs_values.size() / 2;
        std::nth_element(abs_values.begin(), mid, abs_values.end());
        report.median_abs = *mid;
    }
    report.classification = classify(report.max_abs, report.scale, report.locus.has_value(), options.thresholds);
    return report;
}

double max_abs_of(std::initializer_list<double> values)
{
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

ResidualReport ode_residual(const ZFunction& z, double lambda, const Grid1D& grid, const ResidualOptions& options)
{
    return ode_residual([&](double) { return FrozenHermite{z, lambda}; }, grid, options);
}

ResidualReport ode_residual(const NodeFreezer& at_node, const Grid1D& grid, const ResidualOptions& options)
{
    if (grid.points < 64) throw std::invalid_argument("ode_residual: the grid needs at least 64 points");
    const auto nodes = grid.nodes();
    const fd::Stencil d1 = fd::central(1, fd::default_half_width(1));
    const fd::Stencil d2 = fd::central(2, fd::default_half_width(2));
    return accumulate(
        "hermite", grid.describe(), nodes.size(),
        [&](std::size_t i) {
            const double zeta = nodes[i];
            const FrozenHermite fh = at_node(zeta);
            specfun::HermiteValue v = fh.z(zeta);
            if (options.mode == DerivativeMode::FiniteDifference) {
                const double h = fd::step(zeta, options.step);
                const auto f = [&](double s) { return fh.z(s).z; };
                v.dz = fd::apply(d1, f, zeta, h);
                v.d2z = fd::apply(d2, f, zeta, h);
            }
            const double t1 = v.d2z, t2 = 2.0 * zeta * v.dz, t3 = fh.lambda * v.z;
            return NodeResult{t1 - t2 - t3, max_abs_of({t1, t2, t3})};
        },
        options);
}

// --- travelling-wave evaluation ---------------------------------------------

namespace {

bool depends_on_xt(const Expression& e)
{
    return contains_symbol(e, sym::x) || contains_symbol(e, sym::t);
}

void collect_atoms(const Expression& e, const std::string& name, std::set<Expression, ExprLess>& out)
{
    if (e.kind() == Kind::FnAtom) {
        if (e.name() == name) out.insert(e);
        return;
    }
    for (const auto& c : e.children()) collect_atoms(c, name, out);
}

}  // namespace

WaveEvaluator::WaveEvaluator(WaveSetup setup, const std::map<std::string, Expression>& assignments, Bindings bindings)
    : setup_(std::move(setup)), bindings_(std::move(bindings)), closure_(setup_.closure)
{
    SolutionBranch branch;
    branch.assignments = assignments;
    for (const auto& [name, value] : assignments) resolved_[name] = apply_branch(value, branch);
    frame_c_ = apply_branch(setup_.frame.c, branch);
    frame_mu_ = apply_branch(setup_.frame.mu, branch);
    implicit_zeta_ = contains_symbol(frame_c_, sym::zeta) || contains_symbol(frame_mu_, sym::zeta);
}

std::vector<std::string> WaveEvaluator::unbound() const
{
    std::set<std::string> needed;
    const auto add = [&](const Expression& e) {
        for (const auto& s : free_symbols(e)) needed.insert(s);
    };
    for (const auto& [name, value] : resolved_) add(value);
    add(setup_.closure.z);
    add(frame_c_);
    add(frame_mu_);
    add(setup_.model.bound_lhs());
    for (const auto& g : build_ansatz(setup_.N).coefficients) needed.insert(g);
    std::vector<std::string> out;
    for (const auto& s : needed) {
        if (s == sym::zeta || s == sym::x || s == sym::t || s == sym::pi) continue;
        if (resolved_.count(s) || bindings_.count(s)) continue;
        out.push_back(s);
    }
    return out;
}

Bindings WaveEvaluator::resolve(double zeta, const std::optional<std::pair<double, double>>& xt) const
{
    Bindings base = bindings_;
    base[sym::zeta] = zeta;
    if (xt) {
        base[sym::x] = xt->first;
        base[sym::t] = xt->second;
    }
    Bindings out = base;
    for (const auto& [name, value] : resolved_) {
        if (!xt && depends_on_xt(value)) {
            out.erase(name);
            continue;
        }
        out[name] = evaluate(value, base);
    }
    return out;
}

double WaveEvaluator::zeta_at(double x, double t) const
{
    const double sigma = setup_.frame.sigma;
    Bindings b = bindings_;
    b[sym::x] = x;
    b[sym::t] = t;
    const auto image = [&](double zeta) {
        b[sym::zeta] = zeta;
        return evaluate(frame_mu_, b) * (x + sigma * evaluate(frame_c_, b) * t);
    };
    if (!implicit_zeta_) return image(0.0);

    // Secant iteration on zeta - image(zeta), started from the bound frame if any.
    double z0 = x;
    if (bindings_.count(sym::c) && bindings_.count(sym::mu))
        z0 = bindings_.at(sym::mu) * (x + sigma * bindings_.at(sym::c) * t);
    double g0 = z0 - image(z0);
    double z1 = z0 - g0;
    for (int it = 0; it < 80; ++it) {
        const double g1 = z1 - image(z1);
        if (std::abs(z1 - z0) <= 1e-14 * std::max(1.0, std::abs(z1)) || g1 == 0.0) return z1;
        if (g1 == g0) break;
        const double z2 = z1 - g1 * (z1 - z0) / (g1 - g0);
        z0 = z1;
        g0 = g1;
        z1 = z2;
        if (!std::isfinite(z1)) break;
    }
    throw EvaluationError("no self-consistent zeta at x = " + num(x) + ", t = " + num(t));
}

double WaveEvaluator::u_from(const Bindings& b, double zeta) const
{
    const double z = closure_(b, zeta).z;
    double u = 0.0, zi = 1.0;
    for (int i = 0; i <= setup_.N; ++i) {
        const std::string g = "g" + std::to_string(i);
        auto it = b.find(g);
        if (it == b.end()) throw EvaluationError("unbound symbol " + g);
        u += it->second * zi;
        zi *= z;
    }
    return u;
}

double WaveEvaluator::u(double x, double t) const
{
    const double zeta = zeta_at(x, t);
    return u_from(resolve(zeta, std::make_pair(x, t)), zeta);
}

double WaveEvaluator::u_of_zeta(double zeta) const
{
    return u_from(resolve(zeta), zeta);
}

FrozenHermite WaveEvaluator::frozen(double zeta) const
{
    const Bindings b = resolve(zeta);
    auto it = b.find(sym::lambda);
    if (it == b.end()) throw EvaluationError("unbound symbol lambda");
    auto closure = std::make_shared<ClosureEvaluator>(closure_);
    return FrozenHermite{[closure, b](double s) { return (*closure)(b, s); }, it->second};
}

ResidualReport pde_residual(const WaveEvaluator& wave, const Grid2D& grid, const ResidualOptions& options)
{
    const ModelSpec& model = wave.setup().model;
    const Expression lhs = model.bound_lhs();
    const std::vector<Expression> terms = terms_of(lhs);
    std::set<Expression, ExprLess> atoms;
    collect_atoms(lhs, model.unknown, atoms);
    const std::string& xv = model.variables.at(0);
    const std::string& tv = model.variables.at(1);

    const auto xs = grid.x.nodes();
    const auto ts = grid.t.nodes();
    std::map<int, fd::Stencil> stencils;
    const auto stencil = [&](int order) -> const fd::Stencil& {
        auto it = stencils.find(order);
        if (it == stencils.end()) it = stencils.emplace(order, fd::central(order, fd::default_half_width(order))).first;
        return it->second;
    };
    for (const auto& a : atoms)
        for (const auto& [var, k] : a.orders()) stencil(k);

    const auto step_for = [&](int order, double at) {
        return fd::step(at, options.step_factor * fd::order_step(order, stencil(order).offsets.size() / 2));
    };
    const auto partial = [&](int ox, int ot, double x, double t) {
        const auto in_t = [&](double xx) {
            if (ot == 0) return wave.u(xx, t);
            return fd::apply(stencil(ot), [&](double tt) { return wave.u(xx, tt); }, t, step_for(ot, t));
        };
        if (ox == 0) return in_t(x);
        return fd::apply(stencil(ox), in_t, x, step_for(ox, x));
    };

    return accumulate(
        "pde", grid.describe(), xs.size() * ts.size(),
        [&](std::size_t idx) {
            const double x = xs[idx / ts.size()];
            const double t = ts[idx % ts.size()];
            std::map<Expression, double, ExprLess> values;
            for (const auto& a : atoms) {
                int ox = 0, ot = 0;
                for (const auto& [var, k] : a.orders()) {
                    if (var == xv) ox += k;
                    else if (var == tv) ot += k;
                    else throw EvaluationError("derivative in unknown variable " + var);
                }
                values[a] = partial(ox, ot, x, t);
            }
            const double zeta = wave.zeta_at(x, t);
            const Bindings b = wave.resolve(zeta, std::make_pair(x, t));
            const AtomEvaluator lookup = [&](const Expression& atom) -> std::optional<double> {
                auto it = values.find(atom);
                if (it == values.end()) return std::nullopt;
                return it->second;
            };
            // |u| floors the scale so a constant wave is judged against its own size.
            NodeResult r;
            r.scale = std::abs(wave.u(x, t));
            for (const auto& term : terms) {
                const double v = evaluate(term, b, lookup);
                r.residual += v;
                r.scale = std::max(r.scale, std::abs(v));
            }
            return r;
        },
        options);
}

ResidualReport reduced_residual(const WaveEvaluator& wave, const Grid1D& grid, const ResidualOptions& options)
{
    ModelSpec model = wave.setup().model;
    model.lhs = model.bound_lhs();
    const ReducedODE ode = apply_wave_transform(model, wave.setup().frame);
    const std::vector<Expression> terms = terms_of(ode.lhs);
    std::set<Expression, ExprLess> atoms;
    collect_atoms(ode.lhs, model.unknown, atoms);
    const auto nodes = grid.nodes();
    return accumulate(
        "reduced", grid.describe(), nodes.size(),
        [&](std::size_t i) {
            const double zeta = nodes[i];
            const auto u = [&](double s) { return wave.u_of_zeta(s); };
            std::map<Expression, double, ExprLess> values;
            for (const auto& a : atoms) {
                const int k = a.derivative_order();
                if (k == 0) {
                    values[a] = u(zeta);
                    continue;
                }
                const int hw = fd::default_half_width(k);
                const double h = fd::step(zeta, options.step_factor * fd::order_step(k, hw));
                values[a] = fd::apply(fd::central(k, hw), u, zeta, h);
            }
            const Bindings b = wave.resolve(zeta);
            const AtomEvaluator lookup = [&](const Expression& atom) -> std::optional<double> {
                auto it = values.find(atom);
                if (it == values.end()) return std::nullopt;
                return it->second;
            };
            // |u| floors the scale so a constant wave is judged against its own size.
            NodeResult r;
            r.scale = std::abs(wave.u_of_zeta(zeta));
            for (const auto& term : terms) {
                const double v = evaluate(term, b, lookup);
                r.residual += v;
                r.scale = std::max(r.scale, std::abs(v));
            }
            return r;
        },
        options);
}

ResidualReport hermite_residual(const WaveEvaluator& wave, const Grid1D& grid, const ResidualOptions& options)
{
    return ode_residual([&](double zeta) { return wave.frozen(zeta); }, grid, options);
}

std::vector<std::string> conditional_locus(const ClosureCase& closure)
{
    if (closure.kind == ClosureKind::ExactKummer) return {};
    const Expression p = substitute(closure.z, {{"C1", Expression(0)}, {"C2", Expression(0)}});
    const Expression lambda = Expression::symbol(sym::lambda);
    const Expression zeta = Expression::symbol(sym::zeta);
    const Expression d1 = differentiate(p, sym::zeta);
    const Expression residual = differentiate(d1, sym::zeta) - Expression(2) * zeta * d1 - lambda * p;

    AlgebraicSystem system;
    system.mode = CollectMode::Paper;
    system.equations.emplace_back(MonomialKey{}, numerator(residual));
    system.unknowns = {sym::lambda};
    std::vector<std::string> out;
    for (const auto& branch : branch_solve(system).branches) {
        auto it = branch.assignments.find(sym::lambda);
        if (it == branch.assignments.end() || !free_symbols(it->second).empty()) continue;
        if (!is_zero(substitute(residual, lambda, it->second))) continue;
        out.push_back("lambda = " + render(it->second));
    }
    return out;
}

}  // namespace hermite
