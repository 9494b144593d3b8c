#include "support.hpp"

#include "hermite/pipeline.hpp"
#include "hermite/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace hermite;
using testing::P;

namespace {

ModelSpec kg() { return load_equation_file(std::string(HERMITE_DATA_DIR) + "/equations/kg.eq"); }

TravelingWaveFrame frame() { return {Expression::symbol("c"), Expression::symbol("mu"), -1}; }

std::map<std::string, Expression> assign(std::initializer_list<std::pair<const char*, const char*>> values)
{
    std::map<std::string, Expression> out;
    for (const auto& [k, v] : values) out.emplace(k, P(v));
    return out;
}

}  // namespace

TEST_CASE("classification thresholds")
{
    CHECK(classify(0.0, 1.0, false) == Classification::Exact);
    CHECK(classify(1e-9, 1.0, false) == Classification::Exact);
    CHECK(classify(1e-6, 1.0, true) == Classification::ConditionallyExact);
    CHECK(classify(1e-6, 1.0, false) == Classification::Inconsistent);
    CHECK(classify(1e-2, 1.0, true) == Classification::Inconsistent);
    CHECK(classify(5e-6, 1e3, false) == Classification::Exact);
}

TEST_CASE("finite-difference operator self-test")
{
    CHECK(fd::central(1, 1).weights == std::vector<double>{-0.5, 0.0, 0.5});
    const auto sin_k = [](int k, double x) {
        const double v[] = {std::sin(x), std::cos(x), -std::sin(x), -std::cos(x)};
        return v[k % 4];
    };
    for (int k = 1; k <= 3; ++k) {
        const int hw = fd::default_half_width(k);
        const fd::Stencil s = fd::central(k, hw);
        for (double x = 0.1; x <= 2.0; x += 0.1) {
            const double h = fd::step(x, fd::order_step(k, hw));
            const double ds = fd::apply(s, [](double v) { return std::sin(v); }, x, h);
            const double de = fd::apply(s, [](double v) { return std::exp(v); }, x, h);
            CHECK(std::abs(ds - sin_k(k, x)) <= 1e-9 * std::max(1.0, std::abs(sin_k(k, x))));
            CHECK(std::abs(de - std::exp(x)) <= 1e-9 * std::exp(x));
        }
    }
}

TEST_CASE("Hermite residual of known functions")
{
    const Grid1D grid{0.1, 2.0, 64};
    const double lambda = 0.6;
    const ZFunction kummer = [&](double zeta) { return specfun::hermite_solution(lambda, 1.0, 0.0, zeta); };
    CHECK(ode_residual(kummer, lambda, grid).classification == Classification::Exact);
    ResidualOptions fd_mode;
    fd_mode.mode = DerivativeMode::FiniteDifference;
    CHECK(ode_residual(kummer, lambda, grid, fd_mode).classification == Classification::Exact);

    const ZFunction zero = [](double) { return specfun::HermiteValue{}; };
    const ResidualReport z0 = ode_residual(zero, lambda, grid);
    CHECK(z0.max_abs == 0.0);
    CHECK(z0.classification == Classification::Exact);

    // e^(zeta sqrt(lambda)): residual -2 sqrt(lambda) zeta e^(zeta sqrt(lambda)), largest at the right end.
    const double r = std::sqrt(lambda);
    const ZFunction ex = [&](double zeta) {
        const double e = std::exp(r * zeta);
        return specfun::HermiteValue{e, r * e, lambda * e};
    };
    const ResidualReport er = ode_residual(ex, lambda, Grid1D{0.1, 1.0, 64});
    CHECK(er.max_abs == doctest::Approx(2 * r * std::exp(r)).epsilon(1e-12));
    CHECK(er.max_abs == doctest::Approx(3.3612).epsilon(1e-4));
    CHECK(er.classification == Classification::Inconsistent);

    CHECK_THROWS_AS(ode_residual(zero, lambda, Grid1D{0.1, 2.0, 10}), std::invalid_argument);
}

TEST_CASE("evaluation failures beyond 10% abort")
{
    const ZFunction half = [](double zeta) {
        if (zeta > 1.0) throw specfun::DomainError("outside");
        return specfun::HermiteValue{};
    };
    CHECK_THROWS_AS(ode_residual(half, 0.6, Grid1D{0.1, 2.0, 64}), VerificationError);
}

TEST_CASE("u = 0 solves Klein-Gordon")
{
    const WaveSetup setup{kg(), frame(), closure_formula(ClosureKind::ConstantDerivative), 2};
    const WaveEvaluator wave(setup, assign({{"g0", "0"}, {"g1", "0"}, {"g2", "0"}}),
                             {{"a", 0.5}, {"alpha", 1.0}, {"beta", 1.0}, {"c", 0.8}, {"mu", 0.1}, {"h", 2.0},
                              {"C1", 1.0}, {"C2", 2.0}, {"lambda", 0.6}});
    CHECK(wave.unbound().empty());
    const ResidualReport r = pde_residual(wave, Grid2D{});
    CHECK(r.max_abs == 0.0);
    CHECK(r.classification == Classification::Exact);
}

TEST_CASE("the constant-derivative Klein-Gordon wave with g0 = g1 = 0 is not a solution")
{
    const WaveSetup setup{kg(), frame(), closure_formula(ClosureKind::ConstantDerivative), 2};
    const Bindings b{{"a", 0.5},  {"alpha", 1.0}, {"beta", 1.0}, {"c", 0.8},      {"mu", 0.1},
                     {"h", 2.0}, {"C1", 1.0},    {"C2", 2.0},   {"lambda", 0.6}, {"g2", 1.0}};
    const WaveEvaluator wave(setup, assign({{"g0", "0"}, {"g1", "0"}}), b);
    // Closed form at (x, t) = (1, 1): zeta = 0.02.
    const double zeta = 0.02, r = std::sqrt(0.6);
    const double z = 2 * std::exp(zeta * r) + std::exp(-zeta * r) - 4 * zeta / 0.6;
    CHECK(wave.zeta_at(1.0, 1.0) == doctest::Approx(zeta).epsilon(1e-14));
    CHECK(wave.u(1.0, 1.0) == doctest::Approx(z * z).epsilon(1e-14));
    CHECK(wave.u(1.0, 1.0) == doctest::Approx(8.30891709365759).epsilon(1e-12));
    CHECK(hermite_residual(wave, Grid1D{0.1, 2.0, 64}).classification == Classification::Inconsistent);
    CHECK(pde_residual(wave, Grid2D{}).classification == Classification::Inconsistent);
}

TEST_CASE("unbound symbols are listed")
{
    const WaveSetup setup{kg(), frame(), closure_formula(ClosureKind::ConstantDerivative), 2};
    const WaveEvaluator wave(setup, assign({{"g0", "0"}, {"g1", "0"}}), {{"a", 0.5}, {"c", 0.8}, {"mu", 0.1}});
    const std::vector<std::string> missing = wave.unbound();
    for (const char* s : {"g2", "h", "lambda", "C1", "C2", "alpha", "beta"})
        CHECK(std::find(missing.begin(), missing.end(), s) != missing.end());
}

TEST_CASE("property: strict-mode Kummer branches are exact, and stable under step refinement")
{
    // mu keeps zeta = mu (x - c t) in [0.09, 1.2], where the default steps resolve M(a, 3/2, zeta^2).
    const Bindings base{{"a", 0.7},   {"alpha", 0.9}, {"beta", 1.3}, {"c", 0.45}, {"mu", 0.3}, {"lambda", 0.6},
                        {"C1", 0.5},  {"C2", 0.3},    {"g0", 0.4},   {"g1", -0.6}, {"g2", 0.25}};
    for (const char* eq : {"kg", "kg_cubic", "bbm"}) {
        const ModelSpec model = load_equation_file(std::string(HERMITE_DATA_DIR) + "/equations/" + eq + ".eq");
        const DerivedRun run = derive(model, eq, ClosureKind::ExactKummer, CollectMode::Strict, -1, {});
        REQUIRE_FALSE(run.result.branches.empty());
        const WaveSetup setup{run.model, run.frame, closure_formula(ClosureKind::ExactKummer), run.N};
        for (std::size_t i = 0; i < run.result.branches.size(); ++i) {
            const SolutionBranch& branch = run.result.branches[i];
            for (const auto& [key, e] : run.system.equations) REQUIRE(is_zero(apply_branch(e, branch)));
            Bindings b = base;
            for (const auto& [k, v] : model.bindings) b[k] = v;
            const WaveEvaluator wave(setup, branch.assignments, b);
            const ResidualReport r = pde_residual(wave, Grid2D{});
            CHECK_MESSAGE(r.classification == Classification::Exact, run.branch_id(i) << " " << r.max_abs);
            ResidualOptions finer;
            finer.step_factor = 0.5;
            const ResidualReport f = pde_residual(wave, Grid2D{}, finer);
            CHECK(std::abs(f.max_abs - r.max_abs) < 10 * 1e-8 * std::max(1.0, r.scale));
            // The U component needs zeta > 0 across the widest stencil.
            CHECK(reduced_residual(wave, Grid1D{0.5, 2.0, 64}).classification == Classification::Exact);
        }
    }
}
