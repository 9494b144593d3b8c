#include "support.hpp"

#include "hermite/pipeline.hpp"

#include <doctest.h>

#include <sstream>

using namespace hermite;
using testing::P;

namespace {

const std::string kEquations = std::string(HERMITE_DATA_DIR) + "/equations/";

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("config text")
{
    const RunConfig c = parse_config_text(R"(
# Klein-Gordon sample run
equation = data/equations/kg.eq
case = constant, trig
mode = paper
sigma = 1
grid = 0:1:3, 0:2:5
bind = c=0.8, mu=0.1
bind = h=2   # accumulates
seed = 7
)");
    CHECK(c.equation == "data/equations/kg.eq");
    CHECK(c.closures == std::vector<ClosureKind>{ClosureKind::ConstantDerivative, ClosureKind::TrigDerivative});
    CHECK(c.mode == CollectMode::Paper);
    CHECK(c.sigma == 1);
    CHECK(c.grid.x.points == 3);
    CHECK(c.grid.t.hi == 2.0);
    CHECK(c.bindings == Bindings{{"c", 0.8}, {"mu", 0.1}, {"h", 2.0}});
    CHECK(c.seed == 7);

    CHECK_THROWS_AS(parse_config_text("sigma = 2"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("grid = 1:0:4,0:1:4"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("grid = 0:1:1,0:1:4"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("colour = blue"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("case = quartic"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("bind = c"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just words"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
    CHECK(equation_key("data/equations/kg.eq") == "kg");
}

TEST_CASE("derive from a config")
{
    RunConfig c;
    c.equation = kEquations + "kg.eq";
    c.mode = CollectMode::Paper;
    const DerivedRun run = derive(c, ClosureKind::ConstantDerivative);
    CHECK(run.equation == "kg");
    CHECK(run.N == 2);
    bool found = false;
    for (const auto& b : run.result.branches) {
        const auto g = [&](const char* s) {
            auto it = b.assignments.find(s);
            return it != b.assignments.end() && it->second.is_zero();
        };
        found = found || (g("g0") && g("g1") && std::count(b.free.begin(), b.free.end(), "g2"));
    }
    CHECK(found);
    CHECK(run.branch_id(3) == "kg/constant/paper/3");

    c.equation = kEquations + "missing.eq";
    CHECK_THROWS_AS(derive(c, ClosureKind::ConstantDerivative), ConfigError);
}

TEST_CASE("property: branches JSON round trip")
{
    for (const char* eq : {"kg", "bbm"}) {
        std::vector<DerivedRun> runs;
        const ModelSpec m = load_equation_file(kEquations + eq + ".eq");
        for (const ClosureKind k : {ClosureKind::ConstantDerivative, ClosureKind::TrigDerivative})
            runs.push_back(derive(m, eq, k, CollectMode::Paper, std::string(eq) == "bbm" ? 1 : -1, {}));
        const auto j = branches_to_json(runs);
        const std::vector<DerivedRun> back = branches_from_json(j);
        REQUIRE(back.size() == runs.size());
        for (std::size_t i = 0; i < runs.size(); ++i) {
            CHECK(back[i].equation == runs[i].equation);
            CHECK(back[i].frame.sigma == runs[i].frame.sigma);
            CHECK(back[i].closure == runs[i].closure);
            CHECK(back[i].N == runs[i].N);
            CHECK(back[i].model.lhs == runs[i].model.lhs);
            REQUIRE(back[i].result.branches.size() == runs[i].result.branches.size());
            for (std::size_t b = 0; b < runs[i].result.branches.size(); ++b) {
                CHECK(back[i].result.branches[b].assignments == runs[i].result.branches[b].assignments);
                CHECK(back[i].result.branches[b].free == runs[i].result.branches[b].free);
            }
        }
        CHECK(branches_to_json(back).dump() == j.dump());
    }
    CHECK_THROWS_AS(branches_from_json(nlohmann::ordered_json::parse(R"({"format": 1, "runs": [{"equation": 3}]})")),
                    ConfigError);
}

TEST_CASE("surface samples")
{
    const ModelSpec m = load_equation_file(kEquations + "kg.eq");
    const WaveSetup setup{m, {Expression::symbol("c"), Expression::symbol("mu"), -1},
                          closure_formula(ClosureKind::ConstantDerivative), 2};
    const Bindings b{{"a", 1.0}, {"alpha", 1.0}, {"beta", 1.0}, {"c", 0.8},      {"mu", 0.1},
                     {"h", 2.0}, {"C1", 1.0},    {"C2", 2.0},   {"lambda", 0.6}, {"g2", 1.0}};
    const WaveEvaluator wave(setup, {{"g0", P("0")}, {"g1", P("0")}}, b);
    std::ostringstream out;
    const SampleResult r = write_samples(out, wave, Grid2D{{1.0, 2.0, 2}, {1.0, 2.0, 2}});
    CHECK(r.rows == 4);
    CHECK(r.failed == 0);
    const auto l = lines(out.str());
    REQUIRE(l.size() == 5);
    CHECK(l[0] == "x,t,u");
    CHECK(l[1] == "1,1,8.3089170936575911");
    CHECK(l[2].rfind("1,2,", 0) == 0);

    // u = 0 everywhere.
    const WaveEvaluator zero(setup, {{"g0", P("0")}, {"g1", P("0")}, {"g2", P("0")}}, b);
    std::ostringstream zeros;
    write_samples(zeros, zero, Grid2D{{0.0, 1.0, 3}, {0.0, 1.0, 3}});
    for (const auto& row : lines(zeros.str()))
        if (row != "x,t,u") CHECK(row.substr(row.rfind(',') + 1) == "0");

    // lambda < 0 with exponential terms is non-real at every point.
    Bindings neg = b;
    neg["lambda"] = -0.6;
    const WaveEvaluator bad(setup, {{"g0", P("0")}, {"g1", P("0")}}, neg);
    std::ostringstream sink;
    CHECK_THROWS_AS(write_samples(sink, bad, Grid2D{{0.0, 1.0, 3}, {0.0, 1.0, 3}}), VerificationError);
}

TEST_CASE("unbound symbols")
{
    RunConfig c;
    c.equation = kEquations + "kg.eq";
    c.mode = CollectMode::Paper;
    const std::vector<DerivedRun> runs{derive(c, ClosureKind::ConstantDerivative)};
    const std::vector<std::string> missing = unbound_symbols(runs, {{"a", 1.0}});
    CHECK(std::count(missing.begin(), missing.end(), "lambda") == 1);
    CHECK(std::count(missing.begin(), missing.end(), "a") == 0);
    CHECK(std::is_sorted(missing.begin(), missing.end()));
}
