// Acceptance run: one PASS/FAIL line per criterion.
//
// A criterion listed in kExpectedFailures still prints FAIL when it fails; it
// only stops that failure from failing the process. An unexpected pass of such
// a criterion fails the process, so the list cannot go stale silently.

#include "hermite/pipeline.hpp"
#include "hermite/specfun.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace hermite;
namespace fs = std::filesystem;

namespace {

const std::string kData = HERMITE_DATA_DIR;
const std::string kCatalog = kData + "/catalog/published_branches.json";

Expression P(const std::string& s) { return normalize(parse_expression(s)); }

ModelSpec equation(const std::string& stem)
{
    ModelSpec m = load_equation_file(kData + "/equations/" + stem + ".eq");
    m.lhs = m.bound_lhs();
    return m;
}

bool same(const Expression& a, const Expression& b)
{
    const Expression d = normalize(a - b);
    return is_zero(d) || is_zero(numerator(d));
}

// The branch assigns `name` the published value while leaving every symbol of
// that value unconstrained; otherwise a special case such as A sin + B cos = 0
// would collapse the published formula and match by accident.
bool reproduces(const SolutionBranch& b, const std::string& name, const Expression& published)
{
    auto it = b.assignments.find(name);
    if (it == b.assignments.end()) return false;
    for (const auto& s : free_symbols(published))
        if (b.assignments.count(s)) return false;
    return same(it->second, published);
}

struct Outcome {
    bool pass = false;
    std::vector<std::string> details;
};

using Criterion = std::function<Outcome()>;

// Criteria that cannot pass, with the reason printed next to the FAIL.
const std::map<int, std::string> kExpectedFailures = {
    {4, "the published BBM trigonometric lambda solves the displayed system, which omits the z^2 equation "
        "a*g1^3*mu*z' = 0; the derived system forces g1 = 0 or A*sin(zeta) + B*cos(zeta) = 0 instead"},
};

std::string seconds(double s)
{
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << s << " s";
    return out.str();
}

double elapsed(const std::chrono::steady_clock::time_point& start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- 1 -----------------------------------------------------------------------

Outcome reduction()
{
    const auto start = std::chrono::steady_clock::now();
    const ReducedODE ode =
        apply_wave_transform(equation("kg"), {Expression::symbol("c"), Expression::symbol("mu"), -1});
    const Expression expected = P("mu^2*(c^2 - a^2)*u'' + alpha*u - beta*u^2");
    const double t = elapsed(start);
    return {ode.lhs == expected && t < 1.0, {"reduced: " + render(ode.lhs), "time " + seconds(t)}};
}

// --- 2 -----------------------------------------------------------------------

Outcome balance()
{
    const auto start = std::chrono::steady_clock::now();
    const int kg = compute_balance(apply_wave_transform(equation("kg"), {Expression::symbol("c"), Expression::symbol("mu"), -1}));
    const int bbm = compute_balance(apply_wave_transform(equation("bbm"), {Expression::symbol("c"), Expression::symbol("mu"), 1}));
    const double t = elapsed(start);
    return {kg == 2 && bbm == 1 && t < 1.0,
            {"Klein-Gordon n=2: N = " + std::to_string(kg), "BBM: N = " + std::to_string(bbm), "time " + seconds(t)}};
}

// --- 3 -----------------------------------------------------------------------

Outcome rewrite()
{
    const Expression r = hermite_rewrite(Expression::deriv("z", 3));
    const bool form = r == P("(4*zeta^2 + lambda + 2)*z' + 2*lambda*zeta*z");
    const auto parts = collect(hermite_rewrite(P("mu^3*z'''")), CollectMode::Paper);
    const auto it = parts.find(MonomialKey{0, 1, 0});
    const bool bbm = it != parts.end() && it->second == P("mu^3*lambda + 2*mu^3 + 4*mu^3*zeta^2");
    return {form && bbm,
            {"z''' -> " + render(r), "z' part of mu^3 z''': " + (it == parts.end() ? "none" : render(it->second))}};
}

// --- 4 -----------------------------------------------------------------------

Outcome branches()
{
    Outcome out;
    RunConfig kg;
    kg.equation = kData + "/equations/kg.eq";
    kg.mode = CollectMode::Paper;
    const DerivedRun k = derive(kg, ClosureKind::ConstantDerivative);
    std::string kg_id;
    for (std::size_t i = 0; i < k.result.branches.size() && kg_id.empty(); ++i) {
        const SolutionBranch& b = k.result.branches[i];
        const auto zero = [&](const char* s) {
            auto it = b.assignments.find(s);
            return it != b.assignments.end() && it->second.is_zero();
        };
        if (zero("g0") && zero("g1") && std::count(b.free.begin(), b.free.end(), "g2")) kg_id = k.branch_id(i);
    }
    out.details.push_back("Klein-Gordon {g0 = 0, g1 = 0, g2 free}: " + (kg_id.empty() ? "absent" : kg_id));

    RunConfig bbm;
    bbm.equation = kData + "/equations/bbm.eq";
    bbm.mode = CollectMode::Paper;
    bbm.sigma = 1;
    const DerivedRun b = derive(bbm, ClosureKind::TrigDerivative);
    const Expression published = P("-a*g0*g1*(A*sin(zeta) + B*cos(zeta))/(mu^2*zeta)");
    std::string bbm_id;
    for (std::size_t i = 0; i < b.result.branches.size() && bbm_id.empty(); ++i) {
        const SolutionBranch& br = b.result.branches[i];
        if (reproduces(br, "lambda", published)) bbm_id = b.branch_id(i);
    }
    out.details.push_back("BBM lambda = " + render(published) + ": " + (bbm_id.empty() ? "absent" : bbm_id));
    for (std::size_t i = 0; i < b.result.branches.size(); ++i) {
        std::string line = "  derived " + b.branch_id(i) + ":";
        for (const auto& [name, value] : b.result.branches[i].assignments) line += " " + name + " = " + render(value) + ";";
        out.details.push_back(line);
    }

    // Diagnostic only: the same solver on the published two-equation system.
    const Catalog catalog = load_catalog(kCatalog);
    AlgebraicSystem shown;
    shown.mode = CollectMode::Paper;
    for (const auto& d : catalog.equation("bbm").displayed_system)
        shown.equations.push_back({MonomialKey{d.power, 0, 0}, d.expr});
    shown.unknowns = b.system.unknowns;
    SolveOptions o;
    o.nonzero = {Expression::symbol("mu")};
    bool from_shown = false;
    for (const auto& br : branch_solve(apply_closure(shown, closure_formula(ClosureKind::TrigDerivative)), o).branches) {
        from_shown = from_shown || reproduces(br, "lambda", published);
    }
    out.details.push_back(std::string("published lambda from the displayed BBM system: ") +
                          (from_shown ? "reproduced" : "not reproduced"));
    out.pass = !kg_id.empty() && !bbm_id.empty();
    return out;
}

// --- 5 and 9 share one report ----------------------------------------------

struct ReportRun {
    ReportOutput output;
    double seconds = 0.0;
};

const ReportRun& full_report()
{
    static const ReportRun run = [] {
        const auto start = std::chrono::steady_clock::now();
        ReportRun r;
        r.output = run_report(load_catalog(kCatalog), RunConfig{});
        r.seconds = elapsed(start);
        return r;
    }();
    return run;
}

Outcome coverage()
{
    const ReportRun& run = full_report();
    std::map<std::string, int> rows;
    bool classified = true;
    std::map<std::string, int> classes;
    for (const auto& e : run.output.report.entries) {
        ++rows[e.row.equation];
        ++classes[to_string(e.classification)];
        // Out-of-domain rows carry that classification and say why.
        if (e.classification == Classification::OutOfDomain)
            classified = classified && (e.row.out_of_domain || !e.notes.empty());
        else
            classified = classified && !e.reports.empty();
    }
    Outcome out;
    out.pass = rows["kg_cubic"] == 14 && rows["bbm"] == 3 && rows.size() == 2 && classified && run.seconds < 60.0;
    out.details.push_back("rows: Klein-Gordon " + std::to_string(rows["kg_cubic"]) + ", BBM " +
                          std::to_string(rows["bbm"]));
    std::string c = "classifications:";
    for (const auto& [name, n] : classes) c += " " + name + " " + std::to_string(n) + ";";
    out.details.push_back(c);
    out.details.push_back("full run " + seconds(run.seconds));
    return out;
}

// --- 6 -----------------------------------------------------------------------

Outcome special_functions()
{
    const double m1 = specfun::kummer_m(1, 2, 1), e1 = std::exp(1.0) - 1;
    const double m2 = specfun::kummer_m(0.5, 1.5, -1), e2 = std::sqrt(M_PI) * std::erf(1.0) / 2;
    const double u = specfun::kummer_u(0.5, 1.5, 4);
    const double r1 = std::abs(m1 - e1) / e1, r2 = std::abs(m2 - e2) / e2, r3 = std::abs(u - 0.5) / 0.5;
    // (b - a) M(a-1) + (2a - b + x) M(a) - a M(a+1) = 0 over a in [-2, 3], b in {1/2, 3/2, 5/2}, x in [-10, 10].
    double worst = 0.0;
    for (double a = -2; a <= 3; a += 0.25)
        for (double b : {0.5, 1.5, 2.5})
            for (double x = -10; x <= 10; x += 0.5) {
                const double p = specfun::kummer_m(a - 1, b, x), q = specfun::kummer_m(a, b, x),
                             s = specfun::kummer_m(a + 1, b, x);
                const double scale = std::max({1.0, std::abs((b - a) * p), std::abs((2 * a - b + x) * q), std::abs(a * s)});
                worst = std::max(worst, std::abs((b - a) * p + (2 * a - b + x) * q - a * s) / scale);
            }
    std::ostringstream d1, d2, d3;
    d1 << "M(1,2,1) rel err " << r1 << "; M(1/2,3/2,-1) rel err " << r2;
    d2 << "contiguous relation worst scaled residual " << worst;
    d3 << "U(1/2,3/2,4) rel err " << r3;
    return {r1 < 1e-10 && r2 < 1e-10 && worst < 1e-9 && r3 < 1e-9, {d1.str(), d2.str(), d3.str()}};
}

// --- 7 -----------------------------------------------------------------------

Outcome true_solution()
{
    Outcome out{true, {}};
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    const Grid1D grid{0.1, 3.0, 64};
    for (const double lambda : {-2.0, -1.0, 0.6, 2.0}) {
        const double c1 = 1.0, c2 = 0.5;
        const ZFunction z = [&](double zeta) { return specfun::hermite_solution(lambda, c1, c2, zeta); };
        const ResidualReport r = ode_residual(z, lambda, grid);
        const double relative = r.max_abs / std::max(1.0, r.scale);

        const specfun::HermiteValue start = z(grid.lo);
        State s{start.z, start.dz};
        odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-13, 1e-13),
                                   [lambda](const State& y, State& dy, double zeta) {
                                       dy[0] = y[1];
                                       dy[1] = 2 * zeta * y[1] + lambda * y[0];
                                   },
                                   s, grid.lo, grid.hi, 1e-3);
        const specfun::HermiteValue end = z(grid.hi);
        const double ode_gap = std::abs(s[0] - end.z) / std::max(1.0, std::abs(end.z));
        const bool ok = relative < 1e-8 && r.classification == Classification::Exact && ode_gap < 1e-8;
        out.pass = out.pass && ok;
        std::ostringstream d;
        d << "lambda " << lambda << ": max |residual| " << r.max_abs << " (scale " << r.scale << ", relative "
          << relative << "), " << to_string(r.classification) << "; integrator gap at zeta=3 " << ode_gap;
        out.details.push_back(d.str());
    }
    return out;
}

// --- 8 -----------------------------------------------------------------------

Outcome inconsistency()
{
    const double lambda = 0.6;
    const ClosureCase closure = closure_formula(ClosureKind::ConstantDerivative);
    const ZFunction z = closure_evaluator(closure, {{"lambda", lambda}, {"C1", 0.0}, {"C2", 1.0}, {"h", 0.0}});
    const specfun::HermiteValue at1 = z(1.0);
    const double residual = at1.d2z - 2 * 1.0 * at1.dz - lambda * at1.z;
    const double closed = -2 * std::sqrt(lambda) * std::exp(std::sqrt(lambda));
    const double rel = std::abs(residual - closed) / std::abs(closed);
    // The residual grows with zeta, so a grid ending at 1 has its maximum there.
    const ResidualReport report = ode_residual(z, lambda, Grid1D{0.1, 1.0, 64});
    const double report_rel = std::abs(report.max_abs - std::abs(closed)) / std::abs(closed);

    const std::vector<std::string> locus = conditional_locus(closure);
    const ZFunction particular =
        closure_evaluator(closure, {{"lambda", -2.0}, {"C1", 0.0}, {"C2", 0.0}, {"h", 1.0}});
    const ResidualReport at_locus = ode_residual(particular, -2.0, Grid1D{0.1, 2.0, 64});
    const bool locus_found = std::find(locus.begin(), locus.end(), "lambda = -2") != locus.end();

    std::ostringstream d1, d2, d3;
    d1 << std::setprecision(10) << "residual at zeta=1: " << residual << " (closed form " << closed << ", rel err "
       << rel << ")";
    d2 << "grid report: max " << report.max_abs << ", " << to_string(report.classification);
    d3 << "locus " << (locus_found ? "lambda = -2" : "not found") << "; particular part residual there "
       << at_locus.max_abs;
    return {rel < 1e-6 && report_rel < 1e-6 && report.classification == Classification::Inconsistent &&
                locus_found && at_locus.max_abs < 1e-10,
            {d1.str(), d2.str(), d3.str()}};
}

// --- 9 -----------------------------------------------------------------------

Outcome d1()
{
    const ReducedODE ode =
        apply_wave_transform(equation("kg_cubic"), {Expression::symbol("c"), Expression::symbol("mu"), -1});
    const AlgebraicSystem s = assemble_system(ode, build_ansatz(2), CollectMode::Paper);
    Expression z5(0), z6(0);
    for (const auto& [k, e] : s.equations) {
        if (k == MonomialKey{5, 0, 0}) z5 = e;
        if (k == MonomialKey{6, 0, 0}) z6 = e;
    }
    const bool assembled = z5 == P("-3*beta*g1*g2^2") && z6 == P("-beta*g2^3");

    const Catalog catalog = load_catalog(kCatalog);
    bool absent = true;
    for (const auto& d : catalog.equation("kg_cubic").displayed_system) absent = absent && d.power != 5 && d.power != 6;

    bool named = false;
    for (const auto& d : full_report().output.report.discrepancies)
        if (d.id == "D1")
            named = std::count(d.details.begin(), d.details.end(), "z^5: -3*beta*g1*g2^2") &&
                    std::count(d.details.begin(), d.details.end(), "z^6: -beta*g2^3");
    const std::string json = full_report().output.fidelity_json.dump();
    named = named && json.find("z^5: -3*beta*g1*g2^2") != std::string::npos;
    return {assembled && absent && named,
            {"z^5: " + render(z5) + ", z^6: " + render(z6),
             std::string("published system ") + (absent ? "lacks" : "has") + " z^5 and z^6",
             std::string("fidelity report ") + (named ? "names" : "does not name") + " both"}};
}

// --- 10 ----------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / ("hermite_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    Outcome out{true, {}};
    std::array<std::pair<std::string, std::string>, 2> files;
    for (int i = 0; i < 2; ++i) {
        const fs::path dir = root / std::to_string(i);
        const std::string cmd = std::string(HERMITE_CLI) + " report --seed 7 --out " + dir.string() + " > /dev/null";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            out.pass = false;
            out.details.push_back("report run " + std::to_string(i) + " failed");
        }
        files[i] = {slurp(dir / "branches.json"), slurp(dir / "fidelity.json")};
    }
    fs::remove_all(root);
    const bool branches = !files[0].first.empty() && files[0].first == files[1].first;
    const bool fidelity = !files[0].second.empty() && files[0].second == files[1].second;
    // The in-process run of criterion 5 must agree with the command-line runs too.
    const bool in_process = files[0].second == full_report().output.fidelity_json.dump(2) + "\n";
    out.pass = out.pass && branches && fidelity && in_process;
    out.details.push_back("branches.json " + std::to_string(files[0].first.size()) + " bytes, " +
                          (branches ? "identical" : "different"));
    out.details.push_back("fidelity.json " + std::to_string(files[0].second.size()) + " bytes, " +
                          (fidelity ? "identical" : "different"));
    out.details.push_back(std::string("in-process report ") + (in_process ? "matches" : "differs"));
    return out;
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, Criterion>> criteria = {
        {"Reduction fidelity", reduction},
        {"Balance fidelity", balance},
        {"Rewrite fidelity", rewrite},
        {"Branch reproduction (paper mode)", branches},
        {"Fidelity report coverage", coverage},
        {"Special functions", special_functions},
        {"True-solution verification", true_solution},
        {"Inconsistency detection", inconsistency},
        {"Discrepancy D1", d1},
        {"Determinism", determinism},
    };
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, {std::string("exception: ") + e.what()}};
        }
        const auto xf = kExpectedFailures.find(id);
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first;
        if (xf != kExpectedFailures.end()) std::cout << (o.pass ? " (unexpected pass)" : " (expected failure)");
        std::cout << "\n";
        for (const auto& d : o.details) std::cout << "    " << d << "\n";
        if (!o.pass && xf != kExpectedFailures.end()) std::cout << "    why: " << xf->second << "\n";
        if (o.pass == (xf != kExpectedFailures.end())) ++unexpected;
    }
    std::cout << (unexpected == 0 ? "acceptance: all outcomes as expected" : "acceptance: unexpected outcomes")
              << "\n";
    return unexpected == 0 ? 0 : 1;
}
