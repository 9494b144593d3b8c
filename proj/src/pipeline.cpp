#include "hermite/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace hermite {

using nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(trim(part));
    return out;
}

double to_double(const std::string& s, const std::string& what)
{
    const std::string t = trim(s);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError(what + ": '" + s + "' is not a number");
    return v;
}

long long to_integer(const std::string& s, const std::string& what)
{
    const std::string t = trim(s);
    long long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError(what + ": '" + s + "' is not an integer");
    return v;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << v;
    return os.str();
}

}  // namespace

Grid1D parse_axis(const std::string& text)
{
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("grid axis '" + text + "' must be lo:hi:points");
    Grid1D g{to_double(parts[0], "grid"), to_double(parts[1], "grid"),
             static_cast<int>(to_integer(parts[2], "grid"))};
    if (!(g.hi > g.lo)) throw ConfigError("grid axis '" + text + "' needs hi > lo");
    if (g.points < 2) throw ConfigError("grid axis '" + text + "' needs at least 2 points");
    return g;
}

Grid2D parse_grid(const std::string& text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 2) throw ConfigError("grid '" + text + "' must be x0:x1:nx,t0:t1:nt");
    return Grid2D{parse_axis(parts[0]), parse_axis(parts[1])};
}

void apply_setting(RunConfig& config, const std::string& raw_key, const std::string& raw_value)
{
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    try {
        if (key == "equation") {
            config.equation = value;
        } else if (key == "case") {
            config.closures.clear();
            for (const auto& c : split(value, ',')) config.closures.push_back(closure_kind_from_string(c));
        } else if (key == "mode") {
            config.mode = collect_mode_from_string(value);
        } else if (key == "sigma") {
            const long long s = to_integer(value, "sigma");
            if (s != 1 && s != -1) throw ConfigError("sigma must be +1 or -1");
            config.sigma = static_cast<int>(s);
        } else if (key == "grid") {
            config.grid = parse_grid(value);
        } else if (key == "zeta_grid") {
            config.zeta_grid = parse_axis(value);
        } else if (key == "bind") {
            for (const auto& item : split(value, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw ConfigError("bind expects NAME=VALUE, got '" + item + "'");
                config.bindings[trim(item.substr(0, eq))] = to_double(item.substr(eq + 1), "bind");
            }
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(to_integer(value, "seed"));
        } else if (key == "out") {
            config.out = value;
        } else if (key == "max_branches") {
            config.max_branches = static_cast<std::size_t>(to_integer(value, "max_branches"));
        } else if (key == "max_degree") {
            config.max_degree = static_cast<int>(to_integer(value, "max_degree"));
        } else if (key == "catalog") {
            config.catalog = value;
        } else if (key == "branches") {
            config.branches = value;
        } else if (key == "branch") {
            config.branch = value;
        } else {
            throw ConfigError("unknown setting '" + key + "'");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

RunConfig parse_config_text(const std::string& text, RunConfig base)
{
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        // `bind` lines accumulate; the value itself holds NAME=VALUE.
        apply_setting(base, key, line.substr(eq + 1));
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

std::string equation_key(const std::string& path)
{
    return std::filesystem::path(path).stem().string();
}

DerivedRun derive(const ModelSpec& model, const std::string& key, ClosureKind closure, CollectMode mode, int sigma,
                  const SolveOptions& options)
{
    DerivedRun run;
    run.equation = key;
    run.model = model;
    run.model.lhs = model.bound_lhs();
    run.model.exponent_symbol.reset();
    run.frame = TravelingWaveFrame{Expression::symbol(sym::c), Expression::symbol(sym::mu), sigma};
    run.closure = closure;
    run.mode = mode;
    const ReducedODE ode = apply_wave_transform(run.model, run.frame);
    try {
        run.balance = compute_balance(ode);
    } catch (const BalanceError&) {
        if (!model.balance_override) throw;
    }
    run.N = model.balance_override ? *model.balance_override : *run.balance;
    const AlgebraicSystem sys = assemble_system(ode, build_ansatz(run.N), mode);
    run.system = apply_closure(sys, closure_formula(closure));
    SolveOptions opts = options;
    for (const auto& s : model.nonzero) opts.nonzero.push_back(Expression::symbol(s));
    run.result = branch_solve(run.system, opts);
    return run;
}

DerivedRun derive(const RunConfig& config, ClosureKind closure)
{
    if (!std::filesystem::exists(config.equation)) throw ConfigError("equation file not found: " + config.equation);
    SolveOptions opts;
    opts.max_branches = config.max_branches;
    opts.max_degree = config.max_degree;
    return derive(load_equation_file(config.equation), equation_key(config.equation), closure, config.mode,
                  config.sigma, opts);
}

// --- JSON --------------------------------------------------------------------

ordered_json branches_to_json(const std::vector<DerivedRun>& runs)
{
    ordered_json out;
    out["format"] = 1;
    out["runs"] = ordered_json::array();
    for (const auto& run : runs) {
        ordered_json r;
        r["equation"] = run.equation;
        r["model"] = {{"name", run.model.name},
                      {"lhs", render(run.model.bound_lhs())},
                      {"unknown", run.model.unknown},
                      {"variables", run.model.variables},
                      {"params", run.model.params},
                      {"solve_for", run.model.solve_for},
                      {"nonzero", run.model.nonzero},
                      {"bindings", run.model.bindings}};
        r["sigma"] = run.frame.sigma;
        r["case"] = to_string(run.closure);
        r["mode"] = to_string(run.mode);
        r["N"] = run.N;
        r["balance"] = run.balance ? ordered_json(*run.balance) : ordered_json(nullptr);
        r["complete"] = !run.result.incomplete;
        r["unsolved"] = run.result.unsolved;
        r["branches"] = ordered_json::array();
        for (std::size_t i = 0; i < run.result.branches.size(); ++i) {
            const SolutionBranch& b = run.result.branches[i];
            ordered_json jb;
            jb["id"] = run.branch_id(i);
            jb["assignments"] = ordered_json::object();
            for (const auto& [name, value] : b.assignments) jb["assignments"][name] = render(value);
            jb["free"] = b.free;
            jb["case"] = to_string(run.closure);
            jb["mode"] = to_string(b.mode);
            jb["provenance"] = b.provenance;
            jb["assumptions"] = ordered_json::array();
            for (const auto& a : b.assumptions) jb["assumptions"].push_back(render(a));
            r["branches"].push_back(std::move(jb));
        }
        out["runs"].push_back(std::move(r));
    }
    return out;
}

std::vector<DerivedRun> branches_from_json(const ordered_json& j)
{
    std::vector<DerivedRun> runs;
    try {
        for (const auto& r : j.at("runs")) {
            DerivedRun run;
            run.equation = r.at("equation").get<std::string>();
            const auto& m = r.at("model");
            run.model.name = m.at("name").get<std::string>();
            run.model.unknown = m.at("unknown").get<std::string>();
            run.model.variables = m.at("variables").get<std::vector<std::string>>();
            run.model.params = m.at("params").get<std::vector<std::string>>();
            run.model.solve_for = m.at("solve_for").get<std::vector<std::string>>();
            run.model.nonzero = m.at("nonzero").get<std::vector<std::string>>();
            run.model.bindings = m.at("bindings").get<Bindings>();
            ParseOptions po;
            po.functions = {run.model.unknown, sym::z};
            run.model.lhs = normalize(parse_expression(m.at("lhs").get<std::string>(), po));
            run.frame = TravelingWaveFrame{Expression::symbol(sym::c), Expression::symbol(sym::mu),
                                           r.at("sigma").get<int>()};
            run.closure = closure_kind_from_string(r.at("case").get<std::string>());
            run.mode = collect_mode_from_string(r.at("mode").get<std::string>());
            run.N = r.at("N").get<int>();
            if (!r.at("balance").is_null()) run.balance = r.at("balance").get<int>();
            run.result.incomplete = !r.at("complete").get<bool>();
            run.result.unsolved = r.at("unsolved").get<std::vector<std::string>>();
            for (const auto& jb : r.at("branches")) {
                SolutionBranch b;
                for (const auto& [name, text] : jb.at("assignments").items())
                    b.assignments[name] = normalize(parse_expression(text.get<std::string>()));
                b.free = jb.at("free").get<std::vector<std::string>>();
                b.mode = collect_mode_from_string(jb.at("mode").get<std::string>());
                b.provenance = jb.at("provenance").get<std::vector<std::string>>();
                for (const auto& a : jb.at("assumptions"))
                    b.assumptions.push_back(normalize(parse_expression(a.get<std::string>())));
                run.result.branches.push_back(std::move(b));
            }
            runs.push_back(std::move(run));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed branches file: ") + e.what());
    } catch (const ParseError& e) {
        throw ConfigError(std::string("malformed expression in branches file: ") + e.what());
    }
    return runs;
}

// --- verification of derived branches ---------------------------------------

namespace {

WaveSetup setup_for(const DerivedRun& run)
{
    return WaveSetup{run.model, run.frame, closure_formula(run.closure), run.N};
}

ordered_json report_json(const ResidualReport& r)
{
    ordered_json j;
    j["target"] = r.target;
    j["grid"] = r.grid;
    j["max_abs"] = r.max_abs;
    j["median_abs"] = r.median_abs;
    j["scale"] = r.scale;
    j["evaluated"] = r.evaluated;
    j["failed"] = r.failed;
    j["classification"] = to_string(r.classification);
    j["locus"] = r.locus ? ordered_json(*r.locus) : ordered_json(nullptr);
    j["notes"] = r.notes;
    return j;
}

const ResidualReport* find_report(const std::vector<ResidualReport>& reports, const std::string& target)
{
    for (const auto& r : reports)
        if (r.target == target) return &r;
    return nullptr;
}

std::string cell(const ResidualReport* r)
{
    if (!r) return "-";
    return fmt(r->max_abs) + " (" + to_string(r->classification) + ")";
}

}  // namespace

std::vector<std::string> unbound_symbols(const std::vector<DerivedRun>& runs, const Bindings& bindings)
{
    std::set<std::string> out;
    for (const auto& run : runs) {
        Bindings b = run.model.bindings;
        for (const auto& [k, v] : bindings) b[k] = v;
        for (const auto& branch : run.result.branches)
            for (const auto& s : WaveEvaluator(setup_for(run), branch.assignments, b).unbound()) out.insert(s);
    }
    return {out.begin(), out.end()};
}

std::vector<BranchVerification> verify_branches(const std::vector<DerivedRun>& runs, const Bindings& bindings,
                                                const FidelityOptions& options)
{
    std::vector<BranchVerification> out;
    for (const auto& run : runs) {
        Bindings b = run.model.bindings;
        for (const auto& [k, v] : bindings) b[k] = v;
        const WaveSetup setup = setup_for(run);
        ResidualOptions hermite_opts = options.residual;
        if (const auto locus = conditional_locus(setup.closure); !locus.empty()) {
            std::string joined;
            for (const auto& l : locus) joined += (joined.empty() ? "" : ", ") + l;
            hermite_opts.locus = "particular part exact on " + joined;
        }
        for (std::size_t i = 0; i < run.result.branches.size(); ++i) {
            BranchVerification v;
            v.id = run.branch_id(i);
            const WaveEvaluator wave(setup, run.result.branches[i].assignments, b);
            if (const auto missing = wave.unbound(); !missing.empty()) {
                std::string names;
                for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
                v.notes.push_back("unbound symbols: " + names);
                out.push_back(std::move(v));
                continue;
            }
            const auto attempt = [&](const char* what, auto&& fn) {
                try {
                    v.reports.push_back(fn());
                    return true;
                } catch (const VerificationError& e) {
                    v.notes.push_back(e.what());
                } catch (const EvaluationError& e) {
                    v.notes.push_back(std::string(what) + ": " + e.what());
                } catch (const std::domain_error& e) {
                    v.notes.push_back(std::string(what) + ": " + e.what());
                }
                return false;
            };
            attempt("hermite", [&] { return hermite_residual(wave, options.zeta_grid, hermite_opts); });
            if (attempt("pde", [&] { return pde_residual(wave, options.grid, options.residual); }))
                v.classification = v.reports.back().classification;
            out.push_back(std::move(v));
        }
    }
    return out;
}

ordered_json fidelity_to_json(const std::vector<BranchVerification>& branches,
                              const std::optional<FidelityReport>& report)
{
    ordered_json out;
    out["format"] = 1;
    out["branches"] = ordered_json::array();
    for (const auto& b : branches) {
        ordered_json j;
        j["id"] = b.id;
        j["classification"] = to_string(b.classification);
        j["reports"] = ordered_json::array();
        for (const auto& r : b.reports) j["reports"].push_back(report_json(r));
        j["notes"] = b.notes;
        out["branches"].push_back(std::move(j));
    }
    if (!report) return out;

    out["counts"] = ordered_json::array();
    for (const auto& c : report->counts) {
        ordered_json j;
        j["equation"] = c.equation;
        j["claimed"] = c.claimed;
        j["catalog_rows"] = c.catalog_rows;
        j["derived_branches"] = c.derived;
        j["derivation_complete"] = c.complete;
        out["counts"].push_back(std::move(j));
    }
    out["discrepancies"] = ordered_json::array();
    for (const auto& d : report->discrepancies)
        out["discrepancies"].push_back(
            {{"id", d.id}, {"equation", d.equation}, {"summary", d.summary}, {"details", d.details}});
    out["entries"] = ordered_json::array();
    for (const auto& e : report->entries) {
        ordered_json j;
        j["id"] = e.row.id;
        j["locator"] = e.row.locator;
        j["equation"] = e.row.equation;
        j["case"] = to_string(e.row.closure);
        j["transcription"] = ordered_json::object();
        for (const auto& [name, text] : e.row.assignment_text) j["transcription"][name] = text;
        j["free"] = e.row.free;
        j["matched"] = e.matched ? ordered_json(*e.matched) : ordered_json(nullptr);
        j["extra_constraints"] = e.extra_constraints;
        j["classification"] = to_string(e.classification);
        j["reports"] = ordered_json::array();
        for (const auto& r : e.reports) j["reports"].push_back(report_json(r));
        std::vector<std::string> notes = e.row.notes;
        notes.insert(notes.end(), e.notes.begin(), e.notes.end());
        j["notes"] = notes;
        out["entries"].push_back(std::move(j));
    }
    return out;
}

void write_summary(std::ostream& out, const std::vector<BranchVerification>& branches,
                   const std::optional<FidelityReport>& report)
{
    const auto row = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d,
                         const std::string& e) {
        out << std::left << std::setw(26) << a << std::setw(12) << b << std::setw(34) << c << std::setw(34) << d << e
            << "\n";
    };
    if (report) {
        out << "Published branches\n";
        row("branch", "matched", "Hermite residual", "PDE residual", "classification");
        for (const auto& e : report->entries)
            row(e.row.id, e.matched ? "yes" : "no", cell(find_report(e.reports, "hermite")),
                cell(find_report(e.reports, "pde")), to_string(e.classification));
        out << "\nCounts\n";
        for (const auto& c : report->counts) {
            out << "  " << c.equation << ": catalog " << c.catalog_rows << " rows, claimed " << c.claimed
                << "; derived (paper mode)";
            for (const auto& [k, n] : c.derived) out << " " << k << "=" << (n < 0 ? std::string("-") : std::to_string(n));
            out << (c.complete ? "" : " (incomplete)") << "\n";
        }
        out << "\nDiscrepancies\n";
        for (const auto& d : report->discrepancies) {
            out << "  " << d.id << " [" << d.equation << "] " << d.summary << "\n";
            for (const auto& line : d.details) out << "    " << line << "\n";
        }
        out << "\n";
    }
    out << "Derived branches\n";
    row("branch", "", "Hermite residual", "PDE residual", "classification");
    for (const auto& b : branches)
        row(b.id, "", cell(find_report(b.reports, "hermite")), cell(find_report(b.reports, "pde")),
            to_string(b.classification));
}

SampleResult write_samples(std::ostream& out, const WaveEvaluator& wave, const Grid2D& grid)
{
    const auto xs = grid.x.nodes();
    const auto ts = grid.t.nodes();
    std::ostringstream body;
    body << std::setprecision(17);
    SampleResult result;
    std::string first_failure;
    for (double x : xs) {
        for (double t : ts) {
            body << x << "," << t << ",";
            try {
                body << wave.u(x, t) << "\n";
            } catch (const EvaluationError& e) {
                body << "nan\n";
                ++result.failed;
                if (first_failure.empty()) first_failure = e.what();
            } catch (const std::domain_error& e) {
                body << "nan\n";
                ++result.failed;
                if (first_failure.empty()) first_failure = e.what();
            }
            ++result.rows;
        }
    }
    if (result.failed * 10 > result.rows)
        throw VerificationError("sampling failed at " + std::to_string(result.failed) + " of " +
                                std::to_string(result.rows) + " points (" + first_failure + ")");
    out << "x,t,u\n" << body.str();
    return result;
}

}  // namespace hermite

namespace hermite {

ReportOutput run_report(const Catalog& catalog, const RunConfig& config)
{
    ReportOutput out;
    SolveOptions solve;
    solve.max_branches = config.max_branches;
    solve.max_degree = config.max_degree;
    FidelityOptions fopts;
    fopts.zeta_grid = config.zeta_grid;
    fopts.grid = config.grid;
    for (const auto& eq : catalog.equations) {
        const ModelSpec model = load_equation_file(eq.path);
        std::vector<DerivedRun> runs;
        for (const ClosureKind kind :
             {ClosureKind::ConstantDerivative, ClosureKind::ExactKummer, ClosureKind::TrigDerivative})
            runs.push_back(derive(model, eq.key, kind, CollectMode::Paper, eq.sigma, solve));
        Bindings b = eq.bindings;
        for (const auto& [k, v] : config.bindings) b[k] = v;
        auto verified = verify_branches(runs, b, fopts);
        out.branches.insert(out.branches.end(), verified.begin(), verified.end());
        out.runs.insert(out.runs.end(), runs.begin(), runs.end());
    }
    out.report = fidelity_report(out.runs, catalog, fopts);
    out.branches_json = branches_to_json(out.runs);
    out.fidelity_json = fidelity_to_json(out.branches, out.report);
    std::ostringstream summary;
    write_summary(summary, out.branches, out.report);
    out.summary = summary.str();
    return out;
}

}  // namespace hermite
