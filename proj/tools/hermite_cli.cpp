// Command-line front end: derive, verify, sample, report.
//
// Exit codes: 0 success, 1 input error, 2 solver budget exhausted,
// 3 verification-domain failure.

#include "hermite/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace hermite;
namespace fs = std::filesystem;

namespace {

constexpr int kInputError = 1;
constexpr int kIncomplete = 2;
constexpr int kVerification = 3;

struct Flags {
    std::string config;
    std::optional<std::string> equation, cases, mode, sigma, grid, zeta_grid, seed, out, catalog, branches, branch;
    std::optional<std::string> max_branches;
    std::vector<std::string> binds;
};

RunConfig resolve_config(const Flags& f)
{
    RunConfig cfg;
    if (!f.config.empty()) cfg = load_config(f.config);
    const std::pair<const char*, const std::optional<std::string>*> settings[] = {
        {"equation", &f.equation}, {"case", &f.cases},        {"mode", &f.mode},
        {"sigma", &f.sigma},       {"grid", &f.grid},         {"zeta_grid", &f.zeta_grid},
        {"seed", &f.seed},         {"out", &f.out},           {"catalog", &f.catalog},
        {"branches", &f.branches}, {"branch", &f.branch},     {"max_branches", &f.max_branches},
    };
    for (const auto& [key, value] : settings)
        if (*value) apply_setting(cfg, key, **value);
    for (const auto& b : f.binds) apply_setting(cfg, "bind", b);
    if (cfg.catalog.empty()) cfg.catalog = std::string(HERMITE_DATA_DIR) + "/catalog/published_branches.json";
    return cfg;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

std::string branches_path(const RunConfig& cfg)
{
    return cfg.branches.empty() ? (fs::path(cfg.out) / "branches.json").string() : cfg.branches;
}

std::vector<DerivedRun> read_branches(const std::string& path)
{
    const std::string text = read_file(path);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return branches_from_json(j);
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

int cmd_derive(const RunConfig& cfg)
{
    if (cfg.equation.empty()) throw ConfigError("derive needs --equation");
    std::vector<DerivedRun> runs;
    bool incomplete = false;
    for (const ClosureKind kind : cfg.closures) {
        runs.push_back(derive(cfg, kind));
        const DerivedRun& r = runs.back();
        std::cout << r.prefix() << ": " << r.result.branches.size() << " branches, N = " << r.N << "\n";
        if (r.result.incomplete) {
            incomplete = true;
            // Full systems are in branches.json; one line each is enough here.
            std::cout << "  incomplete, " << r.result.unsolved.size() << " unsolved subsystem(s):\n";
            for (const auto& u : r.result.unsolved)
                std::cout << "    " << (u.size() > 120 ? u.substr(0, 117) + "..." : u) << "\n";
        }
    }
    const fs::path out = fs::path(cfg.out) / "branches.json";
    write_file(out, branches_to_json(runs).dump(2) + "\n");
    std::cout << "wrote " << out.string() << "\n";
    return incomplete ? kIncomplete : 0;
}

int cmd_verify(const RunConfig& cfg)
{
    std::vector<DerivedRun> runs = read_branches(branches_path(cfg));

    // Runs derived from a catalog equation file pick up the catalog bindings.
    std::optional<Catalog> catalog;
    if (fs::exists(cfg.catalog)) catalog = load_catalog(cfg.catalog);

    FidelityOptions fopts;
    fopts.zeta_grid = cfg.zeta_grid;
    fopts.grid = cfg.grid;
    std::vector<BranchVerification> verified;
    std::vector<std::string> missing;
    for (const auto& run : runs) {
        Bindings b = run.model.bindings;
        if (catalog)
            for (const auto& eq : catalog->equations)
                if (eq.key == run.equation)
                    for (const auto& [k, v] : eq.bindings) b[k] = v;
        for (const auto& [k, v] : cfg.bindings) b[k] = v;
        const std::vector<DerivedRun> one{run};
        for (const auto& s : unbound_symbols(one, b)) missing.push_back(run.prefix() + ": " + s);
        auto v = verify_branches(one, b, fopts);
        verified.insert(verified.end(), v.begin(), v.end());
    }
    if (!missing.empty()) {
        std::cerr << "unbound symbols (bind them with --bind NAME=VALUE):\n";
        for (const auto& m : missing) std::cerr << "  " << m << "\n";
        return kInputError;
    }

    std::optional<FidelityReport> report;
    bool catalog_runs = false;
    if (catalog)
        for (const auto& r : runs)
            for (const auto& eq : catalog->equations)
                catalog_runs = catalog_runs || (r.mode == CollectMode::Paper && r.equation == eq.key);
    if (catalog_runs) report = fidelity_report(runs, *catalog, fopts);

    std::ostringstream summary;
    write_summary(summary, verified, report);
    write_file(fs::path(cfg.out) / "fidelity.json", fidelity_to_json(verified, report).dump(2) + "\n");
    write_file(fs::path(cfg.out) / "summary.txt", summary.str());
    std::cout << summary.str();
    return 0;
}

int cmd_sample(const RunConfig& cfg)
{
    if (cfg.branch.empty()) throw ConfigError("sample needs --branch ID");
    std::vector<DerivedRun> runs;
    if (!cfg.branches.empty() || cfg.equation.empty()) {
        runs = read_branches(branches_path(cfg));
    } else {
        for (const ClosureKind kind : cfg.closures) runs.push_back(derive(cfg, kind));
    }
    for (const auto& run : runs) {
        for (std::size_t i = 0; i < run.result.branches.size(); ++i) {
            if (run.branch_id(i) != cfg.branch) continue;
            Bindings b = run.model.bindings;
            for (const auto& [k, v] : cfg.bindings) b[k] = v;
            const WaveEvaluator wave(WaveSetup{run.model, run.frame, closure_formula(run.closure), run.N},
                                     run.result.branches[i].assignments, b);
            if (const auto missing = wave.unbound(); !missing.empty()) {
                std::cerr << "unbound symbols: " << join(missing) << "\n";
                return kInputError;
            }
            std::ostringstream csv;
            const SampleResult r = write_samples(csv, wave, cfg.grid);
            const fs::path out = fs::path(cfg.out) / "samples.csv";
            write_file(out, csv.str());
            std::cout << "wrote " << out.string() << ": " << r.rows << " rows";
            if (r.failed) std::cout << ", " << r.failed << " failed points written as nan";
            std::cout << "\n";
            return 0;
        }
    }
    throw ConfigError("no branch with id '" + cfg.branch + "'");
}

int cmd_report(const RunConfig& cfg)
{
    const Catalog catalog = load_catalog(cfg.catalog);
    const ReportOutput r = run_report(catalog, cfg);
    const fs::path out(cfg.out);
    write_file(out / "branches.json", r.branches_json.dump(2) + "\n");
    write_file(out / "fidelity.json", r.fidelity_json.dump(2) + "\n");
    write_file(out / "summary.txt", r.summary);
    std::cout << r.summary;
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hermite auxiliary-equation travelling waves"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config, "flat key = value file; flags override it");
    app.add_option("--equation", f.equation, "equation file");
    app.add_option("--case", f.cases, "closure: constant, kummer, trig (comma list allowed)");
    app.add_option("--mode", f.mode, "strict or paper");
    app.add_option("--sigma", f.sigma, "wave direction sign, +1 or -1");
    app.add_option("--grid", f.grid, "x0:x1:nx,t0:t1:nt");
    app.add_option("--zeta-grid", f.zeta_grid, "z0:z1:n for the Hermite residual");
    app.add_option("--bind", f.binds, "NAME=VALUE, repeatable")->allow_extra_args(false);
    app.add_option("--seed", f.seed, "seed recorded for reproducibility");
    app.add_option("--max-branches", f.max_branches, "solver branch budget");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--catalog", f.catalog, "published branch catalog (JSON)");
    app.add_option("--branches", f.branches, "branches.json to read");
    app.add_option("--branch", f.branch, "branch id for sample");

    std::string command;
    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"derive", "derive branches and write branches.json"},
             {"verify", "residual checks of a branches file; writes fidelity.json and summary.txt"},
             {"sample", "u on an (x,t) grid for one branch as CSV"},
             {"report", "derive, verify and compare against the catalog"}})
        app.add_subcommand(name, help)->fallthrough()->callback([&command, n = name] { command = n; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kInputError;
    }

    try {
        const RunConfig cfg = resolve_config(f);
        if (command == "derive") return cmd_derive(cfg);
        if (command == "verify") return cmd_verify(cfg);
        if (command == "sample") return cmd_sample(cfg);
        return cmd_report(cfg);
    } catch (const VerificationError& e) {
        std::cerr << "verification error: " << e.what() << "\n";
        return kVerification;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
}
