#pragma once

#include "hermite/fidelity.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hermite {

/// Bad configuration value or missing input file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string equation;
    std::vector<ClosureKind> closures{ClosureKind::ConstantDerivative};
    CollectMode mode = CollectMode::Strict;
    int sigma = -1;
    std::size_t max_branches = 512;
    int max_degree = 8;
    std::string out = "out";
    Grid1D zeta_grid{0.1, 2.0, 64};
    Grid2D grid;
    Bindings bindings;
    std::uint64_t seed = 0;
    std::string catalog;
    std::string branches;
    std::string branch;
};

/// Applies one `key = value` setting; keys match the long flag names.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
/// Flat `key = value` lines; `#` starts a comment.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// "x0:x1:n" for one axis.
Grid1D parse_axis(const std::string& text);
/// "x0:x1:nx,t0:t1:nt".
Grid2D parse_grid(const std::string& text);

/// parse -> reduce -> balance -> ansatz -> assemble -> closure -> solve.
DerivedRun derive(const ModelSpec& model, const std::string& key, ClosureKind closure, CollectMode mode, int sigma,
                  const SolveOptions& options);
DerivedRun derive(const RunConfig& config, ClosureKind closure);

/// File stem of an equation path ("data/equations/kg.eq" -> "kg").
std::string equation_key(const std::string& path);

nlohmann::ordered_json branches_to_json(const std::vector<DerivedRun>& runs);
/// Rebuilds runs (model, frame, closure, branches) without the source equation file.
std::vector<DerivedRun> branches_from_json(const nlohmann::ordered_json& j);

/// Residual reports of one derived branch.
struct BranchVerification {
    std::string id;
    std::vector<ResidualReport> reports;
    Classification classification = Classification::OutOfDomain;
    std::vector<std::string> notes;
};

/// Symbols without a value for any branch of the runs, sorted.
std::vector<std::string> unbound_symbols(const std::vector<DerivedRun>& runs, const Bindings& bindings);

/// Hermite and PDE residuals of every branch with the given bindings.
std::vector<BranchVerification> verify_branches(const std::vector<DerivedRun>& runs, const Bindings& bindings,
                                                const FidelityOptions& options);

nlohmann::ordered_json fidelity_to_json(const std::vector<BranchVerification>& branches,
                                        const std::optional<FidelityReport>& report);

/// Plain-text table: branch, Hermite residual, PDE residual, classification.
void write_summary(std::ostream& out, const std::vector<BranchVerification>& branches,
                   const std::optional<FidelityReport>& report);

struct SampleResult {
    int rows = 0;
    int failed = 0;
};

/// CSV "x,t,u", x-major, 17 significant digits; failed points are written as nan.
/// Throws VerificationError when more than 10% of the points fail.
SampleResult write_samples(std::ostream& out, const WaveEvaluator& wave, const Grid2D& grid);

/// Everything `report` writes.
struct ReportOutput {
    std::vector<DerivedRun> runs;
    std::vector<BranchVerification> branches;
    FidelityReport report;
    nlohmann::ordered_json branches_json;
    nlohmann::ordered_json fidelity_json;
    std::string summary;
};

/// Derives every catalog equation under every closure in paper mode, verifies
/// the derived branches with the catalog bindings (config binds win) and
/// builds the fidelity report.
ReportOutput run_report(const Catalog& catalog, const RunConfig& config);

}  // namespace hermite
