#pragma once

#include "hermite/ansatz.hpp"
#include "hermite/closure.hpp"
#include "hermite/expr.hpp"
#include "hermite/parser.hpp"
#include "hermite/reduce.hpp"
#include "hermite/solve.hpp"
#include "hermite/verify.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hermite {

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One published coefficient equation: the coefficient of z^power.
struct DisplayedEquation {
    int power = 0;
    std::string text;
    Expression expr;
};

struct CatalogEquation {
    std::string key;
    /// Equation file, resolved against the catalog's directory.
    std::string path;
    int sigma = -1;
    int displayed_N = 1;
    int claimed_rows = 0;
    /// Discrepancy ids for "balance", "absent" and "differs" findings.
    std::map<std::string, std::string> labels;
    std::vector<DisplayedEquation> displayed_system;
    Bindings bindings;
};

struct CatalogRow {
    std::string id;
    std::string locator;
    std::string equation;
    ClosureKind closure = ClosureKind::ConstantDerivative;
    std::vector<std::pair<std::string, std::string>> assignment_text;
    std::map<std::string, Expression> assignments;
    std::vector<std::string> free;
    /// Equation defaults overridden by the row's own "bind" entries.
    Bindings bindings;
    std::optional<std::string> out_of_domain;
    std::vector<std::string> notes;
};

struct Catalog {
    std::vector<CatalogEquation> equations;
    std::vector<CatalogRow> rows;

    const CatalogEquation& equation(const std::string& key) const;
};

/// Parses the JSON catalog; relative equation paths are resolved against base_dir.
Catalog parse_catalog(const std::string& json_text, const std::string& base_dir);
Catalog load_catalog(const std::string& path);

/// Everything one derivation produced.
struct DerivedRun {
    std::string equation;  // catalog key or file stem
    ModelSpec model;
    TravelingWaveFrame frame;
    ClosureKind closure = ClosureKind::ConstantDerivative;
    CollectMode mode = CollectMode::Strict;
    int N = 1;
    /// Degree from the balancing principle, when it is a positive integer.
    std::optional<int> balance;
    AlgebraicSystem system;
    SolveResult result;

    /// "<equation>/<closure>/<mode>/<index>".
    std::string branch_id(std::size_t index) const;
    std::string prefix() const;
};

struct Discrepancy {
    std::string id;
    std::string equation;
    std::string summary;
    std::vector<std::string> details;
};

struct FidelityEntry {
    CatalogRow row;
    std::optional<std::string> matched;
    /// Assignments the matched branch makes beyond the published ones.
    std::vector<std::string> extra_constraints;
    std::vector<ResidualReport> reports;
    Classification classification = Classification::OutOfDomain;
    std::vector<std::string> notes;
};

struct EquationCount {
    std::string equation;
    int claimed = 0;
    int catalog_rows = 0;
    /// Derived branches per closure in paper mode; -1 when that run is missing.
    std::map<std::string, int> derived;
    bool complete = true;
};

struct FidelityReport {
    std::vector<FidelityEntry> entries;
    std::vector<Discrepancy> discrepancies;
    std::vector<EquationCount> counts;
};

struct FidelityOptions {
    Grid1D zeta_grid{0.1, 2.0, 64};
    Grid2D grid;
    ResidualOptions residual;
};

/// Coefficient equations grouped by power of z (paper mode, no closure) set
/// against the published system, plus the balance check.
std::vector<Discrepancy> system_discrepancies(const CatalogEquation& equation, const ModelSpec& model);

/// One entry per catalog row: match against the paper-mode runs of the same
/// equation and closure, residual reports, and the global comparisons.
FidelityReport fidelity_report(const std::vector<DerivedRun>& runs, const Catalog& catalog,
                               const FidelityOptions& options = {});

/// True when every row assignment holds under the branch and no published
/// free symbol is assigned. Symbolic first, then numeric at fixed sample points.
bool branch_matches(const CatalogRow& row, const SolutionBranch& branch);

}  // namespace hermite
