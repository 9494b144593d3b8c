#include "hermite/fidelity.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace hermite {

using nlohmann::json;

const CatalogEquation& Catalog::equation(const std::string& key) const
{
    for (const auto& e : equations)
        if (e.key == key) return e;
    throw CatalogError("catalog has no equation '" + key + "'");
}

namespace {

template <typename T>
T field(const json& j, const char* name, const std::string& where)
{
    if (!j.contains(name)) throw CatalogError(where + ": missing field '" + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw CatalogError(where + ": field '" + name + "': " + e.what());
    }
}

Bindings read_bindings(const json& j, const std::string& where)
{
    Bindings out;
    if (!j.is_object()) throw CatalogError(where + ": bindings must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) throw CatalogError(where + ": binding '" + k + "' is not a number");
        out[k] = v.get<double>();
    }
    return out;
}

Expression parse_dsl(const std::string& text, const std::string& where)
{
    try {
        return normalize(parse_expression(text));
    } catch (const ParseError& e) {
        throw CatalogError(where + ": " + e.what());
    }
}

}  // namespace

Catalog parse_catalog(const std::string& json_text, const std::string& base_dir)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw CatalogError(std::string("catalog is not valid JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("equations") || !root.contains("rows"))
        throw CatalogError("catalog needs 'equations' and 'rows'");

    Catalog cat;
    for (const auto& je : root.at("equations")) {
        CatalogEquation eq;
        eq.key = field<std::string>(je, "key", "equation");
        const std::string where = "equation " + eq.key;
        std::filesystem::path p = field<std::string>(je, "path", where);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        eq.path = p.lexically_normal().string();
        // Derived runs are keyed by file stem; the catalog must agree.
        if (p.stem().string() != eq.key) throw CatalogError(where + ": key must equal the equation file stem");
        eq.sigma = field<int>(je, "sigma", where);
        if (eq.sigma != 1 && eq.sigma != -1) throw CatalogError(where + ": sigma must be +1 or -1");
        eq.displayed_N = field<int>(je, "displayed_N", where);
        eq.claimed_rows = field<int>(je, "claimed_rows", where);
        if (je.contains("labels")) eq.labels = je.at("labels").get<std::map<std::string, std::string>>();
        if (je.contains("bindings")) eq.bindings = read_bindings(je.at("bindings"), where);
        if (je.contains("displayed_system")) {
            for (const auto& jd : je.at("displayed_system")) {
                DisplayedEquation d;
                d.power = field<int>(jd, "power", where);
                d.text = field<std::string>(jd, "expr", where);
                d.expr = parse_dsl(d.text, where + " displayed z^" + std::to_string(d.power));
                eq.displayed_system.push_back(std::move(d));
            }
        }
        cat.equations.push_back(std::move(eq));
    }

    std::set<std::string> ids;
    for (const auto& jr : root.at("rows")) {
        CatalogRow row;
        row.id = field<std::string>(jr, "id", "row");
        const std::string where = "row " + row.id;
        if (!ids.insert(row.id).second) throw CatalogError(where + ": duplicate id");
        row.locator = field<std::string>(jr, "locator", where);
        row.equation = field<std::string>(jr, "equation", where);
        const CatalogEquation& eq = cat.equation(row.equation);
        try {
            row.closure = closure_kind_from_string(field<std::string>(jr, "case", where));
        } catch (const std::invalid_argument& e) {
            throw CatalogError(where + ": " + e.what());
        }
        const json& ja = jr.contains("assignments") ? jr.at("assignments") : json::object();
        for (const auto& [name, text] : ja.items()) {
            if (!text.is_string()) throw CatalogError(where + ": assignment '" + name + "' is not a string");
            row.assignment_text.emplace_back(name, text.get<std::string>());
            row.assignments[name] = parse_dsl(text.get<std::string>(), where + " " + name);
        }
        if (jr.contains("free")) row.free = jr.at("free").get<std::vector<std::string>>();
        row.bindings = eq.bindings;
        if (jr.contains("bind"))
            for (const auto& [k, v] : read_bindings(jr.at("bind"), where)) row.bindings[k] = v;
        if (jr.contains("out_of_domain") && !jr.at("out_of_domain").is_null())
            row.out_of_domain = jr.at("out_of_domain").get<std::string>();
        if (jr.contains("notes")) row.notes = jr.at("notes").get<std::vector<std::string>>();
        cat.rows.push_back(std::move(row));
    }
    return cat;
}

Catalog load_catalog(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw CatalogError("cannot open catalog " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_catalog(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string DerivedRun::prefix() const
{
    return equation + "/" + to_string(closure) + "/" + to_string(mode);
}

std::string DerivedRun::branch_id(std::size_t index) const
{
    return prefix() + "/" + std::to_string(index);
}

// --- numeric comparison helpers ---------------------------------------------

namespace {

/// Random values in [0.3, 1.7] for every symbol of the expressions, plus z'.
struct SamplePoint {
    Bindings values;
    double zp = 0.0;
};

std::vector<SamplePoint> sample_points(const std::vector<Expression>& exprs, int count, unsigned seed)
{
    std::set<std::string> names;
    for (const auto& e : exprs)
        for (const auto& s : free_symbols(e)) names.insert(s);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.3, 1.7);
    std::vector<SamplePoint> out(count);
    for (auto& p : out) {
        for (const auto& n : names) p.values[n] = dist(rng);
        p.zp = dist(rng);
    }
    return out;
}

double eval_at(const Expression& e, const SamplePoint& p)
{
    return evaluate(e, p.values, [&](const Expression& atom) -> std::optional<double> {
        if (atom.name() == sym::z && atom.derivative_order() == 1) return p.zp;
        return std::nullopt;
    });
}

/// e == k * f * d for a constant k, with f = 1 or one of `factors`.
bool proportional(const Expression& e, const Expression& d, const std::vector<std::string>& factors)
{
    const auto points = sample_points({e, d}, 5, 20240607u);
    std::vector<double> ratios;
    std::vector<SamplePoint> used;
    for (const auto& p : points) {
        double ev, dv;
        try {
            ev = eval_at(e, p);
            dv = eval_at(d, p);
        } catch (const EvaluationError&) {
            continue;
        }
        if (dv == 0.0) continue;
        ratios.push_back(ev / dv);
        used.push_back(p);
    }
    if (ratios.size() < 3) return false;
    std::vector<std::string> candidates{""};
    candidates.insert(candidates.end(), factors.begin(), factors.end());
    for (const auto& f : candidates) {
        std::vector<double> k;
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            const double fv = f.empty() ? 1.0 : (used[i].values.count(f) ? used[i].values.at(f) : 1.0);
            k.push_back(ratios[i] / fv);
        }
        if (k.front() == 0.0) continue;
        bool same = true;
        for (double v : k) same = same && std::abs(v - k.front()) <= 1e-9 * std::abs(k.front());
        if (same) return true;
    }
    return false;
}

bool numerically_zero(const Expression& diff, const Expression& lhs, const Expression& rhs)
{
    const auto points = sample_points({diff, lhs, rhs}, 3, 7u);
    for (const auto& p : points) {
        try {
            const double scale = 1.0 + std::max(std::abs(eval_at(lhs, p)), std::abs(eval_at(rhs, p)));
            if (std::abs(eval_at(diff, p)) > 1e-9 * scale) return false;
        } catch (const EvaluationError&) {
            return false;
        } catch (const std::domain_error&) {
            return false;
        }
    }
    return true;
}

std::string label(const CatalogEquation& eq, const std::string& kind, const std::string& fallback)
{
    auto it = eq.labels.find(kind);
    return it == eq.labels.end() ? fallback : it->second;
}

bool depends_on_xt(const std::map<std::string, Expression>& assignments)
{
    for (const auto& [name, value] : assignments)
        if (contains_symbol(value, sym::x) || contains_symbol(value, sym::t)) return true;
    return false;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

}  // namespace

bool branch_matches(const CatalogRow& row, const SolutionBranch& branch)
{
    for (const auto& f : row.free)
        if (branch.assignments.count(f)) return false;
    for (const auto& [name, rhs] : row.assignments) {
        auto it = branch.assignments.find(name);
        const Expression lhs = it == branch.assignments.end() ? Expression::symbol(name) : it->second;
        Expression r;
        try {
            r = apply_branch(rhs, branch);
        } catch (const DivisionByZero&) {
            return false;  // the branch zeroes a published divisor
        }
        const Expression diff = lhs - r;
        if (is_zero(diff)) continue;
        if (!numerically_zero(diff, lhs, r)) return false;
    }
    return true;
}

std::vector<Discrepancy> system_discrepancies(const CatalogEquation& equation, const ModelSpec& model)
{
    std::vector<Discrepancy> out;
    ModelSpec m = model;
    m.lhs = m.bound_lhs();
    const ReducedODE ode = apply_wave_transform(
        m, TravelingWaveFrame{Expression::symbol(sym::c), Expression::symbol(sym::mu), equation.sigma});

    try {
        const int balance = compute_balance(ode);
        if (balance != equation.displayed_N)
            out.push_back({label(equation, "balance", "balance"), equation.key,
                           "balancing gives N = " + std::to_string(balance) + "; the published system uses N = " +
                               std::to_string(equation.displayed_N),
                           {}});
    } catch (const BalanceError& e) {
        out.push_back({label(equation, "balance", "balance"), equation.key,
                       std::string("balancing gives no admissible N: ") + e.what(), {}});
    }

    const AlgebraicSystem sys = assemble_system(ode, build_ansatz(equation.displayed_N), CollectMode::Paper);
    std::map<int, Expression> by_power;
    for (const auto& [key, coef] : sys.equations)
        by_power[key.z] = normalize(by_power[key.z] + coef * monomial(MonomialKey{0, key.zp, 0}));
    std::map<int, const DisplayedEquation*> shown;
    for (const auto& d : equation.displayed_system) shown[d.power] = &d;

    Discrepancy absent{label(equation, "absent", "missing-coefficients"), equation.key,
                       "derived coefficient equations absent from the published system", {}};
    Discrepancy differs{label(equation, "differs", "coefficient-mismatch"), equation.key,
                        "derived coefficient equations that differ from the published ones", {}};
    for (auto it = by_power.rbegin(); it != by_power.rend(); ++it) {
        const auto& [power, expr] = *it;
        if (expr.is_zero()) continue;
        const std::string z = "z^" + std::to_string(power);
        auto s = shown.find(power);
        if (s == shown.end()) {
            absent.details.push_back(z + ": " + render(expr));
        } else if (!proportional(expr, s->second->expr, sys.unknowns)) {
            differs.details.push_back(z + ": derived " + render(expr) + "; published " + render(s->second->expr));
        }
    }
    for (const auto& d : equation.displayed_system)
        if (!by_power.count(d.power))
            differs.details.push_back("z^" + std::to_string(d.power) + ": published " + render(d.expr) +
                                      " has no derived counterpart");
    if (!absent.details.empty()) out.push_back(absent);
    if (!differs.details.empty()) out.push_back(differs);
    return out;
}

FidelityReport fidelity_report(const std::vector<DerivedRun>& runs, const Catalog& catalog,
                               const FidelityOptions& options)
{
    FidelityReport report;
    std::map<std::string, ModelSpec> models;
    const auto model_for = [&](const CatalogEquation& eq) -> const ModelSpec& {
        auto it = models.find(eq.key);
        if (it != models.end()) return it->second;
        for (const auto& run : runs)
            if (run.equation == eq.key) return models.emplace(eq.key, run.model).first->second;
        return models.emplace(eq.key, load_equation_file(eq.path)).first->second;
    };

    for (const auto& eq : catalog.equations) {
        for (auto& d : system_discrepancies(eq, model_for(eq))) report.discrepancies.push_back(std::move(d));
        EquationCount count;
        count.equation = eq.key;
        count.claimed = eq.claimed_rows;
        for (const auto& row : catalog.rows) count.catalog_rows += row.equation == eq.key;
        for (const auto& kind : {ClosureKind::ConstantDerivative, ClosureKind::ExactKummer, ClosureKind::TrigDerivative})
            count.derived[to_string(kind)] = -1;
        for (const auto& run : runs) {
            if (run.equation != eq.key || run.mode != CollectMode::Paper) continue;
            count.derived[to_string(run.closure)] = static_cast<int>(run.result.branches.size());
            count.complete = count.complete && !run.result.incomplete;
        }
        report.counts.push_back(std::move(count));
    }

    for (const auto& row : catalog.rows) {
        FidelityEntry entry;
        entry.row = row;
        const CatalogEquation& eq = catalog.equation(row.equation);

        const DerivedRun* run = nullptr;
        for (const auto& r : runs)
            if (r.equation == row.equation && r.closure == row.closure && r.mode == CollectMode::Paper) run = &r;
        const SolutionBranch* matched = nullptr;
        if (!run) {
            entry.notes.push_back("no paper-mode derivation for this closure");
        } else {
            std::size_t best_extra = 0;
            for (std::size_t i = 0; i < run->result.branches.size(); ++i) {
                const SolutionBranch& b = run->result.branches[i];
                if (!branch_matches(row, b)) continue;
                std::size_t extra = 0;
                for (const auto& [name, value] : b.assignments) extra += !row.assignments.count(name);
                if (matched && extra >= best_extra) continue;
                matched = &b;
                best_extra = extra;
                entry.matched = run->branch_id(i);
            }
            if (matched) {
                for (const auto& [name, value] : matched->assignments)
                    if (!row.assignments.count(name)) entry.extra_constraints.push_back(name + " = " + render(value));
            } else if (run->result.incomplete) {
                entry.notes.push_back("no derived branch matches; the derivation is incomplete");
            } else {
                entry.notes.push_back("no derived branch matches");
            }
        }

        if (row.out_of_domain) {
            entry.classification = Classification::OutOfDomain;
            entry.notes.push_back("out of domain: " + *row.out_of_domain);
            report.entries.push_back(std::move(entry));
            continue;
        }

        const ModelSpec& model = model_for(eq);
        WaveSetup setup{model,
                        TravelingWaveFrame{Expression::symbol(sym::c), Expression::symbol(sym::mu), eq.sigma},
                        closure_formula(row.closure), eq.displayed_N};
        const WaveEvaluator wave(setup, row.assignments, row.bindings);
        if (const auto missing = wave.unbound(); !missing.empty()) {
            entry.classification = Classification::OutOfDomain;
            entry.notes.push_back("unbound symbols: " + join(missing, ", "));
            report.entries.push_back(std::move(entry));
            continue;
        }
        if (auto it = row.assignments.find(sym::lambda); it != row.assignments.end() &&
                                                         contains_symbol(it->second, sym::zeta))
            entry.notes.push_back("lambda depends on zeta; frozen at each node for the Hermite residual");

        ResidualOptions hermite_opts = options.residual;
        if (const auto locus = conditional_locus(setup.closure); !locus.empty())
            hermite_opts.locus = "particular part exact on " + join(locus, ", ");
        const auto attempt = [&](const char* what, auto&& fn) -> const ResidualReport* {
            try {
                entry.reports.push_back(fn());
                return &entry.reports.back();
            } catch (const VerificationError& e) {
                entry.notes.push_back(e.what());
            } catch (const EvaluationError& e) {
                entry.notes.push_back(std::string(what) + ": " + e.what());
            } catch (const std::domain_error& e) {
                entry.notes.push_back(std::string(what) + ": " + e.what());
            }
            return nullptr;
        };
        attempt("hermite", [&] { return hermite_residual(wave, options.zeta_grid, hermite_opts); });
        if (depends_on_xt(row.assignments))
            entry.notes.push_back("reduced ODE skipped: assignments depend on x and t");
        else
            attempt("reduced", [&] { return reduced_residual(wave, options.zeta_grid, options.residual); });
        const std::size_t pde_index = entry.reports.size();
        const bool have_pde =
            attempt("pde", [&] { return pde_residual(wave, options.grid, options.residual); }) != nullptr;
        entry.classification =
            have_pde ? entry.reports[pde_index].classification : Classification::OutOfDomain;

        if (matched) {
            const WaveEvaluator derived(setup, matched->assignments, row.bindings);
            if (const auto missing = derived.unbound(); !missing.empty()) {
                entry.notes.push_back("matched branch not evaluated; unbound: " + join(missing, ", "));
            } else {
                const ResidualReport* r =
                    attempt("pde (matched branch)", [&] { return pde_residual(derived, options.grid, options.residual); });
                if (r) entry.reports.back().target = "pde-matched";
            }
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace hermite
