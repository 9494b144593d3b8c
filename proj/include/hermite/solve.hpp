#pragma once

#include "hermite/ansatz.hpp"
#include "hermite/expr.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hermite {

/// One consistent assignment of the unknowns of an algebraic system.
struct SolutionBranch {
    /// Fully back-substituted values; they mention only free unknowns and parameters.
    std::map<std::string, Expression> assignments;
    std::vector<std::string> free;
    /// Factor choices and eliminations that led here, in order.
    std::vector<std::string> provenance;
    /// Expressions assumed nonzero along the way (divisors, discarded factors).
    std::vector<Expression> assumptions;
    CollectMode mode = CollectMode::Strict;
};

struct SolveOptions {
    std::size_t max_branches = 512;
    int max_degree = 8;
    /// Expressions that must not vanish (c, mu, ...); violating branches are pruned.
    std::vector<Expression> nonzero;
};

struct SolveResult {
    std::vector<SolutionBranch> branches;
    /// Set when the branch budget ran out or some subsystem was beyond the
    /// elimination strategies; `unsolved` then lists the leftover equations.
    bool incomplete = false;
    std::vector<std::string> unsolved;
    std::vector<std::string> pruned;
};

/// Depth-first factor branching and elimination. Every returned branch is
/// checked by back-substitution into the original equations.
SolveResult branch_solve(const AlgebraicSystem& system, const SolveOptions& options = {});

/// Substitutes the branch into `e` repeatedly until no assigned symbol remains.
Expression apply_branch(const Expression& e, const SolutionBranch& branch);

struct NewtonOptions {
    double tolerance = 1e-10;
    int max_iterations = 100;
    int starts = 64;
    std::uint64_t seed = 0;
    double start_radius = 3.0;
};

struct NewtonResult {
    bool converged = false;
    Bindings point;
    double residual = 0.0;
    int iterations = 0;
    std::string message;
};

/// Damped Newton iteration on the system with every non-unknown symbol bound.
/// Without a seed, up to `starts` points drawn from a generator seeded with
/// options.seed are tried in order and the first converged one is returned.
NewtonResult newton_refine(const AlgebraicSystem& system, const Bindings& bindings,
                           const std::optional<Bindings>& seed, const NewtonOptions& options = {});

}  // namespace hermite
