#pragma once

#include "hermite/expr.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hermite {

/// Syntax or declaration error with a 1-based source position.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct ParseOptions {
    /// Names parsed as function atoms (u, u_xx, z', ...).
    std::set<std::string> functions{sym::u, sym::z};
    /// When set, every other identifier must be in this set.
    std::optional<std::set<std::string>> allowed_symbols;
    int line = 1;
};

/// Highest derivative order accepted by the grammar.
inline constexpr int kMaxDerivativeOrder = 6;

/// Parses one expression of the DSL: `+ - * / ^`, parentheses, decimal or
/// integer literals (kept exact), sin/cos/exp/sqrt/kummerM/kummerU calls,
/// function atoms with subscripts (u_xxt) or primes (z'').
Expression parse_expression(const std::string& text, const ParseOptions& options = {});

/// A parsed evolution equation P(u, u_x, u_t, ...) = 0.
struct ModelSpec {
    std::string name;
    Expression lhs;  // the equation is lhs = 0
    std::string unknown = sym::u;
    std::vector<std::string> variables{sym::x, sym::t};
    std::vector<std::string> params;
    Bindings bindings;
    /// Nonlinearity exponent, when it is (or has been bound to) an integer.
    std::optional<int> n;
    /// Name of the symbolic exponent (usually "n") if u^n appears unbound.
    std::optional<std::string> exponent_symbol;
    /// Model parameters the algebraic solver may determine.
    std::vector<std::string> solve_for;
    /// Explicit ansatz degree, bypassing the balancing principle.
    std::optional<int> balance_override;
    /// Symbols declared nonzero for branch pruning.
    std::vector<std::string> nonzero;

    /// lhs with the symbolic exponent replaced by n (when bound).
    Expression bound_lhs() const;
};

/// Parses "A = B" (or "A") into a ModelSpec with lhs = A - B.
ModelSpec parse_equation(const std::string& text, const std::vector<std::string>& params, int line = 1);

/// Parses an equation file: `key: value` header lines (params, n, unknowns,
/// N, nonzero, bind, name), `#` comments and one equation line.
ModelSpec parse_equation_file_text(const std::string& text);
ModelSpec load_equation_file(const std::string& path);

/// Canonical text form; parse_expression(render(e)) normalizes to normalize(e).
std::string render(const Expression& e);

}  // namespace hermite
