#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hermite {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

// Canonical names of the distinguished symbols.
namespace sym {
inline constexpr const char* x = "x";
inline constexpr const char* t = "t";
inline constexpr const char* zeta = "zeta";
inline constexpr const char* lambda = "lambda";
inline constexpr const char* mu = "mu";
inline constexpr const char* c = "c";
inline constexpr const char* u = "u";
inline constexpr const char* z = "z";
inline constexpr const char* pi = "pi";
}  // namespace sym

// Node kinds, listed in canonical order. Derivative atoms (function atoms
// such as u, z, u_xx, z') sit between symbols and powers.
enum class Kind { Constant, Symbol, FnAtom, Power, Product, Sum, Apply };

class Node;

/// Immutable handle to a symbolic expression tree. Copies share structure.
class Expression {
public:
    Expression();  // the constant 0
    Expression(int v);  // NOLINT(google-explicit-constructor)
    Expression(Rational v);  // NOLINT(google-explicit-constructor)

    static Expression symbol(std::string name);
    /// Function atom `name` differentiated `orders[i].second` times with respect to `orders[i].first`.
    static Expression fn(std::string name, std::vector<std::pair<std::string, int>> orders = {});
    /// Shorthand for the k-th zeta-derivative of a function of zeta.
    static Expression deriv(std::string name, int order);
    static Expression power(Expression base, int exponent);
    static Expression product(std::vector<Expression> factors);
    static Expression sum(std::vector<Expression> terms);
    static Expression apply(std::string fname, std::vector<Expression> args);

    Kind kind() const;
    const Rational& value() const;
    const std::string& name() const;
    const std::vector<std::pair<std::string, int>>& orders() const;
    int exponent() const;
    const std::vector<Expression>& children() const;
    std::size_t hash() const;

    bool is_constant() const { return kind() == Kind::Constant; }
    bool is_zero() const;
    bool is_one() const;
    bool is_symbol(const std::string& n) const;
    /// Total derivative order of a function atom.
    int derivative_order() const;

    /// True for trees produced by normalize().
    bool canonical() const;

    friend bool operator==(const Expression& a, const Expression& b);
    friend int compare(const Expression& a, const Expression& b);
    friend bool operator!=(const Expression& a, const Expression& b) { return !(a == b); }

private:
    explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
    friend class Node;
};

/// Total order on expressions: constants < symbols < function atoms < powers
/// < products < sums < function applications, then by content.
int compare(const Expression& a, const Expression& b);

struct ExprLess {
    bool operator()(const Expression& a, const Expression& b) const { return compare(a, b) < 0; }
};

// Raw constructors; results are not normalized.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression pow(const Expression& base, int exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression sqrt(const Expression& a);
Expression kummer_m(const Expression& a, const Expression& b, const Expression& x);
Expression kummer_u(const Expression& a, const Expression& b, const Expression& x);
/// Power with a symbolic exponent (u^n before n is bound).
Expression general_pow(const Expression& base, const Expression& exponent);

/// Raised when normalization meets 0^k with k < 0.
class DivisionByZero : public std::domain_error {
public:
    DivisionByZero() : std::domain_error("division by zero") {}
};

/// Canonical expanded form. Sums and products are flat, like terms and
/// powers are merged, positive integer powers of sums are expanded and
/// constants are folded.
Expression normalize(const Expression& e);

/// d/d`var`. Function atoms depend on every independent variable; all other
/// symbols are constants. The result is normalized.
Expression differentiate(const Expression& e, const std::string& var);

/// Replace every occurrence of `target` (a symbol or function atom) and normalize.
Expression substitute(const Expression& e, const Expression& target, const Expression& replacement);
/// Simultaneous replacement of several symbols by name.
Expression substitute(const Expression& e, const std::map<std::string, Expression>& replacements);

bool contains(const Expression& e, const Expression& target);
bool contains_symbol(const Expression& e, const std::string& name);
/// All symbol names occurring in `e` (function atoms excluded).
std::vector<std::string> free_symbols(const Expression& e);
/// Highest derivative order of function atom `fname`, -1 when absent.
int max_derivative_order(const Expression& e, const std::string& fname);

/// Multiply out denominators: returns normalize(e * L) where L is the least
/// common multiple of the negative-power factors across terms.
Expression numerator(const Expression& e);
/// Zero test robust to the denominators produced by elimination.
bool is_zero(const Expression& e);
bool equivalent(const Expression& a, const Expression& b);

/// Split a normalized term into its rational coefficient and remaining factors.
std::pair<Rational, std::vector<Expression>> split_term(const Expression& term);
/// Summands of a normalized expression (a single term yields itself).
std::vector<Expression> terms_of(const Expression& e);
/// (base, exponent) pairs of a normalized monomial factor list.
std::vector<std::pair<Expression, int>> factor_powers(const std::vector<Expression>& factors);

// Numeric evaluation.
using Bindings = std::map<std::string, double>;
/// Evaluates function atoms; returns nullopt when the atom is unknown.
using AtomEvaluator = std::function<std::optional<double>(const Expression& atom)>;

class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double evaluate(const Expression& e, const Bindings& bindings, const AtomEvaluator& atoms = {});

// Monomial collection in z, z' and zeta.
enum class CollectMode { Strict, Paper };

struct MonomialKey {
    int z = 0;
    int zp = 0;
    int zeta = 0;
    auto operator<=>(const MonomialKey&) const = default;
};

/// z^i z'^j zeta^k as a normalized expression.
Expression monomial(const MonomialKey& key);

/// Coefficients of z^i z'^j (and zeta^k in strict mode). Throws
/// std::invalid_argument when e holds z'' or higher.
std::map<MonomialKey, Expression> collect(const Expression& e, CollectMode mode);

std::string to_string(CollectMode mode);
CollectMode collect_mode_from_string(const std::string& s);

}  // namespace hermite

template <>
struct std::hash<hermite::Expression> {
    std::size_t operator()(const hermite::Expression& e) const noexcept { return e.hash(); }
};
