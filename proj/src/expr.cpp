#include "hermite/expr.hpp"

#include "hermite/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace hermite {

class Node {
public:
    Kind kind = Kind::Constant;
    Rational value{0};
    std::string name;
    std::vector<std::pair<std::string, int>> orders;
    int exponent = 0;
    std::vector<Expression> children;
    std::size_t hash = 0;
    bool canonical = false;

    static Expression make(Node n)
    {
        n.hash = n.compute_hash();
        return Expression(std::make_shared<const Node>(std::move(n)));
    }

private:
    std::size_t compute_hash() const
    {
        auto mix = [](std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); };
        std::size_t h = static_cast<std::size_t>(kind) * 1315423911u;
        switch (kind) {
        case Kind::Constant:
            h = mix(h, std::hash<std::string>{}(value.str()));
            break;
        case Kind::Symbol:
            h = mix(h, std::hash<std::string>{}(name));
            break;
        case Kind::FnAtom:
            h = mix(h, std::hash<std::string>{}(name));
            for (const auto& [v, k] : orders) h = mix(mix(h, std::hash<std::string>{}(v)), static_cast<std::size_t>(k));
            break;
        case Kind::Power:
            h = mix(h, static_cast<std::size_t>(exponent + 1000));
            break;
        case Kind::Apply:
            h = mix(h, std::hash<std::string>{}(name));
            break;
        default:
            break;
        }
        for (const auto& c : children) h = mix(h, c.hash());
        return h;
    }
};

namespace {

Expression make_const(Rational v)
{
    Node n;
    n.kind = Kind::Constant;
    n.value = std::move(v);
    n.canonical = true;
    return Node::make(std::move(n));
}

}  // namespace

Expression::Expression() : Expression(Rational(0)) {}
Expression::Expression(int v) : Expression(Rational(v)) {}
Expression::Expression(Rational v)
{
    Node n;
    n.kind = Kind::Constant;
    n.value = std::move(v);
    n.canonical = true;
    *this = Node::make(std::move(n));
}

Expression Expression::symbol(std::string name)
{
    Node n;
    n.kind = Kind::Symbol;
    n.name = std::move(name);
    n.canonical = true;
    return Node::make(std::move(n));
}

Expression Expression::fn(std::string name, std::vector<std::pair<std::string, int>> orders)
{
    std::map<std::string, int> merged;
    for (const auto& [v, k] : orders) {
        if (k < 0) throw std::invalid_argument("negative derivative order");
        merged[v] += k;
    }
    Node n;
    n.kind = Kind::FnAtom;
    n.name = std::move(name);
    for (const auto& [v, k] : merged)
        if (k > 0) n.orders.emplace_back(v, k);
    n.canonical = true;
    return Node::make(std::move(n));
}

Expression Expression::deriv(std::string name, int order)
{
    if (order == 0) return fn(std::move(name));
    return fn(std::move(name), {{sym::zeta, order}});
}

Expression Expression::power(Expression base, int exponent)
{
    Node n;
    n.kind = Kind::Power;
    n.exponent = exponent;
    n.children.push_back(std::move(base));
    return Node::make(std::move(n));
}

Expression Expression::product(std::vector<Expression> factors)
{
    if (factors.empty()) return Expression(1);
    if (factors.size() == 1) return factors.front();
    Node n;
    n.kind = Kind::Product;
    n.children = std::move(factors);
    return Node::make(std::move(n));
}

Expression Expression::sum(std::vector<Expression> terms)
{
    if (terms.empty()) return Expression(0);
    if (terms.size() == 1) return terms.front();
    Node n;
    n.kind = Kind::Sum;
    n.children = std::move(terms);
    return Node::make(std::move(n));
}

Expression Expression::apply(std::string fname, std::vector<Expression> args)
{
    Node n;
    n.kind = Kind::Apply;
    n.name = std::move(fname);
    n.children = std::move(args);
    return Node::make(std::move(n));
}

Kind Expression::kind() const { return node_->kind; }
const Rational& Expression::value() const { return node_->value; }
const std::string& Expression::name() const { return node_->name; }
const std::vector<std::pair<std::string, int>>& Expression::orders() const { return node_->orders; }
int Expression::exponent() const { return node_->exponent; }
const std::vector<Expression>& Expression::children() const { return node_->children; }
std::size_t Expression::hash() const { return node_->hash; }
bool Expression::is_zero() const { return kind() == Kind::Constant && value() == 0; }
bool Expression::is_one() const { return kind() == Kind::Constant && value() == 1; }
bool Expression::is_symbol(const std::string& n) const { return kind() == Kind::Symbol && name() == n; }

int Expression::derivative_order() const
{
    int total = 0;
    for (const auto& [v, k] : orders()) total += k;
    return total;
}

int compare(const Expression& a, const Expression& b)
{
    if (a.node_ == b.node_) return 0;
    if (a.kind() != b.kind()) return static_cast<int>(a.kind()) < static_cast<int>(b.kind()) ? -1 : 1;
    switch (a.kind()) {
    case Kind::Constant:
        return a.value() < b.value() ? -1 : (b.value() < a.value() ? 1 : 0);
    case Kind::Symbol:
        return a.name().compare(b.name()) < 0 ? -1 : (a.name() == b.name() ? 0 : 1);
    case Kind::FnAtom: {
        if (a.name() != b.name()) return a.name() < b.name() ? -1 : 1;
        if (a.orders() != b.orders()) return a.orders() < b.orders() ? -1 : 1;
        return 0;
    }
    case Kind::Power: {
        int c = compare(a.children()[0], b.children()[0]);
        if (c != 0) return c;
        return a.exponent() < b.exponent() ? -1 : (a.exponent() == b.exponent() ? 0 : 1);
    }
    case Kind::Apply:
        if (a.name() != b.name()) return a.name() < b.name() ? -1 : 1;
        [[fallthrough]];
    case Kind::Product:
    case Kind::Sum: {
        const auto& ca = a.children();
        const auto& cb = b.children();
        for (std::size_t i = 0; i < std::min(ca.size(), cb.size()); ++i) {
            int c = compare(ca[i], cb[i]);
            if (c != 0) return c;
        }
        if (ca.size() == cb.size()) return 0;
        return ca.size() < cb.size() ? -1 : 1;
    }
    }
    return 0;
}

bool operator==(const Expression& a, const Expression& b)
{
    if (a.node_ == b.node_) return true;
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
}

// --- raw builders ---------------------------------------------------------

Expression operator+(const Expression& a, const Expression& b) { return Expression::sum({a, b}); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::sum({a, -b}); }
Expression operator-(const Expression& a)
{
    if (a.is_constant()) return Expression(Rational(-a.value()));
    return Expression::product({Expression(-1), a});
}
Expression operator*(const Expression& a, const Expression& b) { return Expression::product({a, b}); }
Expression operator/(const Expression& a, const Expression& b) { return Expression::product({a, Expression::power(b, -1)}); }
Expression pow(const Expression& base, int exponent) { return Expression::power(base, exponent); }
Expression sin(const Expression& a) { return Expression::apply("sin", {a}); }
Expression cos(const Expression& a) { return Expression::apply("cos", {a}); }
Expression exp(const Expression& a) { return Expression::apply("exp", {a}); }
Expression sqrt(const Expression& a) { return Expression::apply("sqrt", {a}); }
Expression kummer_m(const Expression& a, const Expression& b, const Expression& x) { return Expression::apply("kummerM", {a, b, x}); }
Expression kummer_u(const Expression& a, const Expression& b, const Expression& x) { return Expression::apply("kummerU", {a, b, x}); }
Expression general_pow(const Expression& base, const Expression& exponent) { return Expression::apply("pow", {base, exponent}); }

}  // namespace hermite

namespace hermite {

bool Expression::canonical() const { return node_->canonical; }

// --- normalization ----------------------------------------------------------

namespace {

Expression canon_node(Kind kind, std::vector<Expression> children, int exponent = 0, std::string name = {})
{
    Node n;
    n.kind = kind;
    n.children = std::move(children);
    n.exponent = exponent;
    n.name = std::move(name);
    n.canonical = true;
    return Node::make(std::move(n));
}

int compare_rest(const std::vector<Expression>& a, const std::vector<Expression>& b)
{
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        int c = compare(a[i], b[i]);
        if (c != 0) return c;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

struct RestLess {
    bool operator()(const std::vector<Expression>& a, const std::vector<Expression>& b) const
    {
        return compare_rest(a, b) < 0;
    }
};

Rational rational_pow(const Rational& base, int k)
{
    if (k < 0) {
        if (base == 0) throw DivisionByZero();
        return rational_pow(Rational(1) / base, -k);
    }
    Rational r{1};
    for (int i = 0; i < k; ++i) r *= base;
    return r;
}

Expression make_term(const Rational& coef, std::vector<Expression> rest)
{
    if (coef == 0) return make_const(0);
    if (rest.empty()) return make_const(coef);
    if (coef == 1 && rest.size() == 1) return rest.front();
    std::vector<Expression> children;
    children.reserve(rest.size() + 1);
    if (coef != 1) children.push_back(make_const(coef));
    for (auto& f : rest) children.push_back(std::move(f));
    return canon_node(Kind::Product, std::move(children));
}

Expression add_canon(const std::vector<Expression>& terms);
Expression mul_canon(const std::vector<Expression>& factors);
Expression pow_canon(const Expression& base, int k);

// Leading-coefficient-one form of a canonical sum: s == content * primitive.
std::pair<Rational, Expression> make_primitive(const Expression& s)
{
    const Rational lead = split_term(s.children().front()).first;
    if (lead == 1) return {lead, s};
    std::vector<Expression> scaled;
    scaled.reserve(s.children().size());
    for (const auto& t : s.children()) {
        auto [coef, rest] = split_term(t);
        scaled.push_back(make_term(coef / lead, std::move(rest)));
    }
    return {lead, canon_node(Kind::Sum, std::move(scaled))};
}

struct SumFactors {
    Rational content;
    std::vector<std::pair<Expression, int>> monomial;
    Expression core;  // primitive sum without a common monomial factor
};

// s == content * prod(monomial) * core for a canonical sum s.
SumFactors factor_sum(const Expression& s)
{
    std::map<Expression, int, ExprLess> common;
    bool first = true;
    for (const auto& term : s.children()) {
        std::map<Expression, int, ExprLess> here;
        for (const auto& [base, k] : factor_powers(split_term(term).second)) here[base] = k;
        if (first) {
            common = std::move(here);
            first = false;
            continue;
        }
        for (auto it = common.begin(); it != common.end();) {
            auto f = here.find(it->first);
            if (f == here.end() || (f->second > 0) != (it->second > 0)) {
                it = common.erase(it);
                continue;
            }
            it->second = it->second > 0 ? std::min(it->second, f->second) : std::max(it->second, f->second);
            ++it;
        }
    }
    SumFactors out{Rational(1), {}, s};
    if (!common.empty()) {
        std::vector<Expression> divided;
        for (const auto& term : s.children()) {
            std::vector<Expression> parts{term};
            for (const auto& [base, k] : common) parts.push_back(pow_canon(base, -k));
            divided.push_back(mul_canon(parts));
        }
        out.core = add_canon(divided);
        out.monomial.assign(common.begin(), common.end());
    }
    auto [content, prim] = make_primitive(out.core);
    out.content = content;
    out.core = prim;
    return out;
}

Expression add_canon(const std::vector<Expression>& terms)
{
    std::map<std::vector<Expression>, Rational, RestLess> acc;
    auto add_one = [&acc](const Expression& t) {
        auto [coef, rest] = split_term(t);
        if (coef == 0) return;
        auto [it, inserted] = acc.try_emplace(std::move(rest), coef);
        if (!inserted) it->second += coef;
    };
    for (const auto& t : terms) {
        if (t.kind() == Kind::Sum)
            for (const auto& c : t.children()) add_one(c);
        else
            add_one(t);
    }
    std::vector<Expression> out;
    for (auto& [rest, coef] : acc)
        if (coef != 0) out.push_back(make_term(coef, rest));
    if (out.empty()) return make_const(0);
    if (out.size() == 1) return out.front();
    return canon_node(Kind::Sum, std::move(out));
}

Expression mul_canon(const std::vector<Expression>& factors)
{
    Rational coef{1};
    std::map<Expression, int, ExprLess> powers;
    std::function<void(const Expression&)> absorb = [&](const Expression& f) {
        switch (f.kind()) {
        case Kind::Constant:
            coef *= f.value();
            break;
        case Kind::Product:
            for (const auto& c : f.children()) absorb(c);
            break;
        case Kind::Power:
            powers[f.children()[0]] += f.exponent();
            break;
        case Kind::Sum: {
            const SumFactors sf = factor_sum(f);
            coef *= sf.content;
            for (const auto& [base, k] : sf.monomial) powers[base] += k;
            powers[sf.core] += 1;
            break;
        }
        default:
            powers[f] += 1;
            break;
        }
    };
    for (const auto& f : factors) {
        absorb(f);
        if (coef == 0) return make_const(0);
    }
    // sqrt(a)^k with |k| >= 2 becomes a^(k/2) sqrt(a)^(k%2).
    std::vector<Expression> released;
    for (auto& [base, k] : powers) {
        if (base.kind() != Kind::Apply || base.name() != "sqrt" || (k > -2 && k < 2)) continue;
        released.push_back(pow_canon(base.children()[0], k / 2));
        k %= 2;
    }
    if (!released.empty()) {
        released.push_back(make_const(coef));
        for (const auto& [base, k] : powers)
            if (k != 0) released.push_back(pow_canon(base, k));
        return mul_canon(released);
    }
    std::vector<Expression> rest;
    std::vector<std::pair<Expression, int>> expand;
    for (const auto& [base, k] : powers) {
        if (k == 0) continue;
        if (base.kind() == Kind::Sum && k > 0) {
            expand.emplace_back(base, k);
        } else if (k == 1) {
            rest.push_back(base);
        } else {
            if (base.is_zero() && k < 0) throw DivisionByZero();
            rest.push_back(canon_node(Kind::Power, {base}, k));
        }
    }
    if (expand.empty()) return make_term(coef, std::move(rest));

    // A sum whose terms divide by another expanded sum goes first, so the
    // divisor later meets those terms whole and cancels.
    auto divides_terms_of = [](const Expression& p, const Expression& s) {
        for (const auto& term : s.children())
            for (const auto& [b, k] : factor_powers(split_term(term).second))
                if (k < 0 && b == p) return true;
        return false;
    };
    for (std::size_t i = 0; i + 1 < expand.size(); ++i) {
        // Pick the first remaining sum that divides no other remaining sum's terms.
        for (std::size_t j = i; j < expand.size(); ++j) {
            bool divides = false;
            for (std::size_t m = i; m < expand.size() && !divides; ++m)
                divides = m != j && divides_terms_of(expand[j].first, expand[m].first);
            if (!divides) {
                std::rotate(expand.begin() + static_cast<std::ptrdiff_t>(i), expand.begin() + static_cast<std::ptrdiff_t>(j),
                            expand.begin() + static_cast<std::ptrdiff_t>(j) + 1);
                break;
            }
        }
    }

    std::vector<Expression> acc{make_term(coef, std::move(rest))};
    for (const auto& [s, k] : expand) {
        for (int rep = 0; rep < k; ++rep) {
            std::vector<Expression> next;
            next.reserve(acc.size() * s.children().size());
            for (const auto& a : acc) {
                // A term holding s^-m absorbs s instead of distributing over it.
                const auto fp = factor_powers(split_term(a).second);
                const bool cancels = std::any_of(fp.begin(), fp.end(),
                                                 [&](const auto& bk) { return bk.second < 0 && bk.first == s; });
                if (cancels) {
                    next.push_back(mul_canon({a, s}));
                    continue;
                }
                for (const auto& b : s.children()) next.push_back(mul_canon({a, b}));
            }
            acc = terms_of(add_canon(next));
        }
    }
    return add_canon(acc);
}

Expression pow_canon(const Expression& base, int k)
{
    if (k == 0) return make_const(1);
    if (k == 1) return base;
    switch (base.kind()) {
    case Kind::Constant:
        return make_const(rational_pow(base.value(), k));
    case Kind::Power:
        return pow_canon(base.children()[0], base.exponent() * k);
    case Kind::Product: {
        std::vector<Expression> parts;
        for (const auto& c : base.children()) parts.push_back(pow_canon(c, k));
        return mul_canon(parts);
    }
    case Kind::Sum: {
        if (k > 0) return mul_canon(std::vector<Expression>(static_cast<std::size_t>(k), base));
        const SumFactors sf = factor_sum(base);
        std::vector<Expression> parts{make_const(rational_pow(sf.content, k)), canon_node(Kind::Power, {sf.core}, k)};
        for (const auto& [b, e] : sf.monomial) parts.push_back(pow_canon(b, e * k));
        return mul_canon(parts);
    }
    default:
        if (base.kind() == Kind::Apply && base.name() == "sqrt" && (k >= 2 || k <= -2))
            return mul_canon({pow_canon(base.children()[0], k / 2), pow_canon(base, k % 2)});
        return canon_node(Kind::Power, {base}, k);
    }
}

std::optional<Rational> exact_sqrt(const Rational& v)
{
    if (v < 0) return std::nullopt;
    Integer num = boost::multiprecision::numerator(v);
    Integer den = boost::multiprecision::denominator(v);
    Integer rn = boost::multiprecision::sqrt(num);
    Integer rd = boost::multiprecision::sqrt(den);
    if (rn * rn != num || rd * rd != den) return std::nullopt;
    return Rational(rn, rd);
}

Expression apply_canon(const std::string& name, std::vector<Expression> args)
{
    if (args.size() == 1) {
        const Expression& a = args[0];
        if (name == "sin" && a.is_zero()) return make_const(0);
        if (name == "cos" && a.is_zero()) return make_const(1);
        if (name == "exp" && a.is_zero()) return make_const(1);
        if (name == "sqrt" && a.is_constant())
            if (auto r = exact_sqrt(a.value())) return make_const(*r);
    }
    if (name == "pow" && args.size() == 2 && args[1].is_constant()) {
        const Rational& k = args[1].value();
        if (boost::multiprecision::denominator(k) == 1 && boost::multiprecision::abs(boost::multiprecision::numerator(k)) < 10000)
            return pow_canon(args[0], static_cast<int>(boost::multiprecision::numerator(k)));
    }
    if (name == "kummerM" && args.size() == 3 && args[2].is_zero()) return make_const(1);
    return canon_node(Kind::Apply, std::move(args), 0, name);
}

}  // namespace

Expression normalize(const Expression& e)
{
    if (e.canonical()) return e;
    switch (e.kind()) {
    case Kind::Constant:
    case Kind::Symbol:
    case Kind::FnAtom:
        return e;
    case Kind::Power:
        return pow_canon(normalize(e.children()[0]), e.exponent());
    case Kind::Product: {
        std::vector<Expression> parts;
        parts.reserve(e.children().size());
        for (const auto& c : e.children()) parts.push_back(normalize(c));
        return mul_canon(parts);
    }
    case Kind::Sum: {
        std::vector<Expression> parts;
        parts.reserve(e.children().size());
        for (const auto& c : e.children()) parts.push_back(normalize(c));
        return add_canon(parts);
    }
    case Kind::Apply: {
        std::vector<Expression> args;
        args.reserve(e.children().size());
        for (const auto& c : e.children()) args.push_back(normalize(c));
        return apply_canon(e.name(), std::move(args));
    }
    }
    return e;
}

std::pair<Rational, std::vector<Expression>> split_term(const Expression& term)
{
    switch (term.kind()) {
    case Kind::Constant:
        return {term.value(), {}};
    case Kind::Product: {
        const auto& ch = term.children();
        if (!ch.empty() && ch.front().is_constant())
            return {ch.front().value(), std::vector<Expression>(ch.begin() + 1, ch.end())};
        return {Rational(1), ch};
    }
    default:
        return {Rational(1), {term}};
    }
}

std::vector<Expression> terms_of(const Expression& e)
{
    if (e.kind() == Kind::Sum) return e.children();
    if (e.is_zero()) return {};
    return {e};
}

std::vector<std::pair<Expression, int>> factor_powers(const std::vector<Expression>& factors)
{
    std::vector<std::pair<Expression, int>> out;
    out.reserve(factors.size());
    for (const auto& f : factors) {
        if (f.kind() == Kind::Power)
            out.emplace_back(f.children()[0], f.exponent());
        else
            out.emplace_back(f, 1);
    }
    return out;
}

}  // namespace hermite
