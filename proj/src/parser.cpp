#include "hermite/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace hermite {

ParseError::ParseError(const std::string& message, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message), line_(line), column_(column)
{
}

namespace {

enum class Tok { Number, Ident, Op, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int column = 0;  // 1-based
};

std::vector<Token> tokenize(const std::string& text, int line)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char ch = text[i];
        const int col = static_cast<int>(i) + 1;
        if (std::isspace(static_cast<unsigned char>(ch))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i;
            while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
                    j = k;
                }
            }
            out.push_back({Tok::Number, text.substr(i, j - i), col});
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            out.push_back({Tok::Ident, text.substr(i, j - i), col});
            i = j;
            continue;
        }
        if (std::string("+-*/^(),'=").find(ch) != std::string::npos) {
            out.push_back({Tok::Op, std::string(1, ch), col});
            ++i;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + ch + "'", line, col);
    }
    out.push_back({Tok::End, "", static_cast<int>(text.size())});
    return out;
}

Rational parse_decimal(const std::string& s)
{
    std::string mantissa = s;
    int exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
        mantissa = s.substr(0, e);
        exp10 = std::stoi(s.substr(e + 1));
    }
    Integer num = 0;
    int frac_digits = 0;
    bool after_dot = false;
    for (char ch : mantissa) {
        if (ch == '.') {
            after_dot = true;
            continue;
        }
        num = num * 10 + (ch - '0');
        if (after_dot) ++frac_digits;
    }
    exp10 -= frac_digits;
    Integer scale = 1;
    for (int k = 0; k < std::abs(exp10); ++k) scale *= 10;
    return exp10 >= 0 ? Rational(num * scale) : Rational(num, scale);
}

const std::set<std::string>& builtin_functions()
{
    static const std::set<std::string> f{"sin", "cos", "exp", "sqrt", "kummerM", "kummerU"};
    return f;
}

std::size_t builtin_arity(const std::string& name) { return (name == "kummerM" || name == "kummerU") ? 3 : 1; }

class Parser {
public:
    Parser(const std::string& text, const ParseOptions& options)
        : tokens_(tokenize(text, options.line)), options_(options)
    {
    }

    Expression parse_all()
    {
        Expression e = parse_sum();
        if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
        return e;
    }

    Expression parse_sum()
    {
        std::vector<Expression> terms{parse_term()};
        while (is_op("+") || is_op("-")) {
            const bool minus = next().text == "-";
            Expression t = parse_term();
            terms.push_back(minus ? -t : t);
        }
        return Expression::sum(std::move(terms));
    }

    bool at_equals() const { return is_op("="); }
    void consume_equals() { next(); }
    bool at_end() const { return peek().kind == Tok::End; }

private:
    Expression parse_term()
    {
        std::vector<Expression> factors{parse_unary()};
        while (is_op("*") || is_op("/")) {
            const bool divide = next().text == "/";
            Expression f = parse_unary();
            factors.push_back(divide ? pow(f, -1) : f);
        }
        return Expression::product(std::move(factors));
    }

    Expression parse_unary()
    {
        if (is_op("-")) {
            next();
            return -parse_unary();
        }
        if (is_op("+")) {
            next();
            return parse_unary();
        }
        return parse_power();
    }

    Expression parse_power()
    {
        Expression base = parse_postfix();
        if (!is_op("^")) return base;
        next();
        Expression exponent = parse_unary();
        Expression ne = normalize(exponent);
        if (ne.is_constant() && boost::multiprecision::denominator(ne.value()) == 1) {
            const Integer k = boost::multiprecision::numerator(ne.value());
            if (boost::multiprecision::abs(k) > 1000) fail("exponent too large");
            return pow(base, static_cast<int>(k));
        }
        return general_pow(base, exponent);
    }

    Expression parse_postfix()
    {
        const Token start = peek();
        Expression e = parse_primary();
        while (is_op("'")) {
            next();
            if (e.kind() != Kind::FnAtom) fail_at("prime applied to a non-function", start);
            auto orders = e.orders();
            orders.emplace_back(sym::zeta, 1);
            e = Expression::fn(e.name(), orders);
            check_order(e, start);
        }
        return e;
    }

    Expression parse_primary()
    {
        const Token tok = peek();
        if (tok.kind == Tok::Number) {
            next();
            return Expression(parse_decimal(tok.text));
        }
        if (tok.kind == Tok::Op && tok.text == "(") {
            next();
            Expression inner = parse_sum();
            expect(")");
            return inner;
        }
        if (tok.kind == Tok::Ident) {
            next();
            if (builtin_functions().count(tok.text) != 0 && is_op("(")) return parse_call(tok);
            return identifier(tok);
        }
        if (tok.kind == Tok::End) fail("unexpected end of input");
        fail_at("unexpected '" + tok.text + "'", tok);
    }

    Expression parse_call(const Token& fname)
    {
        expect("(");
        std::vector<Expression> args{parse_sum()};
        while (is_op(",")) {
            next();
            args.push_back(parse_sum());
        }
        expect(")");
        if (args.size() != builtin_arity(fname.text))
            fail_at(fname.text + " expects " + std::to_string(builtin_arity(fname.text)) + " argument(s)", fname);
        return Expression::apply(fname.text, std::move(args));
    }

    Expression identifier(const Token& tok)
    {
        const std::string& id = tok.text;
        if (options_.functions.count(id) != 0) return Expression::fn(id);
        if (auto us = id.find('_'); us != std::string::npos && us > 0) {
            const std::string head = id.substr(0, us);
            const std::string tail = id.substr(us + 1);
            if (options_.functions.count(head) != 0 && !tail.empty()) {
                std::vector<std::pair<std::string, int>> orders;
                for (char v : tail) {
                    if (v != 'x' && v != 't') fail_at("unknown derivative variable '" + std::string(1, v) + "' in " + id, tok);
                    orders.emplace_back(std::string(1, v), 1);
                }
                Expression atom = Expression::fn(head, orders);
                check_order(atom, tok);
                return atom;
            }
        }
        if (options_.allowed_symbols && options_.allowed_symbols->count(id) == 0)
            fail_at("undeclared symbol '" + id + "'", tok);
        return Expression::symbol(id);
    }

    void check_order(const Expression& atom, const Token& tok) const
    {
        if (atom.derivative_order() > kMaxDerivativeOrder)
            fail_at("derivative order above " + std::to_string(kMaxDerivativeOrder) + " is not supported", tok);
    }

    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_++]; }
    bool is_op(const char* op) const { return peek().kind == Tok::Op && peek().text == op; }

    void expect(const char* op)
    {
        if (!is_op(op)) {
            if (peek().kind == Tok::End) fail(std::string("expected '") + op + "' before end of input");
            fail(std::string("expected '") + op + "'");
        }
        next();
    }

    [[noreturn]] void fail(const std::string& message) const { fail_at(message, peek()); }
    [[noreturn]] void fail_at(const std::string& message, const Token& tok) const
    {
        throw ParseError(message, options_.line, std::max(tok.column, 1));
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    ParseOptions options_;
};

void collect_u_powers(const Expression& e, const Expression& u, std::optional<int>& n, std::optional<std::string>& sym_exp,
                      int line)
{
    if (e.kind() == Kind::Power && e.children()[0] == u && e.exponent() > 1) n = std::max(n.value_or(0), e.exponent());
    if (e.kind() == Kind::Power && contains(e.children()[0], u) && e.exponent() < 0)
        throw ParseError("negative power of the unknown function is not supported", line, 1);
    if (e.kind() == Kind::Apply && e.name() == "pow" && contains(e.children()[0], u)) {
        const Expression ex = normalize(e.children()[1]);
        if (ex.kind() == Kind::Symbol) {
            sym_exp = ex.name();
        } else {
            throw ParseError("exponent of " + u.name() + " must be an integer or a declared symbol", line, 1);
        }
    }
    for (const auto& c : e.children()) collect_u_powers(c, u, n, sym_exp, line);
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

Expression parse_expression(const std::string& text, const ParseOptions& options)
{
    Parser p(text, options);
    return p.parse_all();
}

Expression ModelSpec::bound_lhs() const
{
    if (!exponent_symbol || !n) return lhs;
    return substitute(lhs, {{*exponent_symbol, Expression(*n)}});
}

ModelSpec parse_equation(const std::string& text, const std::vector<std::string>& params, int line)
{
    ModelSpec spec;
    spec.params = params;
    ParseOptions opts;
    opts.functions = {sym::u};
    opts.line = line;
    std::set<std::string> allowed(params.begin(), params.end());
    allowed.insert({sym::x, sym::t, sym::pi});
    opts.allowed_symbols = allowed;

    Parser p(text, opts);
    Expression lhs = p.parse_sum();
    if (p.at_equals()) {
        p.consume_equals();
        Expression rhs = p.parse_sum();
        lhs = lhs - rhs;
    }
    if (!p.at_end()) {
        // Re-run through parse_all on the remainder for a positioned diagnostic.
        Parser(text, opts).parse_all();
        throw ParseError("malformed equation", line, 1);
    }
    spec.lhs = normalize(lhs);
    collect_u_powers(spec.lhs, Expression::fn(sym::u), spec.n, spec.exponent_symbol, line);
    if (spec.exponent_symbol) spec.n.reset();
    return spec;
}

ModelSpec parse_equation_file_text(const std::string& text)
{
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::vector<std::string> params;
    std::optional<int> n_header;
    std::optional<std::pair<std::string, int>> equation;
    ModelSpec meta;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
            const std::string key = trim(line.substr(0, colon));
            const std::string value = trim(line.substr(colon + 1));
            try {
                if (key == "params") {
                    params = split_list(value);
                } else if (key == "n") {
                    n_header = std::stoi(value);
                } else if (key == "N") {
                    meta.balance_override = std::stoi(value);
                } else if (key == "unknowns") {
                    meta.solve_for = split_list(value);
                } else if (key == "nonzero") {
                    meta.nonzero = split_list(value);
                } else if (key == "name") {
                    meta.name = value;
                } else if (key == "bind") {
                    for (const auto& item : split_list(value)) {
                        const auto eq = item.find('=');
                        if (eq == std::string::npos) throw ParseError("bind expects NAME=VALUE", line_no, 1);
                        meta.bindings[trim(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
                    }
                } else {
                    throw ParseError("unknown header key '" + key + "'", line_no, 1);
                }
            } catch (const std::invalid_argument&) {
                throw ParseError("malformed value for '" + key + "'", line_no, static_cast<int>(colon) + 2);
            }
            continue;
        }
        if (equation) throw ParseError("more than one equation line", line_no, 1);
        equation = std::make_pair(line, line_no);
    }
    if (!equation) throw ParseError("no equation found", line_no, 1);

    std::vector<std::string> declared = params;
    ModelSpec spec = parse_equation(equation->first, declared, equation->second);
    spec.name = meta.name;
    spec.bindings = meta.bindings;
    spec.solve_for = meta.solve_for;
    spec.balance_override = meta.balance_override;
    spec.nonzero = meta.nonzero;
    if (n_header) {
        if (*n_header < 1) throw ParseError("n must be a positive integer", line_no, 1);
        if (spec.n && !spec.exponent_symbol && *spec.n != *n_header)
            throw ParseError("n header disagrees with the literal exponent", line_no, 1);
        spec.n = n_header;
    }
    for (const auto& s : spec.solve_for)
        if (std::find(params.begin(), params.end(), s) == params.end())
            throw ParseError("unknowns: '" + s + "' is not a declared parameter", line_no, 1);
    return spec;
}

ModelSpec load_equation_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open equation file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_equation_file_text(ss.str());
}

// --- rendering ------------------------------------------------------------------

namespace {

std::string render_rational(const Rational& v)
{
    return boost::multiprecision::denominator(v) == 1 ? boost::multiprecision::numerator(v).str()
                                                      : boost::multiprecision::numerator(v).str() + "/" +
                                                            boost::multiprecision::denominator(v).str();
}

bool negative_leading(const Expression& e)
{
    if (e.is_constant()) return e.value() < 0;
    if (e.kind() == Kind::Product && !e.children().empty()) return negative_leading(e.children().front());
    return false;
}

Expression negate_leading(const Expression& e)
{
    if (e.is_constant()) return Expression(Rational(-e.value()));
    auto ch = e.children();
    Expression first = negate_leading(ch.front());
    if (first.is_one() && ch.size() > 1) ch.erase(ch.begin());
    else ch.front() = first;
    return Expression::product(std::move(ch));
}

std::string render_atom_like(const Expression& e);

std::string render_factor(const Expression& e)
{
    if (e.kind() == Kind::Sum) return "(" + render(e) + ")";
    return render(e);
}

std::string render_power_base(const Expression& e)
{
    switch (e.kind()) {
    case Kind::Symbol:
    case Kind::FnAtom:
    case Kind::Apply:
        if (e.kind() == Kind::Apply && e.name() == "pow") return "(" + render(e) + ")";
        return render(e);
    case Kind::Constant:
        if (e.value() >= 0 && boost::multiprecision::denominator(e.value()) == 1) return render(e);
        return "(" + render(e) + ")";
    default:
        return "(" + render(e) + ")";
    }
}

std::string render_atom_like(const Expression& e)
{
    std::string s = e.name();
    const auto& ord = e.orders();
    if (ord.empty()) return s;
    if (ord.size() == 1 && ord.front().first == sym::zeta) return s + std::string(static_cast<std::size_t>(ord.front().second), '\'');
    s += "_";
    for (const auto& [v, k] : ord) {
        if (v == sym::zeta) throw std::logic_error("mixed zeta and x/t derivatives cannot be rendered");
        s += std::string(static_cast<std::size_t>(k), v.front());
    }
    return s;
}

}  // namespace

std::string render(const Expression& e)
{
    switch (e.kind()) {
    case Kind::Constant:
        return render_rational(e.value());
    case Kind::Symbol:
        return e.name();
    case Kind::FnAtom:
        return render_atom_like(e);
    case Kind::Power: {
        const int k = e.exponent();
        return render_power_base(e.children()[0]) + "^" + (k < 0 ? "(" + std::to_string(k) + ")" : std::to_string(k));
    }
    case Kind::Product: {
        const auto& ch = e.children();
        if (negative_leading(e)) return "-" + render_factor(negate_leading(e));
        std::string s;
        for (std::size_t i = 0; i < ch.size(); ++i) {
            if (i > 0) s += "*";
            s += (ch[i].kind() == Kind::Product) ? render(ch[i]) : render_factor(ch[i]);
        }
        return s;
    }
    case Kind::Sum: {
        std::string s;
        const auto& ch = e.children();
        for (std::size_t i = 0; i < ch.size(); ++i) {
            const bool neg = negative_leading(ch[i]);
            if (i == 0) {
                s += render(ch[i]);
            } else if (neg) {
                s += " - " + render_factor(negate_leading(ch[i]));
            } else {
                s += " + " + render_factor(ch[i]);
            }
        }
        return s;
    }
    case Kind::Apply: {
        if (e.name() == "pow") {
            const Expression& ex = e.children()[1];
            const bool simple = ex.kind() == Kind::Symbol || (ex.is_constant() && ex.value() >= 0 &&
                                                             boost::multiprecision::denominator(ex.value()) == 1);
            return render_power_base(e.children()[0]) + "^" + (simple ? render(ex) : "(" + render(ex) + ")");
        }
        std::string s = e.name() + "(";
        for (std::size_t i = 0; i < e.children().size(); ++i) {
            if (i > 0) s += ", ";
            s += render(e.children()[i]);
        }
        return s + ")";
    }
    }
    return "?";
}

}  // namespace hermite
