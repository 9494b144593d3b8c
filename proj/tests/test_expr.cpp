#include "support.hpp"

#include "hermite/expr.hpp"

#include <doctest.h>

#include <cmath>

using namespace hermite;
using testing::P;

namespace {

const Expression z = Expression::fn("z");

}  // namespace

TEST_CASE("normal form folds identities, like terms and products")
{
    CHECK(normalize((z + Expression(0)) * Expression(1)) == z);
    CHECK(normalize(Expression(2) * z + Expression(3) * z) == normalize(Expression(5) * z));
    const Expression g1 = Expression::symbol("g1"), g2 = Expression::symbol("g2");
    CHECK(normalize((g1 * z) * (g2 * z)) == normalize(g1 * g2 * pow(z, 2)));
    CHECK(render(P("(z + 0)*1")) == "z");
    CHECK(render(P("2*z + 3*z")) == "5*z");
}

TEST_CASE("sums and products are flat and exponents are never 1")
{
    const Expression e = P("(a + (b + (z + 1))) * (a * (b * z))");
    const auto check = [](const Expression& n, auto&& self) -> void {
        if (n.kind() == Kind::Sum)
            for (const auto& c : n.children()) CHECK(c.kind() != Kind::Sum);
        if (n.kind() == Kind::Product)
            for (const auto& c : n.children()) CHECK(c.kind() != Kind::Product);
        if (n.kind() == Kind::Power) {
            CHECK(n.exponent() != 0);
            CHECK(n.exponent() != 1);
        }
        for (const auto& c : n.children()) self(c, self);
    };
    check(e, check);
    CHECK(e.canonical());
}

TEST_CASE("differentiation rules")
{
    CHECK(equivalent(differentiate(P("g0 + g1*z + g2*z^2"), "zeta"), P("g1*z' + 2*g2*z*z'")));
    CHECK(equivalent(differentiate(P("zeta*z"), "zeta"), P("z + zeta*z'")));
    CHECK(equivalent(differentiate(P("sin(zeta)"), "zeta"), P("cos(zeta)")));
    CHECK(equivalent(differentiate(P("z'"), "zeta"), P("z''")));
}

TEST_CASE("substitution")
{
    CHECK(is_zero(substitute(P("g1*z'"), Expression::symbol("g1"), Expression(0))));
    CHECK(equivalent(substitute(P("z''"), Expression::deriv("z", 2), P("2*zeta*z' + lambda*z")),
                     P("2*zeta*z' + lambda*z")));
    CHECK(equivalent(substitute(P("alpha*u"), Expression::fn("u"), P("g0")), P("alpha*g0")));
    CHECK(equivalent(substitute(P("a*b + a"), {{"a", P("2")}, {"b", P("c")}}), P("2*c + 2")));
}

TEST_CASE("collection in both modes")
{
    const Expression e = P("2*zeta*z'*g1 + lambda*z*g1");
    const auto paper = collect(e, CollectMode::Paper);
    REQUIRE(paper.size() == 2);
    CHECK(equivalent(paper.at(MonomialKey{0, 1, 0}), P("2*zeta*g1")));
    CHECK(equivalent(paper.at(MonomialKey{1, 0, 0}), P("lambda*g1")));

    const auto strict = collect(e, CollectMode::Strict);
    REQUIRE(strict.size() == 2);
    CHECK(equivalent(strict.at(MonomialKey{0, 1, 1}), P("2*g1")));
    CHECK(equivalent(strict.at(MonomialKey{1, 0, 0}), P("lambda*g1")));

    CHECK_THROWS_AS(collect(P("z''*g1"), CollectMode::Paper), std::invalid_argument);
}

TEST_CASE("evaluation binds pi and reports unbound symbols")
{
    CHECK(evaluate(P("2*a + sin(pi/2)"), {{"a", 1.5}}) == doctest::Approx(4.0));
    CHECK_THROWS_AS(evaluate(P("a + b"), {{"a", 1.0}}), EvaluationError);
    CHECK_THROWS_AS(P("1/(a - a)"), DivisionByZero);
}

TEST_CASE("property: normalize is idempotent")
{
    testing::ExprGen gen(11);
    for (int i = 0; i < 300; ++i) {
        const Expression e = normalize(gen(gen.uniform(1, 8)));
        CHECK(normalize(e) == e);
        CHECK(e.canonical());
    }
}

TEST_CASE("property: product rule")
{
    testing::ExprGen gen(12);
    for (int i = 0; i < 200; ++i) {
        const Expression a = gen(gen.uniform(1, 4)), b = gen(gen.uniform(1, 4));
        const Expression lhs = differentiate(a * b, "zeta");
        const Expression rhs = differentiate(a, "zeta") * b + a * differentiate(b, "zeta");
        CHECK(is_zero(lhs - rhs));
    }
}

TEST_CASE("property: collection partitions an expression")
{
    testing::ExprGen gen(13);
    for (const CollectMode mode : {CollectMode::Paper, CollectMode::Strict}) {
        gen.functions = mode == CollectMode::Paper;
        for (int i = 0; i < 200; ++i) {
            const Expression e = normalize(gen(gen.uniform(1, 5)));
            Expression sum;
            for (const auto& [key, coef] : collect(e, mode)) sum = sum + monomial(key) * coef;
            CHECK(is_zero(sum - e));
        }
    }
}

TEST_CASE("property: derivatives agree with central differences")
{
    testing::ExprGen gen(14);
    int compared = 0;
    for (int i = 0; i < 300 && compared < 150; ++i) {
        const Expression e = normalize(gen(gen.uniform(1, 4), false, false));
        const Expression d = differentiate(e, "zeta");
        const double at = gen.real(0.2, 1.5);
        const Bindings b{{"a", 0.7}, {"g1", -1.3}};
        const auto f = [&](double s) {
            Bindings bb = b;
            bb["zeta"] = s;
            return evaluate(e, bb);
        };
        const double h = 1e-5;
        Bindings bz = b;
        bz["zeta"] = at;
        const double exact = evaluate(d, bz);
        const double fd = (f(at + h) - f(at - h)) / (2 * h);
        if (!std::isfinite(exact) || std::abs(exact) > 1e6) continue;
        ++compared;
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
    CHECK(compared >= 100);
}
