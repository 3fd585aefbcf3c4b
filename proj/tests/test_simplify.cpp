#include <gtest/gtest.h>

#include "mex/parser.hpp"
#include "mex/simplify.hpp"

using namespace mex;

namespace {
Expr S(const char* src) { return simplify(parse(src)); }
}  // namespace

TEST(Simplify, CollectsLikeTerms) {
  EXPECT_EQ(S("2+3+4x+5x"), op("+", {op("*", {num(9), sym("x")}), num(5)}));
}

TEST(Simplify, LazyUntouched) {
  Expr e = parse("2 +. 3");
  EXPECT_EQ(simplify(e), e);
  Expr f = parse("x + (2 +. 3) + 1 + 1");
  EXPECT_EQ(simplify(f), op("+", {sym("x"), parse("2 +. 3"), num(2)}));
}

TEST(Simplify, SameCanonicalForm) { EXPECT_EQ(S("5 - 3x"), S("-3x + 5")); }

TEST(Simplify, Identities) {
  EXPECT_EQ(S("0*x + 1*y"), sym("y"));
  EXPECT_EQ(S("x^1"), sym("x"));
  EXPECT_EQ(S("x^0"), num(1));
  EXPECT_EQ(S("4/2"), num(2));
  EXPECT_EQ(S("1/3 + 1/6"), num(Rational(1, 2)));
}

TEST(Simplify, DivisionByZero) {
  try {
    S("x/0");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::arithmetic);
  }
}

TEST(Simplify, Products) {
  EXPECT_EQ(S("(6x^3)*(7x^4)"), S("42*x^7"));
  EXPECT_EQ(S("x*x"), op("^", {sym("x"), num(2)}));
  EXPECT_EQ(S("(3x)^2"), S("9*x^2"));
}

TEST(Simplify, Idempotent) {
  for (const char* src : {"2+3+4x+5x", "(x+1)*(x+1)/x", "a*b - b*a + c", "x^2*x^-2"}) {
    Expr once = S(src);
    EXPECT_EQ(simplify(once), once) << src;
  }
}

TEST(Delazify, Basic) {
  EXPECT_EQ(delazify(parse("2 +. 3")), parse("2 + 3"));
  EXPECT_EQ(delazify(parse("a +. (b +. c)")), parse("a + (b + c)"));
  EXPECT_EQ(delazify(parse("'diff(x^2, x)")), parse("diff(x^2, x)"));
  EXPECT_EQ(simplify(delazify(parse("'diff(x^2, x)"))), S("2*x"));
}

TEST(Diff, Polynomials) {
  EXPECT_EQ(S("diff(x^2, x)"), S("2*x"));
  EXPECT_EQ(S("diff((6x^3)*(7x^4), x)"), S("294*x^6"));
  Expr noun = parse("'diff(x^2, x)");
  EXPECT_EQ(simplify(noun), noun);
}

TEST(Diff, OpaqueHeads) {
  Context ctx;
  ctx.declare_opaque("f");
  ctx.declare_opaque("g");
  Expr d = diff_verb(parse("f(g(x))"), "x", ctx);
  EXPECT_EQ(d, simplify(parse("f'(g(x))*g'(x)"), {}, ctx));
  EXPECT_THROW(diff_verb(parse("h(x)"), "x"), Error);
}

TEST(Canonical, Orders) {
  EXPECT_TRUE(canonically_equal(parse("2*x + 1/x"), parse("1/x + 2x")));
  EXPECT_TRUE(canonically_equal(parse("(x+1)^2"), parse("x^2 + 2x + 1")));
  EXPECT_FALSE(canonically_equal(parse("2x"), parse("2x + 1/x")));
}
