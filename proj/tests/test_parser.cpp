#include <gtest/gtest.h>

#include "mex/parser.hpp"

using namespace mex;

TEST(Parser, SubstitutionSuffix) {
  Expr e = parse("(a+b) [a := 42]");
  ASSERT_TRUE(e.is_op("_s_"));
  EXPECT_EQ(e.arg(0), op("+", {sym("a"), sym("b")}));
  EXPECT_EQ(e.arg(1), op("list", {op(":=", {sym("a"), num(42)})}));
}

TEST(Parser, InfixSubstToken) {
  EXPECT_EQ(parse("(a+b) _s_ [a:=42]"), parse("(a+b)[a:=42]"));
}

TEST(Parser, LazyOperator) { EXPECT_EQ(parse("a +. b"), op("+.", {sym("a"), sym("b")})); }

TEST(Parser, Lambda) {
  EXPECT_EQ(parse("lambda([x], g(g(x)))"), Expr::lambda({"x"}, call("g", {call("g", {sym("x")})})));
}

TEST(Parser, Comprehension) {
  Expr e = parse("{10*a | a in {2,3,4}}");
  ASSERT_TRUE(e.is_op("compre"));
  EXPECT_EQ(e.arg(0), op("*", {num(10), sym("a")}));
  EXPECT_EQ(e.arg(1), op("in", {sym("a"), op("set", {num(2), num(3), num(4)})}));
}

TEST(Parser, SetOfForm) {
  Expr e = parse("{a in {2,3,4} | a^2 < 10}");
  ASSERT_TRUE(e.is_op("setof"));
  EXPECT_EQ(e.arity(), 2u);
}

TEST(Parser, Range) { EXPECT_EQ(parse("{x, ..., 6-x}"), op("range", {sym("x"), op("-", {num(6), sym("x")})})); }

TEST(Parser, Precedence) {
  EXPECT_EQ(parse("2+3*4"), op("+", {num(2), op("*", {num(3), num(4)})}));
  EXPECT_EQ(parse("2^3^2"), op("^", {num(2), op("^", {num(3), num(2)})}));
  EXPECT_EQ(parse("-x^2"), op("neg", {op("^", {sym("x"), num(2)})}));
  EXPECT_EQ(parse("-x + y"), op("+", {op("neg", {sym("x")}), sym("y")}));
}

TEST(Parser, Juxtaposition) {
  EXPECT_EQ(parse("42x"), op("*", {num(42), sym("x")}));
  EXPECT_EQ(parse("6x^3"), op("*", {num(6), op("^", {sym("x"), num(3)})}));
  EXPECT_EQ(parse("-3x"), op("*", {num(-3), sym("x")}));
  EXPECT_EQ(parse("a*3x^2"), op("*", {sym("a"), op("*", {num(3), op("^", {sym("x"), num(2)})})}));
}

TEST(Parser, NegativeLiteral) {
  EXPECT_EQ(parse("-3"), num(-3));
  EXPECT_EQ(parse("-3^2"), op("neg", {op("^", {num(3), num(2)})}));
  EXPECT_EQ(parse("x^-1"), op("^", {sym("x"), num(-1)}));
}

TEST(Parser, QuoteHolePrime) {
  EXPECT_EQ(parse("'diff(x^2, x)"), Expr::quote(op("diff", {op("^", {sym("x"), num(2)}), sym("x")})));
  EXPECT_EQ(parse("?"), Expr::hole());
  EXPECT_EQ(parse("?3 +. 7"), op("+.", {Expr::hole(3), num(7)}));
  EXPECT_EQ(parse("f'(x)"), call("f'", {sym("x")}));
  EXPECT_EQ(parse("(f(x))'"), op("prime", {call("f", {sym("x")})}));
}

TEST(Parser, Errors) {
  try {
    parse("(");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::syntax);
  }
  EXPECT_THROW(parse_bindings("[a := 1, a := 2]"), Error);
  EXPECT_THROW(parse("x + "), Error);
  EXPECT_THROW(parse("f(x) + 1 := 2"), Error);
}

TEST(Parser, Bindings) {
  auto s = parse_bindings("[f(x) := g(g(x)), g(x) := f(f(x))]");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.bindings[0].function_pattern);
  auto t = parse_bindings("[a=2,b=3]");
  EXPECT_EQ(t.bindings[1].rhs, num(3));
}
