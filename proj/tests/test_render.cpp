#include <gtest/gtest.h>

#include "gen.hpp"
#include "mex/parser.hpp"
#include "mex/render.hpp"
#include "mex/subst.hpp"

using namespace mex;

TEST(Render, LazyWithoutDots) {
  Expr o = parse("2 +. 3 = 3 +. 2");
  EXPECT_EQ(to_ascii(o), "2 + 3 = 3 + 2");
  RenderOptions dots;
  dots.show_dots = true;
  EXPECT_EQ(to_ascii(o, dots), "2 +. 3 = 3 +. 2");
}

TEST(Render, SssForm) {
  auto s = parse_bindings("[a := 2, b := 3]");
  Expr o = subst_form(parse("a +. b = b +. a"), s, SubstForm::sss);
  EXPECT_EQ(to_ascii(o), "(a + b = b + a)[a:=2; b:=3] = (2 + 3 = 3 + 2)");
}

TEST(Render, SsuAscii) {
  auto s = parse_bindings("[a := 2, b := 3]");
  Expr o = subst_form(parse("a +. b = b +. a"), s, SubstForm::ssu);
  std::string out = to_ascii(o);
  EXPECT_NE(out.find("(a + b = b + a)[a:=2; b:=3]\n└"), std::string::npos) << out;
  EXPECT_NE(out.find("2 + 3 = 3 + 2"), std::string::npos);
  std::string tex = to_latex(o);
  EXPECT_EQ(tex, "\\underbrace{\\left(a + b = b + a\\right) \\begin{bmatrix} a := 2 \\\\ b := 3 \\end{bmatrix}}_{2 + 3 = 3 + 2}");
}

TEST(Render, VMatrixLatex) {
  Expr v = v_matrix(parse_bindings("[a := 2, b := 3]"));
  EXPECT_EQ(to_latex(v), "\\begin{bmatrix} a := 2 \\\\ b := 3 \\end{bmatrix}");
}

TEST(Render, FunctionBindingShowsLambda) {
  Substitution s;
  Binding b;
  b.head = "f";
  b.rhs = Expr::lambda({"x"}, parse("g(g(x))"));
  s.bindings.push_back(b);
  EXPECT_EQ(to_ascii(v_matrix(s)), "[f:=λ([x], g(g(x)))]");
}

TEST(Render, HolesAndBoxes) {
  Expr o = parse("2 +. 3 +. 4 = 2 +. 7");
  EXPECT_EQ(to_ascii(o, boxed_at({2, 1})), "2 + 3 + 4 = ⎡2⎤ + 7");
  EXPECT_EQ(to_ascii(substpart(Expr::hole(), o, {2, 1})), "2 + 3 + 4 = ? + 7");
  EXPECT_EQ(to_latex(o, boxed_at({2, 1})), "2 + 3 + 4 = \\boxed{2} + 7");
  EXPECT_EQ(to_ascii(Expr::hole(3)), "?3");
  EXPECT_EQ(to_ascii(sym("x")), "x");
}

TEST(Render, TreeChildrenRight) {
  Expr o = parse("2 +. 3 +. 4 = 2 +. 7");
  EXPECT_EQ(ascii_tree(o),
            "=─┬─+─┬─2\n"
            "  │   ├─3\n"
            "  │   └─4\n"
            "  └─+─┬─2\n"
            "      └─7");
  EXPECT_EQ(ascii_tree(o, TreeLayout::children_right, boxed_at({2, 1})),
            "=─┬─+─┬─2\n"
            "  │   ├─3\n"
            "  │   └─4\n"
            "  └─+─┬─⎡2⎤\n"
            "      └─7");
}

TEST(Render, TreeRootTop) {
  EXPECT_EQ(ascii_tree(parse("a + b"), TreeLayout::root_top),
            " +\n"
            "┌┴─┐\n"
            "a  b");
  std::string t = ascii_tree(parse("f(g(x))"), TreeLayout::root_top);
  EXPECT_EQ(t, "f\n│\ng\n│\nx");
}

TEST(Render, DisplayFractionsAndMinus) {
  Expr e = op("+", {op("*", {num(2), sym("x")}), op("^", {sym("x"), num(-1)})});
  EXPECT_EQ(to_ascii(e), "2*x + 1/x");
  EXPECT_EQ(to_latex(e), "2 x + \\frac{1}{x}");
  EXPECT_EQ(to_ascii(op("+", {num(5), op("*", {num(-3), sym("x")})})), "5 - 3*x");
  EXPECT_EQ(to_latex(num(Rational(1, 2))), "\\frac{1}{2}");
  EXPECT_EQ(to_ascii(op("^", {sym("x"), num(Rational(1, 2))})), "x^(1/2)");
}

TEST(Render, NounDerivative) {
  EXPECT_EQ(to_latex(parse("'diff(x^2, x)")), "\\frac{d}{dx} x^{2}");
  EXPECT_EQ(to_latex(parse("'diff(7*x^4, x)")), "\\frac{d}{dx} \\left(7 x^{4}\\right)");
  EXPECT_EQ(to_ascii(parse("'diff(f(g(x)), x)")), "d/dx f(g(x))");
  EXPECT_EQ(to_source(parse("'diff(f(g(x)), x)")), "'diff(f(g(x)), x)");
}

TEST(Render, Highlight) {
  RenderOptions o;
  o.annotations.push_back({{1}, AnnotationKind::highlight, Expr()});
  EXPECT_EQ(to_latex(parse("a + b"), o), "\\mexhl{a} + b");
  EXPECT_EQ(to_ascii(parse("a + b"), o), "«a» + b");
}

TEST(Render, AnnotationsDoNotAlterStructure) {
  Expr e = parse("x^2 + 3*x");
  auto before = to_source(e);
  (void)to_ascii(e, boxed_at({2}));
  EXPECT_EQ(to_source(e), before);
}

TEST(RenderProperty, SourceRoundTrip) {
  gen::Gen g(12345);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    Expr e = g.surface(4);
    std::string src = to_source(e);
    Expr back;
    ASSERT_NO_THROW(back = parse(src)) << src;
    ASSERT_EQ(back, e) << src << "\n reparsed as " << to_source(back);
    ++checked;
  }
  EXPECT_EQ(checked, 3000);
}

TEST(RenderProperty, ParsedCorpusRoundTrip) {
  for (const char* s : {"a*3x^2", "-3x", "-3^2", "5 - 3x", "(x+1)^2", "f'(g(x)) *. g'(x)", "'diff(f(g(x)), x)",
                        "x[a := 2, f(x) := x^2]", "{10a | a in {2,3,4}}", "{x, ..., 6-x}", "P[1]",
                        "lambda([x], x + 1)(2)", "not a and b", "-(3)", "2.5*x", "(f(x))'", "x - (y - z)"}) {
    Expr e = parse(s);
    EXPECT_EQ(parse(to_source(e)), e) << s << " -> " << to_source(e);
  }
}
