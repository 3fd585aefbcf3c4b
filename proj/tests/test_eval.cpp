#include <gtest/gtest.h>

#include "mex/eval.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

using namespace mex;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(MEX_FIXTURES) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same(const Expr& a, const std::string& b) { return canonical_parts(a) == canonical_parts(parse(b)); }

}  // namespace

TEST(Eval, SplitStatements) {
  auto s = split_statements("a : 1$ b : [1;2]; {x; y}; c");
  ASSERT_EQ(s.size(), 4u);
  EXPECT_FALSE(s[0].show);
  EXPECT_EQ(s[0].text, "a : 1");
  EXPECT_EQ(s[2].text, "{x; y}");
  EXPECT_TRUE(s[3].show);
}

TEST(Eval, PlusShows) {
  Evaluator ev;
  auto out = ev.run("2+3;");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].display(), "5");
  EXPECT_TRUE(ev.run("2+3$")[0].show == false);
}

TEST(Eval, LineThroughTwoPoints) {
  auto t0 = std::chrono::steady_clock::now();
  Evaluator ev;
  auto out = ev.run(slurp("session4.mac"));
  ASSERT_EQ(out.size(), 10u);
  EXPECT_FALSE(out[0].show);
  EXPECT_TRUE(same(out[3].value, "b + a = 2")) << out[3].display();
  EXPECT_TRUE(same(out[4].value, "b + 3a = -4")) << out[4].display();
  EXPECT_EQ(out[5].value, parse("[[a = -3, b = 5]]")) << out[5].display();
  EXPECT_TRUE(same(out[6].value, "5 - 3x")) << out[6].display();
  EXPECT_EQ(out[6].display(), "5 - 3*x");
  EXPECT_EQ(out[7].display(), "g(x) := 5 - 3*x");
  EXPECT_EQ(out[8].value, num(2));
  EXPECT_EQ(out[9].value, num(-4));
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(1));
}

TEST(Eval, SubstitutionSession) {
  Evaluator ev;
  auto out = ev.run(slurp("session41.mac"));
  ASSERT_EQ(out.size(), 11u);
  EXPECT_EQ(out[2].display(), "[a:=2; b:=3]");
  EXPECT_EQ(out[4].display(), "(a + b = b + a)[a:=2; b:=3] = (2 + 3 = 3 + 2)");
  EXPECT_EQ(out[8].value, parse("g(g(f(f(t))))"));
  EXPECT_EQ(out[9].value, parse("f(f(f(t)))"));
  EXPECT_NE(out[10].display().find("= g(g(f(f(t))))"), std::string::npos) << out[10].display();
}

TEST(Eval, OtherCommands) {
  Evaluator ev;
  EXPECT_EQ(ev.run("(a+b) _s_ [a=42];")[0].value, parse("b + 42"));
  EXPECT_EQ(ev.run("diff(x^2, x);")[0].value, parse("2x"));
  EXPECT_EQ(ev.run("'diff(x^2, x);")[0].value, parse("'diff(x^2, x)"));
  EXPECT_EQ(ev.run("o : 2 +. 3 +. 4 = 2 +. 7$ substpart(?, o, [2, 1]);")[1].display(), "2 + 3 + 4 = ? + 7");
  EXPECT_EQ(ev.run("lisptree(a + b);")[0].text, "+─┬─a\n  └─b");
  EXPECT_THROW(ev.run("solve([x = 1], [x, y]);"), Error);
}
