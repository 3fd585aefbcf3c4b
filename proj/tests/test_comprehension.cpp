#include <gtest/gtest.h>

#include "gen.hpp"
#include "mex/comprehension.hpp"
#include "oracle.hpp"

using namespace mex;

namespace {

std::vector<Expr> values_of(const std::string& src) { return evaluate(parse(src)).values; }

std::vector<Expr> nums(std::initializer_list<int> xs) {
  std::vector<Expr> out;
  for (int x : xs) out.push_back(num(x));
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::usage;
}

const char* kNested = "{(x, y) | x in {1, ..., 5}, y in {x, ..., 6-x}}";

}  // namespace

TEST(Comprehension, NormalizeBothNotations) {
  Comprehension a = normalize(parse("{a in {2,3,4} | a^2 < 10}"));
  ASSERT_EQ(a.clauses.size(), 2u);
  EXPECT_EQ(a.clauses[0].kind, Clause::Kind::gen);
  EXPECT_EQ(a.clauses[0].pattern, sym("a"));
  EXPECT_EQ(a.clauses[1].kind, Clause::Kind::filter);
  EXPECT_EQ(a.result, sym("a"));
  EXPECT_EQ(to_source(to_unified(a)), "{a in {2, 3, 4}; a^2 < 10; a}");

  Comprehension b = normalize(parse("{10a | a in {2,3,4}}"));
  ASSERT_EQ(b.clauses.size(), 1u);
  EXPECT_EQ(b.result, parse("10a"));
  EXPECT_EQ(to_source(to_unified(b)), "{a in {2, 3, 4}; 10*a}");

  Comprehension e = normalize(parse("{x | x in {}}"));
  EXPECT_EQ(e.clauses.size(), 1u);
  // unified form parses back to the same clauses
  Comprehension u = normalize(to_unified(a));
  EXPECT_EQ(to_unified(u), to_unified(a));
  EXPECT_EQ(to_standard(a), parse("{a in {2,3,4} | a^2 < 10}"));
  EXPECT_EQ(to_standard(b), parse("{10a | a in {2,3,4}}"));
}

TEST(Comprehension, ScopingErrors) {
  EXPECT_EQ(code_of([] { normalize(parse("{b | a in {1,2}}")); }), ErrorCode::unbound_variable);
  EXPECT_EQ(code_of([] { normalize(parse("{a | a in {1,2}, a in {3}}")); }), ErrorCode::duplicate_generator);
  EXPECT_EQ(code_of([] { normalize(parse("{a | a in {1, ..., n}}")); }), ErrorCode::unbound_variable);
  // function heads are not variables
  EXPECT_NO_THROW(normalize(parse("{f(a) | a in {1,2}}")));
}

TEST(Comprehension, SmallValues) {
  EXPECT_EQ(values_of("{10a | a in {2,3,4}}"), nums({20, 30, 40}));
  EXPECT_EQ(values_of("{a in {2,3,4} | a^2 < 10}"), nums({2, 3}));
  EXPECT_EQ(values_of("{a^2 | a in {2,3,4}, a^2 < 10}"), nums({4, 9}));
  EXPECT_TRUE(values_of("{x | x in {}}").empty());
  EXPECT_EQ(values_of("{a - a | a in {1,2,3}}"), nums({0}));
}

TEST(Comprehension, NestedTable) {
  Evaluation ev = evaluate(parse(kNested));
  std::vector<Expr> want;
  for (auto [x, y] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 2}, {2, 3}, {2, 4}, {3, 3}})
    want.push_back(op("tuple", {num(x), num(y)}));
  EXPECT_EQ(ev.values, want);
  ASSERT_EQ(ev.tree.children.size(), 5u);
  EXPECT_EQ(leaf_count(ev.tree), 9u);
  EXPECT_TRUE(ev.tree.children[3].pruned);
  EXPECT_TRUE(ev.tree.children[4].pruned);
  EXPECT_EQ(ev.tree.children[3].pruned_reason, "empty");
  EXPECT_EQ(ev.tree.children[0].annotations.at("hi"), num(5));
  EXPECT_EQ(ev.tree.children[4].annotations.at("set"), op("set", {}));

  Comprehension c = normalize(parse(kNested));
  EXPECT_EQ(trace_table(c, ev),
            "x  y  (x, y)\n"
            "1  1  (1, 1)\n"
            "   2  (1, 2)\n"
            "   3  (1, 3)\n"
            "   4  (1, 4)\n"
            "   5  (1, 5)\n"
            "2  2  (2, 2)\n"
            "   3  (2, 3)\n"
            "   4  (2, 4)\n"
            "3  3  (3, 3)\n"
            "4  —\n"
            "5  —\n");
  EXPECT_EQ(trace_table(c, ev, true),
            "x  6 - x  {x, ..., 6 - x}  y  (x, y)\n"
            "1  5      {1, 2, 3, 4, 5}  1  (1, 1)\n"
            "                           2  (1, 2)\n"
            "                           3  (1, 3)\n"
            "                           4  (1, 4)\n"
            "                           5  (1, 5)\n"
            "2  4      {2, 3, 4}        2  (2, 2)\n"
            "                           3  (2, 3)\n"
            "                           4  (2, 4)\n"
            "3  3      {3}              3  (3, 3)\n"
            "4  2      {}               —\n"
            "5  1      {}               —\n");
}

TEST(Comprehension, FilterPrunes) {
  Evaluation ev = evaluate(parse("{a in {2,3,4} | a^2 < 10}"));
  ASSERT_EQ(ev.tree.children.size(), 3u);
  EXPECT_FALSE(ev.tree.children[0].pruned);
  EXPECT_TRUE(ev.tree.children[2].pruned);
  EXPECT_EQ(ev.tree.children[2].pruned_reason, "filter");
  EXPECT_EQ(leaf_count(ev.tree), 2u);
}

TEST(Comprehension, EvaluationErrors) {
  EXPECT_EQ(code_of([] { evaluate(parse("{x | x in {1, ..., 5/2}}")); }), ErrorCode::non_integer_range);
  EXPECT_EQ(code_of([] { evaluate(graph_comprehension(parse("y = (1-x)^2"))); }), ErrorCode::non_finite);
  EXPECT_EQ(code_of([] { evaluate(parse("{x | x in {1,2}, x < p(x)}")); }), ErrorCode::unevaluable_filter);
  EXPECT_EQ(code_of([] { graph_comprehension(parse("x + y")); }), ErrorCode::wrong_shape);
  EXPECT_TRUE(evaluate(parse("{x | x in {3, ..., 1}}")).values.empty());
}

TEST(Comprehension, LoopsForSmallExamples) {
  EXPECT_EQ(emit_loops(normalize(parse("{10a | a in {2,3,4}}"))),
            "for a in {2, 3, 4} do\n"
            "  print(10*a)\n"
            "end\n");
  EXPECT_EQ(emit_loops(normalize(parse("{a in {2,3,4} | a^2 < 10}"))),
            "for a in {2, 3, 4} do\n"
            "  if a^2 < 10 then\n"
            "    print(a)\n"
            "  end\n"
            "end\n");
  EXPECT_EQ(emit_loops(normalize(parse(kNested))),
            "for x = 1, 5 do\n"
            "  for y = x, 6 - x do\n"
            "    print(x, y)\n"
            "  end\n"
            "end\n");
  Comprehension back = parse_loops(emit_loops(normalize(parse(kNested))));
  EXPECT_EQ(evaluate(back).values, evaluate(parse(kNested)).values);
  EXPECT_THROW(parse_loops("for a in {1} do\n"), Error);
  EXPECT_THROW(parse_loops("print(a)\n"), Error);
}

TEST(Comprehension, GraphComprehensionRendering) {
  Comprehension g = graph_comprehension(parse("y = (1-x)^2"));
  EXPECT_EQ(to_ascii(to_standard(g)), "{(x, y) in ℝ² | y = (1 - x)^2}");
  EXPECT_EQ(to_latex(to_standard(g)), "\\{\\left(x, y\\right) \\in \\mathbb{R}^2 \\mid y = \\left(1 - x\\right)^{2}\\}");
}

TEST(Comprehension, TraceTreeRendering) {
  Evaluation ev = evaluate(parse("{10a | a in {2,3}}"));
  EXPECT_EQ(render_tree(trace_tree(ev.tree), TreeLayout::children_right),
            "•─┬─a=2 → 20\n"
            "  └─a=3 → 30");
}

