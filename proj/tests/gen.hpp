#pragma once
// Hand-rolled random generators for property tests.

#include "mex/expr.hpp"
#include "mex/rational.hpp"

#include <random>
#include <string>
#include <vector>

namespace mex::gen {

class Gen {
 public:
  explicit Gen(std::uint32_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& xs) {
    return xs[static_cast<std::size_t>(uniform(0, static_cast<int>(xs.size()) - 1))];
  }
  std::mt19937& rng() { return rng_; }

  Rational small_rational(int range = 6) {
    int n = uniform(-range, range);
    int d = coin(0.7) ? 1 : uniform(1, 4);
    return Rational(n, d);
  }

  /// Polynomial-ish arithmetic over variables, safe to evaluate anywhere
  /// the divisors are nonzero.
  Expr arith(int depth, const std::vector<std::string>& vars, bool allow_div = true) {
    if (depth <= 0 || coin(0.25)) {
      if (coin(0.45)) return num(small_rational());
      return sym(pick(vars));
    }
    switch (uniform(0, allow_div ? 6 : 5)) {
      case 0:
      case 1: {
        std::vector<Expr> xs;
        int n = uniform(2, 3);
        for (int i = 0; i < n; ++i) xs.push_back(arith(depth - 1, vars, allow_div));
        return op("+", xs);
      }
      case 2: {
        std::vector<Expr> xs;
        int n = uniform(2, 3);
        for (int i = 0; i < n; ++i) xs.push_back(arith(depth - 1, vars, allow_div));
        return op("*", xs);
      }
      case 3: return op("-", {arith(depth - 1, vars, allow_div), arith(depth - 1, vars, allow_div)});
      case 4: return op("neg", {arith(depth - 1, vars, allow_div)});
      case 5: return op("^", {arith(depth - 1, vars, allow_div), num(uniform(0, 3))});
      default: return op("/", {arith(depth - 1, vars, allow_div), op("+", {op("^", {sym(pick(vars)), num(2)}), num(1)})});
    }
  }

  /// Smooth expressions for derivative checks: arithmetic plus sin, cos,
  /// exp and log of positive arguments.
  Expr smooth(int depth, const std::string& x) {
    if (depth <= 0 || coin(0.2)) return coin(0.5) ? num(uniform(1, 5)) : sym(x);
    switch (uniform(0, 8)) {
      case 0: return op("+", {smooth(depth - 1, x), smooth(depth - 1, x)});
      case 1: return op("*", {smooth(depth - 1, x), smooth(depth - 1, x)});
      case 2: return op("-", {smooth(depth - 1, x), smooth(depth - 1, x)});
      case 3: return op("^", {smooth(depth - 1, x), num(uniform(2, 3))});
      case 4: return call("sin", {smooth(depth - 1, x)});
      case 5: return call("cos", {smooth(depth - 1, x)});
      case 6: return call("exp", {op("/", {smooth(depth - 1, x), num(4)})});
      case 7: return call("log", {op("+", {op("^", {smooth(depth - 1, x), num(2)}), num(1)})});
      default: return op("/", {smooth(depth - 1, x), op("+", {op("^", {smooth(depth - 1, x), num(2)}), num(2)})});
    }
  }

  /// Trees in the shape the parser produces, over most of the grammar.
  Expr surface(int depth) {
    static const std::vector<std::string> names{"x", "y", "a", "b", "t", "f", "g"};
    if (depth <= 0 || coin(0.2)) {
      switch (uniform(0, 5)) {
        case 0: return num(uniform(0, 20));
        case 1: return num(uniform(-9, -1));
        case 2: return coin(0.7) ? Expr::hole() : Expr::hole(uniform(1, 4));
        case 3: return num(Rational(uniform(1, 99), 4));
        default: return sym(pick(names));
      }
    }
    auto sub = [&] { return surface(depth - 1); };
    switch (uniform(0, 18)) {
      case 0: return op(pick(std::vector<std::string>{"+", "+."}), {sub(), sub(), sub()});
      case 1: return op(pick(std::vector<std::string>{"*", "*."}), {sub(), sub()});
      case 2: return op(pick(std::vector<std::string>{"-", "-.", "/", "/."}), {sub(), sub()});
      case 3: return op(pick(std::vector<std::string>{"^", "^."}), {sub(), sub()});
      case 4: return op(pick(std::vector<std::string>{"neg", "neg."}), {sub()});
      case 5: return op("=", {sub(), sub()});
      case 6: return call(pick(std::vector<std::string>{"f", "g", "sin", "f'"}), {sub()});
      case 7: return Expr::apply(sym("h"), {sub(), sub()});
      case 8: return op("prime", {call("f", {sub()})});
      case 9: return Expr::quote(op("diff", {sub(), sym("x")}));
      case 10: return Expr::lambda({"x"}, sub());
      case 11: return Expr::apply(Expr::lambda({"y"}, sub()), {sub()});
      case 12: return op("list", {sub(), sub()});
      case 13: return op("set", {sub(), sub(), sub()});
      case 14: return op(pick(std::vector<std::string>{"<", "<=", ">"}), {sub(), sub()});
      case 15: return op(pick(std::vector<std::string>{"and", "or"}), {sub(), sub()});
      case 16: return op("_s_", {sub(), op("list", {op(":=", {sym("a"), sub()})})});
      case 17: return op("index", {sym("P"), num(uniform(1, 3))});
      default: return op("tuple", {sub(), sub()});
    }
  }

 private:
  std::mt19937 rng_;
};

}  // namespace mex::gen
