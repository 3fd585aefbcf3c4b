#pragma once

#include "mex/binding.hpp"
#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/parser.hpp"
#include "mex/simplify.hpp"
#include "mex/subst.hpp"

#include <set>
#include <string>
#include <vector>

namespace mex {

/// A named equation schema. Params are the symbols and function heads an
/// instantiation may bind; x is the differentiation variable.
struct Rule {
  std::string name;
  std::string description;
  Expr schema;
  std::vector<std::string> params;
};

/// Rules from the standard catalog, built once. Schemas use lazy operators
/// and noun derivatives so instances keep textbook order.
inline const std::vector<Rule>& builtin_catalog() {
  static const std::vector<Rule> catalog = [] {
    auto rule = [](std::string name, std::string desc, const char* src, std::vector<std::string> params) {
      return Rule{std::move(name), std::move(desc), parse(src), std::move(params)};
    };
    return std::vector<Rule>{
        rule("RChain", "the chain rule", "'diff(f(g(x)), x) = f'(g(x)) *. g'(x)", {"f", "f'", "g", "g'"}),
        rule("RProd", "the product rule", "'diff(u *. v, x) = u *. 'diff(v, x) +. v *. 'diff(u, x)", {"u", "v"}),
        rule("RConstMul", "constant multiple", "'diff(c *. u, x) = c *. 'diff(u, x)", {"c", "u"}),
        rule("RPot", "the power rule", "'diff(x^.n, x) = n *. x^.(n -. 1)", {"n"}),
        rule("RSum", "the sum rule", "'diff(u +. v, x) = 'diff(u, x) +. 'diff(v, x)", {"u", "v"}),
        rule("RSin", "derivative of sin", "'diff(sin(x), x) = cos(x)", {}),
        rule("RCos", "derivative of cos", "'diff(cos(x), x) = -. sin(x)", {}),
        rule("RTan", "derivative of tan", "'diff(tan(x), x) = 1 /. cos(x)^.2", {}),
        rule("RExp", "derivative of exp", "'diff(exp(x), x) = exp(x)", {}),
        rule("RLog", "derivative of log", "'diff(log(x), x) = 1 /. x", {}),
        rule("RSqrt", "derivative of sqrt", "'diff(sqrt(x), x) = 1 /. (2 *. sqrt(x))", {}),
    };
  }();
  return catalog;
}

inline const Rule* find_rule(const std::string& name) {
  for (const auto& r : builtin_catalog())
    if (r.name == name) return &r;
  return nullptr;
}

inline const Rule& rule_or_throw(const std::string& name) {
  const Rule* r = find_rule(name);
  if (!r) throw Error(ErrorCode::unknown_rule, "unknown rule '" + name + "'");
  return *r;
}

/// The schema with `s` applied and nothing simplified.
inline Expr instantiate_rule(const Rule& r, const Substitution& s) {
  for (const auto& b : s.bindings) {
    if (std::find(r.params.begin(), r.params.end(), b.head) == r.params.end())
      throw Error(ErrorCode::foreign_binding, "rule " + r.name + " has no parameter '" + b.head + "'");
  }
  SubstOptions opts;
  opts.simplify_result = false;
  return apply_subst(r.schema, s, opts).output;
}

/// Solves a square linear system exactly. Coefficients may be any
/// expressions free of the unknowns.
inline Substitution solve_linear(const std::vector<Expr>& eqs, const std::vector<std::string>& unknowns,
                                 const Context& ctx = Context::standard()) {
  const std::size_t n = unknowns.size();
  if (eqs.size() != n)
    throw Error(ErrorCode::singular, "need as many equations as unknowns (" + std::to_string(eqs.size()) + " vs " +
                                         std::to_string(n) + ")");
  std::set<std::string> unknown_set(unknowns.begin(), unknowns.end());
  auto free_of_unknowns = [&](const Expr& e) {
    for (const auto& v : free_variables(e))
      if (unknown_set.contains(v)) return false;
    return true;
  };
  // rows: coefficients followed by the right-hand constant
  std::vector<std::vector<Expr>> m(n, std::vector<Expr>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const Expr& eq = eqs[i];
    Expr d = eq.is_op("=") ? op("-", {eq.arg(0), eq.arg(1)}) : eq;
    d = expand(delazify(d), ctx);
    std::map<std::string, Expr> zero;
    for (const auto& u : unknowns) zero[u] = num(0);
    Expr constant = expand(replace_free_symbols(d, zero), ctx);
    std::vector<Expr> terms{constant};
    for (std::size_t j = 0; j < n; ++j) {
      Expr c = diff_verb(d, unknowns[j], ctx);
      c = expand(c, ctx);
      if (!free_of_unknowns(c))
        throw Error(ErrorCode::nonlinear, "equation " + std::to_string(i + 1) + " is not linear in " + unknowns[j]);
      m[i][j] = c;
      terms.push_back(op("*", {c, sym(unknowns[j])}));
    }
    if (expand(op("-", {d, op("+", terms)}), ctx) != num(0))
      throw Error(ErrorCode::nonlinear, "equation " + std::to_string(i + 1) + " is not affine in the unknowns");
    m[i][n] = expand(op("neg", {constant}), ctx);
  }
  auto is_zero = [&](const Expr& e) { return expand(e, ctx).is_num(0); };
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = n;
    for (std::size_t r = col; r < n; ++r) {
      if (!is_zero(m[r][col]) && (pivot == n || (m[r][col].is_num() && !m[pivot][col].is_num()))) pivot = r;
    }
    if (pivot == n) throw Error(ErrorCode::singular, "the system has no unique solution");
    std::swap(m[pivot], m[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || is_zero(m[r][col])) continue;
      Expr factor = simplify(op("/", {m[r][col], m[col][col]}), {}, ctx);
      for (std::size_t k = col; k <= n; ++k)
        m[r][k] = expand(op("-", {m[r][k], op("*", {factor, m[col][k]})}), ctx);
    }
  }
  Substitution s;
  for (std::size_t i = 0; i < n; ++i) {
    Binding b;
    b.head = unknowns[i];
    b.rhs = expand(op("/", {m[i][n], m[i][i]}), ctx);
    s.bindings.push_back(std::move(b));
  }
  return s;
}

/// Records `pattern := body` as a user function. Returns true when an
/// earlier definition was replaced.
inline bool define_function(Context& ctx, const Expr& pattern, const Expr& body) {
  auto b = binding_lhs(pattern);
  if (!b || !b->function_pattern)
    throw Error(ErrorCode::malformed_binding, "define expects a function pattern h(v1, ..., vk)");
  if (ctx.is_opaque(b->head)) throw Error(ErrorCode::malformed_binding, "'" + b->head + "' is declared opaque");
  bool redefined = ctx.functions.contains(b->head);
  ctx.functions[b->head] = FunctionDef{b->params, body};
  return redefined;
}

}  // namespace mex
