#pragma once

#include "mex/binding.hpp"
#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/simplify.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mex {

enum class BetaStrategy { leftmost_outermost, rightmost_innermost };

/// Called after every reduction step with the redex and its contractum.
using BetaObserver = std::function<void(const Expr& redex, const Expr& contractum)>;

struct BetaResult {
  Expr normal;
  int steps = 0;
};

struct SubstOptions {
  int step_limit = 10000;
  bool simplify_result = true;
  BetaStrategy strategy = BetaStrategy::leftmost_outermost;
};

struct SubstResult {
  Expr input;
  Substitution subst;
  Expr output;
  int beta_steps = 0;
};

/// "y" -> "y%k" with the smallest k >= 1 not in `taken`.
inline std::string fresh_name(const std::string& name, const std::set<std::string>& taken) {
  std::string base = name.substr(0, name.find('%'));
  for (int k = 1;; ++k) {
    std::string candidate = base + "%" + std::to_string(k);
    if (!taken.contains(candidate)) return candidate;
  }
}

/// Parallel capture-avoiding substitution of free symbols. Inserted values
/// are never rescanned.
inline Expr substitute_free(const Expr& e, const std::map<std::string, Expr>& m) {
  if (m.empty()) return e;
  switch (e.kind()) {
    case Expr::Kind::sym: {
      auto it = m.find(e.name());
      return it == m.end() ? e : it->second;
    }
    case Expr::Kind::num:
    case Expr::Kind::hole: return e;
    case Expr::Kind::lambda: {
      std::map<std::string, Expr> inner = m;
      for (const auto& p : e.params()) inner.erase(p);
      auto body_free = free_variables(e.body());
      for (auto it = inner.begin(); it != inner.end();) {
        if (!body_free.contains(it->first))
          it = inner.erase(it);
        else
          ++it;
      }
      if (inner.empty()) return e;
      std::set<std::string> incoming;
      for (const auto& [k, v] : inner) {
        auto fv = free_variables(v);
        incoming.insert(fv.begin(), fv.end());
      }
      std::set<std::string> taken = all_symbols(e.body());
      taken.insert(incoming.begin(), incoming.end());
      for (const auto& [k, v] : inner) taken.insert(k);
      taken.insert(e.params().begin(), e.params().end());
      std::vector<std::string> params = e.params();
      std::map<std::string, Expr> rename;
      for (auto& p : params) {
        if (!incoming.contains(p)) continue;
        std::string q = fresh_name(p, taken);
        taken.insert(q);
        rename[p] = sym(q);
        p = q;
      }
      Expr body = substitute_free(e.body(), rename);
      return Expr::lambda(std::move(params), substitute_free(body, inner));
    }
    default: {
      auto kids = e.children();
      bool changed = false;
      for (auto& k : kids) {
        Expr nk = substitute_free(k, m);
        if (!nk.same_node(k)) changed = true;
        k = std::move(nk);
      }
      return changed ? e.with_children(std::move(kids)) : e;
    }
  }
}

inline bool is_redex(const Expr& e) {
  return e.is_app() && e.head().is_lambda() && e.head().params().size() == e.arity();
}

/// Contracts one redex (lambda([x...], b))(a...) to b[x := a, ...].
inline Expr contract(const Expr& redex) {
  const Expr& lam = redex.head();
  std::map<std::string, Expr> m;
  for (std::size_t i = 0; i < lam.params().size(); ++i) m[lam.params()[i]] = redex.arg(i);
  return substitute_free(lam.body(), m);
}

namespace detail {

// Reduces the first redex in the chosen order; nullopt if there is none.
inline std::optional<Expr> reduce_once(const Expr& e, BetaStrategy strategy, const BetaObserver& observer) {
  bool outermost = strategy == BetaStrategy::leftmost_outermost;
  if (outermost && is_redex(e)) {
    Expr r = contract(e);
    if (observer) observer(e, r);
    return r;
  }
  auto kids = e.children();
  if (outermost) {
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (auto r = reduce_once(kids[i], strategy, observer)) {
        kids[i] = *r;
        return e.with_children(std::move(kids));
      }
    }
  } else {
    for (std::size_t i = kids.size(); i-- > 0;) {
      if (auto r = reduce_once(kids[i], strategy, observer)) {
        kids[i] = *r;
        return e.with_children(std::move(kids));
      }
    }
    if (is_redex(e)) {
      Expr r = contract(e);
      if (observer) observer(e, r);
      return r;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Beta-reduces to normal form. Throws nontermination after `step_limit` steps.
inline BetaResult beta_reduce(const Expr& e, int step_limit = 10000,
                              BetaStrategy strategy = BetaStrategy::leftmost_outermost,
                              const BetaObserver& observer = {}) {
  BetaResult out{e, 0};
  while (auto next = detail::reduce_once(out.normal, strategy, observer)) {
    if (out.steps >= step_limit)
      throw Error(ErrorCode::nontermination,
                  "beta reduction exceeded the step limit of " + std::to_string(step_limit));
    out.normal = *next;
    ++out.steps;
  }
  return out;
}

/// Renames bound variables to v1, v2, ... in binding order, so that
/// alpha-equivalent terms become structurally equal.
inline Expr alpha_normalize(const Expr& e) {
  int counter = 0;
  std::function<Expr(const Expr&, const std::map<std::string, std::string>&)> go =
      [&](const Expr& x, const std::map<std::string, std::string>& env) -> Expr {
    switch (x.kind()) {
      case Expr::Kind::sym: {
        auto it = env.find(x.name());
        return it == env.end() ? x : sym(it->second);
      }
      case Expr::Kind::lambda: {
        auto inner = env;
        std::vector<std::string> ps;
        for (const auto& p : x.params()) {
          std::string q = "%v" + std::to_string(++counter);
          inner[p] = q;
          ps.push_back(q);
        }
        return Expr::lambda(ps, go(x.body(), inner));
      }
      default: {
        auto kids = x.children();
        for (auto& k : kids) k = go(k, env);
        return kids.empty() ? x : x.with_children(std::move(kids));
      }
    }
  };
  return go(e, {});
}

/// Parallel substitution: function patterns become lambdas, every binding is
/// applied in one pass, redexes are beta-reduced, and the result simplified.
inline SubstResult apply_subst(const Expr& e, const Substitution& s, const SubstOptions& opts = {},
                               const Context& ctx = Context::standard()) {
  if (opts.step_limit < 1) throw Error(ErrorCode::usage, "step limit must be at least 1");
  SubstResult r{e, s, e, 0};
  if (s.empty()) return r;
  std::map<std::string, Expr> m;
  for (const auto& b : s.bindings) m[b.head] = b.value();
  Expr replaced = substitute_free(e, m);
  BetaResult beta = beta_reduce(replaced, opts.step_limit, opts.strategy);
  r.beta_steps = beta.steps;
  r.output = opts.simplify_result ? simplify(beta.normal, {}, ctx) : beta.normal;
  return r;
}

inline SubstResult apply_subst(const Expr& e, const Expr& bindings, const SubstOptions& opts = {},
                               const Context& ctx = Context::standard()) {
  return apply_subst(e, substitution_from_expr(bindings), opts, ctx);
}

namespace detail {

inline Expr apply_one_binding(const Expr& e, const Binding& b, std::set<std::string>& bound) {
  if (e.is_sym()) return (!b.function_pattern && e.name() == b.head && !bound.contains(b.head)) ? b.rhs : e;
  if (b.function_pattern && e.is_app() && e.head().is_sym(b.head) && !bound.contains(b.head) &&
      e.arity() == b.params.size()) {
    bool symbols_only = true;
    for (const auto& a : e.args()) symbols_only = symbols_only && a.is_sym();
    if (symbols_only) {
      std::map<std::string, Expr> m;
      for (std::size_t i = 0; i < b.params.size(); ++i) m[b.params[i]] = e.arg(i);
      return substitute_free(b.rhs, m);
    }
  }
  if (e.is_lambda()) {
    std::set<std::string> inner = bound;
    inner.insert(e.params().begin(), e.params().end());
    return Expr::lambda(e.params(), apply_one_binding(e.body(), b, inner));
  }
  auto kids = e.children();
  for (auto& k : kids) k = apply_one_binding(k, b, bound);
  return kids.empty() ? e : e.with_children(std::move(kids));
}

}  // namespace detail

/// The naive semantics: bindings applied one after another, left to right,
/// each over the whole current tree. A function pattern h(v...) rewrites
/// applications of h whose arguments are all symbols.
inline Expr apply_sequential(const Expr& e, const Substitution& s) {
  Expr cur = e;
  for (const auto& b : s.bindings) {
    std::set<std::string> bound;
    cur = detail::apply_one_binding(cur, b, bound);
  }
  return cur;
}

enum class SubstForm { s, ss, sss, ssu };

inline std::optional<SubstForm> subst_form_from_string(std::string_view f) {
  if (f == "s") return SubstForm::s;
  if (f == "ss") return SubstForm::ss;
  if (f == "sss") return SubstForm::sss;
  if (f == "ssu") return SubstForm::ssu;
  return std::nullopt;
}

/// V(S): the substitution as a column of `lhs := rhs` rows.
inline Expr v_matrix(const Substitution& s) {
  std::vector<Expr> rows;
  for (const auto& b : s.bindings) rows.push_back(op("row", {b.to_expr()}));
  return op("V", std::move(rows));
}

/// Presentation object for the four substitution forms. The shapes are
///   s   : output
///   ss  : _ss_(input, V)
///   sss : _ss_(input, V) = output
///   ssu : underbrace(_ss_(input, V), _ss_(input, V) = output)
/// where the underbrace caption is the right side of its second child.
inline Expr subst_presentation(const Expr& input, const Substitution& s, const Expr& output, SubstForm form) {
  Expr ss = op("_ss_", {input, v_matrix(s)});
  switch (form) {
    case SubstForm::s: return output;
    case SubstForm::ss: return ss;
    case SubstForm::sss: return op("=", {ss, output});
    case SubstForm::ssu: return op("underbrace", {ss, op("=", {ss, output})});
  }
  return output;
}

inline Expr subst_form(const Expr& e, const Substitution& s, SubstForm form, const SubstOptions& opts = {},
                       const Context& ctx = Context::standard()) {
  if (form == SubstForm::ss) return subst_presentation(e, s, e, form);
  return subst_presentation(e, s, apply_subst(e, s, opts, ctx).output, form);
}

}  // namespace mex
