#pragma once

#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/rational.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mex {

struct SimplifyOptions {
  int max_passes = 32;
  bool fold_constants = true;
  bool collect_like_terms = true;
};

inline Expr simplify(const Expr& e, const SimplifyOptions& opts = {}, const Context& ctx = Context::standard());
inline Expr diff_verb(const Expr& e, const std::string& var, const Context& ctx = Context::standard());

inline const Expr& true_sym() {
  static const Expr t = sym("true");
  return t;
}
inline const Expr& false_sym() {
  static const Expr f = sym("false");
  return f;
}
inline Expr boolean(bool b) { return b ? true_sym() : false_sym(); }

/// Replaces free occurrences of symbols by the mapped values, in parallel.
/// Lambdas shadow their parameters. No capture avoidance: used for function
/// bodies whose only binders are their own parameters.
inline Expr replace_free_symbols(const Expr& e, const std::map<std::string, Expr>& m) {
  switch (e.kind()) {
    case Expr::Kind::sym: {
      auto it = m.find(e.name());
      return it == m.end() ? e : it->second;
    }
    case Expr::Kind::num:
    case Expr::Kind::hole: return e;
    case Expr::Kind::lambda: {
      auto inner = m;
      for (const auto& p : e.params()) inner.erase(p);
      return Expr::lambda(e.params(), replace_free_symbols(e.body(), inner));
    }
    default: {
      auto kids = e.children();
      for (auto& k : kids) k = replace_free_symbols(k, m);
      return e.with_children(std::move(kids));
    }
  }
}

/// Replaces every lazy operator "X." by "X" and strips Quoted wrappers.
inline Expr delazify(const Expr& e) {
  if (e.is_quoted()) return delazify(e.inner());
  auto kids = e.children();
  for (auto& k : kids) k = delazify(k);
  if (e.is_op() && is_lazy_name(e.name())) return op(active_name(e.name()), std::move(kids));
  return kids.empty() ? e : e.with_children(std::move(kids));
}

/// delazify that keeps noun wrappers, so 'diff(u, x) stays a noun.
inline Expr delazify_keep_nouns(const Expr& e) {
  if (e.is_quoted()) return Expr::quote(delazify_keep_nouns(e.inner()));
  auto kids = e.children();
  for (auto& k : kids) k = delazify_keep_nouns(k);
  if (e.is_op() && is_lazy_name(e.name())) return op(active_name(e.name()), std::move(kids));
  return kids.empty() ? e : e.with_children(std::move(kids));
}

namespace detail {

inline bool is_elementary(const std::string& f) {
  return f == "sin" || f == "cos" || f == "tan" || f == "exp" || f == "log" || f == "sqrt";
}

inline bool is_bool_sym(const Expr& e) { return e.is_sym("true") || e.is_sym("false"); }

// Splits a canonical term into numeric coefficient and the rest (1 if none).
inline std::pair<Rational, Expr> split_coefficient(const Expr& t) {
  if (t.is_num()) return {t.value(), num(1)};
  if (t.is_op("*") && t.arg(0).is_num()) {
    std::vector<Expr> rest(t.args().begin() + 1, t.args().end());
    if (rest.size() == 1) return {t.arg(0).value(), rest.front()};
    return {t.arg(0).value(), op("*", std::move(rest))};
  }
  return {Rational(1), t};
}

inline std::pair<Expr, Expr> split_power(const Expr& t) {
  if (t.is_op("^")) return {t.arg(0), t.arg(1)};
  return {t, num(1)};
}

// Total polynomial degree used to order sums; non-polynomial pieces count 1.
inline Rational degree(const Expr& t) {
  if (t.is_num()) return 0;
  if (t.is_op("*")) {
    Rational d = 0;
    for (const auto& a : t.args()) d += degree(a);
    return d;
  }
  if (t.is_op("^") && t.arg(1).is_num()) return degree(t.arg(0)) * t.arg(1).value();
  if (t.is_op("+")) {
    Rational d = 0;
    for (const auto& a : t.args()) d = std::max(d, degree(a));
    return d;
  }
  return 1;
}

class Simplifier {
 public:
  Simplifier(const SimplifyOptions& opts, const Context& ctx) : opts_(opts), ctx_(ctx) {}

  Expr run(const Expr& e) {
    Expr cur = e;
    for (int pass = 0; pass < std::max(1, opts_.max_passes); ++pass) {
      Expr next = step(cur);
      if (next == cur) return next;
      cur = next;
    }
    throw Error(ErrorCode::convergence, "simplification did not converge within " +
                                            std::to_string(opts_.max_passes) + " passes");
  }

  Expr step(const Expr& e) {
    switch (e.kind()) {
      case Expr::Kind::num:
      case Expr::Kind::sym:
      case Expr::Kind::hole:
      case Expr::Kind::quoted: return e;
      case Expr::Kind::lambda: return Expr::lambda(e.params(), step(e.body()));
      case Expr::Kind::app: return app(e);
      case Expr::Kind::op: return operation(e);
    }
    return e;
  }

 private:
  std::vector<Expr> step_args(const Expr& e) {
    std::vector<Expr> out;
    for (const auto& a : e.args()) out.push_back(step(a));
    return out;
  }

  Expr app(const Expr& e) {
    Expr head = e.head().is_sym() ? e.head() : step(e.head());
    auto args = step_args(e);
    if (head.is_sym()) {
      const std::string& f = head.name();
      if (const FunctionDef* def = ctx_.function(f); def && def->params.size() == args.size()) {
        std::map<std::string, Expr> m;
        for (std::size_t i = 0; i < args.size(); ++i) m[def->params[i]] = args[i];
        return replace_free_symbols(def->body, m);
      }
      if (args.size() == 1 && opts_.fold_constants) {
        if (auto v = elementary_value(f, args[0])) return *v;
      }
    }
    return Expr::apply(head, std::move(args));
  }

  std::optional<Expr> elementary_value(const std::string& f, const Expr& a) {
    if (!a.is_num()) {
      if (f == "log" && a.is_app() && a.head().is_sym("exp") && a.arity() == 1) return a.arg(0);
      if (f == "exp" && a.is_app() && a.head().is_sym("log") && a.arity() == 1) return a.arg(0);
      return std::nullopt;
    }
    const Rational& v = a.value();
    if (v == 0) {
      if (f == "sin" || f == "tan" || f == "sqrt") return num(0);
      if (f == "cos" || f == "exp") return num(1);
      if (f == "log") throw Error(ErrorCode::arithmetic, "log(0) is undefined");
    }
    if (f == "log" && v == 1) return num(0);
    if (f == "sqrt" && v > 0) {
      if (auto r = rational_pow(v, Rational(1, 2))) return num(*r);
    }
    return std::nullopt;
  }

  Expr operation(const Expr& e) {
    const std::string& n = e.name();
    if (is_lazy_name(n)) return e;
    if (n == "_s_" || n == "_ss_" || n == "_sss_" || n == "_ssu_" || n == "compre" || n == "setof" ||
        n == "unified" || n == "range" || n == "V" || n == "row" || n == "underbrace")
      return e;
    if (n == ":=") return op(":=", {e.arg(0), step(e.arg(1))});
    auto args = step_args(e);
    if (n == "+") return sum(args);
    if (n == "*") return product(args);
    if (n == "-") return sum({args[0], product({num(-1), args[1]})});
    if (n == "neg") return product({num(-1), args[0]});
    if (n == "/") {
      if (args[1].is_num(0)) throw Error(ErrorCode::arithmetic, "division by zero");
      return product({args[0], power(args[1], num(-1))});
    }
    if (n == "^") return power(args[0], args[1]);
    if (n == "diff") {
      if (!args[1].is_sym())
        throw Error(ErrorCode::cannot_differentiate, "differentiation variable must be a symbol");
      return diff_verb(args[0], args[1].name(), ctx_);
    }
    if (n == "prime") return diff_verb(args[0], "x", ctx_);
    if (n == "<" || n == ">" || n == "<=" || n == ">=") {
      if (args[0].is_num() && args[1].is_num()) {
        const Rational &a = args[0].value(), &b = args[1].value();
        bool r = n == "<" ? a < b : n == ">" ? a > b : n == "<=" ? a <= b : a >= b;
        return boolean(r);
      }
    }
    if (n == "and" || n == "or") {
      bool all_bool = std::all_of(args.begin(), args.end(), is_bool_sym);
      if (all_bool) {
        bool r = n == "and";
        for (const auto& a : args) r = n == "and" ? (r && a.is_sym("true")) : (r || a.is_sym("true"));
        return boolean(r);
      }
    }
    if (n == "not" && is_bool_sym(args[0])) return boolean(args[0].is_sym("false"));
    if (n == "index" && args[0].is_op("list") && args[1].is_integer_num()) {
      const Rational& k = args[1].value();
      if (k >= 1 && k <= static_cast<long long>(args[0].arity()))
        return args[0].arg(static_cast<std::size_t>(k.convert_to<long long>()) - 1);
      throw Error(ErrorCode::path, "list index out of range");
    }
    return op(n, std::move(args));
  }

  Expr sum(const std::vector<Expr>& raw) {
    std::vector<Expr> terms;
    for (const auto& t : raw) {
      if (t.is_op("+"))
        terms.insert(terms.end(), t.args().begin(), t.args().end());
      else
        terms.push_back(t);
    }
    Rational constant = 0;
    std::vector<std::pair<Expr, Rational>> collected;  // rest -> coefficient, first-seen order
    std::vector<Expr> kept;
    for (const auto& t : terms) {
      if (t.is_num() && opts_.fold_constants) {
        constant += t.value();
        continue;
      }
      if (!opts_.collect_like_terms) {
        kept.push_back(t);
        continue;
      }
      auto [c, rest] = split_coefficient(t);
      auto it = std::find_if(collected.begin(), collected.end(), [&](const auto& p) { return p.first == rest; });
      if (it == collected.end())
        collected.emplace_back(rest, c);
      else
        it->second += c;
    }
    for (const auto& [rest, c] : collected) {
      if (c == 0) continue;
      kept.push_back(c == 1 ? rest : product({num(c), rest}));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Expr& a, const Expr& b) {
      auto ra = split_coefficient(a).second, rb = split_coefficient(b).second;
      Rational da = degree(ra), db = degree(rb);
      if (da != db) return da > db;
      int c = compare(ra, rb);
      if (c != 0) return c < 0;
      return compare(a, b) < 0;
    });
    if (constant != 0 || kept.empty()) kept.push_back(num(constant));
    if (kept.size() == 1) return kept.front();
    return op("+", std::move(kept));
  }

  Expr product(const std::vector<Expr>& raw) {
    std::vector<Expr> factors;
    for (const auto& f : raw) {
      if (f.is_op("*"))
        factors.insert(factors.end(), f.args().begin(), f.args().end());
      else
        factors.push_back(f);
    }
    Rational coefficient = 1;
    std::vector<std::pair<Expr, Expr>> powers;  // base -> exponent, first-seen order
    std::vector<Expr> kept;
    for (const auto& f : factors) {
      if (f.is_num() && opts_.fold_constants) {
        coefficient *= f.value();
        continue;
      }
      if (!opts_.collect_like_terms) {
        kept.push_back(f);
        continue;
      }
      auto [base, exponent] = split_power(f);
      auto it = std::find_if(powers.begin(), powers.end(), [&](const auto& p) { return p.first == base; });
      if (it == powers.end())
        powers.emplace_back(base, exponent);
      else
        it->second = sum({it->second, exponent});
    }
    if (coefficient == 0) return num(0);
    for (const auto& [base, exponent] : powers) {
      Expr p = power(base, exponent);
      if (p.is_num()) {
        coefficient *= p.value();
      } else if (p.is_op("*")) {
        for (const auto& x : p.args()) {
          if (x.is_num())
            coefficient *= x.value();
          else
            kept.push_back(x);
        }
      } else {
        kept.push_back(p);
      }
    }
    if (coefficient == 0) return num(0);
    std::stable_sort(kept.begin(), kept.end(), [](const Expr& a, const Expr& b) {
      int c = compare(split_power(a).first, split_power(b).first);
      return c != 0 ? c < 0 : compare(a, b) < 0;
    });
    if (coefficient != 1 || kept.empty()) kept.insert(kept.begin(), num(coefficient));
    if (kept.size() == 1) return kept.front();
    return op("*", std::move(kept));
  }

  Expr power(const Expr& base, const Expr& exponent) {
    if (exponent.is_num(0)) return num(1);
    if (exponent.is_num(1)) return base;
    if (base.is_num(1)) return num(1);
    if (base.is_num(0) && exponent.is_num()) {
      if (exponent.value() < 0) throw Error(ErrorCode::arithmetic, "division by zero");
      return num(0);
    }
    if (base.is_num() && exponent.is_num() && opts_.fold_constants) {
      if (auto r = rational_pow(base.value(), exponent.value())) return num(*r);
    }
    if (exponent.is_integer_num()) {
      if (base.is_op("^")) {
        // (b^m)^n = b^(m n) for integer n
        return power(base.arg(0), product({base.arg(1), exponent}));
      }
      if (base.is_op("*")) {
        std::vector<Expr> fs;
        for (const auto& f : base.args()) fs.push_back(power(f, exponent));
        return product(fs);
      }
    }
    return op("^", {base, exponent});
  }

  const SimplifyOptions& opts_;
  const Context& ctx_;
};

}  // namespace detail

/// Active simplification to the canonical form; lazy operators and Quoted
/// subtrees are left as they are.
inline Expr simplify(const Expr& e, const SimplifyOptions& opts, const Context& ctx) {
  return detail::Simplifier(opts, ctx).run(e);
}

/// Distributes products over sums and expands small integer powers of sums.
inline Expr expand(const Expr& e, const Context& ctx = Context::standard()) {
  Expr s = simplify(e, {}, ctx);
  auto distribute_factors = [&](std::span<const Expr> factors) -> std::optional<Expr> {
    std::vector<std::vector<Expr>> acc{{}};
    for (const auto& f : factors) {
      std::vector<Expr> options =
          f.is_op("+") ? std::vector<Expr>(f.args().begin(), f.args().end()) : std::vector<Expr>{f};
      std::vector<std::vector<Expr>> next;
      for (const auto& partial : acc)
        for (const auto& o : options) {
          auto p = partial;
          p.push_back(o);
          next.push_back(std::move(p));
        }
      acc = std::move(next);
    }
    if (acc.size() == 1) return std::nullopt;
    std::vector<Expr> terms;
    for (auto& p : acc) terms.push_back(op("*", std::move(p)));
    return simplify(op("+", std::move(terms)), {}, ctx);
  };
  auto distribute = [&](const Expr& x) -> Expr {
    if (x.is_op("*")) return distribute_factors(x.args()).value_or(x);
    if (x.is_op("^") && x.arg(0).is_op("+") && x.arg(1).is_integer_num() && x.arg(1).value() > 1 &&
        x.arg(1).value() <= 16) {
      std::vector<Expr> copies(x.arg(1).value().convert_to<std::size_t>(), x.arg(0));
      return distribute_factors(copies).value_or(x);
    }
    return x;
  };
  for (int pass = 0; pass < 32; ++pass) {
    Expr next = simplify(transform_bottom_up(s, [&](const Expr& x) {
      if (x.is_quoted() || is_lazy(x)) return x;
      return distribute(x);
    }), {}, ctx);
    if (next == s) return s;
    s = next;
  }
  return s;
}

/// Canonical form for equality checks: lazy operators activated, nouns kept
/// (with canonical insides), simplified and expanded.
inline Expr canonical(const Expr& e, const Context& ctx = Context::standard()) {
  Expr d = delazify_keep_nouns(e);
  // A noun keeps its own head unevaluated; only its arguments are normalized.
  d = transform_bottom_up(d, [&](const Expr& x) {
    if (!x.is_quoted()) return x;
    auto kids = x.inner().children();
    if (kids.empty()) return x;
    for (auto& k : kids) k = expand(k, ctx);
    return Expr::quote(x.inner().with_children(std::move(kids)));
  });
  return expand(d, ctx);
}

inline bool canonically_equal(const Expr& a, const Expr& b, const Context& ctx = Context::standard()) {
  return canonical(a, ctx) == canonical(b, ctx);
}

/// Truth value of a condition after simplification, if it has one.
inline std::optional<bool> truth_value(const Expr& e, const Context& ctx = Context::standard()) {
  Expr s = simplify(delazify(e), {}, ctx);
  if (s.is_sym("true")) return true;
  if (s.is_sym("false")) return false;
  if (s.is_op("=") && s.arity() == 2) {
    Expr l = expand(s.arg(0), ctx), r = expand(s.arg(1), ctx);
    if (l == r) return true;
    if (l.is_num() && r.is_num()) return false;
    Expr d = expand(op("-", {l, r}), ctx);
    if (d.is_num()) return d.is_num(0);
  }
  return std::nullopt;
}

namespace detail {

inline Expr prime_head(const Expr& head) { return sym(head.name() + "'"); }

class Differentiator {
 public:
  Differentiator(std::string var, const Context& ctx) : var_(std::move(var)), ctx_(ctx) {}

  Expr d(const Expr& e) {
    switch (e.kind()) {
      case Expr::Kind::num: return num(0);
      case Expr::Kind::sym: return num(e.name() == var_ ? 1 : 0);
      case Expr::Kind::quoted: return Expr::quote(op("diff", {e.inner(), sym(var_)}));
      case Expr::Kind::hole: throw Error(ErrorCode::cannot_differentiate, "cannot differentiate a hole");
      case Expr::Kind::lambda: throw Error(ErrorCode::cannot_differentiate, "cannot differentiate a lambda");
      case Expr::Kind::app: return app(e);
      case Expr::Kind::op: return operation(e);
    }
    return num(0);
  }

 private:
  Expr app(const Expr& e) {
    if (!free_variables(e).contains(var_)) return num(0);
    if (!e.head().is_sym())
      throw Error(ErrorCode::cannot_differentiate, "cannot differentiate an application of a non-symbol head");
    const std::string& f = e.head().name();
    if (e.arity() == 1 && is_elementary(f)) {
      const Expr& u = e.arg(0);
      Expr outer;
      if (f == "sin") outer = call("cos", {u});
      else if (f == "cos") outer = op("neg", {call("sin", {u})});
      else if (f == "tan") outer = op("^", {call("cos", {u}), num(-2)});
      else if (f == "exp") outer = e;
      else if (f == "log") outer = op("^", {u, num(-1)});
      else outer = op("/", {num(1), op("*", {num(2), call("sqrt", {u})})});
      return op("*", {outer, d(u)});
    }
    if (ctx_.is_opaque(f)) {
      if (e.arity() == 1) return op("*", {Expr::apply(prime_head(e.head()), {e.arg(0)}), d(e.arg(0))});
      throw Error(ErrorCode::cannot_differentiate, "opaque function '" + f + "' of several arguments");
    }
    throw Error(ErrorCode::cannot_differentiate, "cannot differentiate '" + f + "'");
  }

  Expr operation(const Expr& e) {
    const std::string n = active_name(e.name());
    if (n == "+") {
      std::vector<Expr> ts;
      for (const auto& a : e.args()) ts.push_back(d(a));
      return op("+", std::move(ts));
    }
    if (n == "-") return op("-", {d(e.arg(0)), d(e.arg(1))});
    if (n == "neg") return op("neg", {d(e.arg(0))});
    if (n == "*") {
      std::vector<Expr> ts;
      for (std::size_t i = 0; i < e.arity(); ++i) {
        std::vector<Expr> fs(e.args().begin(), e.args().end());
        fs[i] = d(fs[i]);
        ts.push_back(op("*", std::move(fs)));
      }
      return ts.size() == 1 ? ts.front() : op("+", std::move(ts));
    }
    if (n == "/") return d(op("*", {e.arg(0), op("^", {e.arg(1), num(-1)})}));
    if (n == "^") {
      const Expr &b = e.arg(0), &x = e.arg(1);
      bool base_dep = free_variables(b).contains(var_), exp_dep = free_variables(x).contains(var_);
      if (!exp_dep) return op("*", {x, op("^", {b, op("-", {x, num(1)})}), d(b)});
      if (!base_dep) return op("*", {e, call("log", {b}), d(x)});
      return op("*", {e, op("+", {op("*", {d(x), call("log", {b})}), op("*", {x, d(b), op("^", {b, num(-1)})})})});
    }
    if (n == "diff" || n == "prime") return d(simplify(e, {}, ctx_));
    throw Error(ErrorCode::cannot_differentiate, "cannot differentiate operator '" + e.name() + "'");
  }

  std::string var_;
  const Context& ctx_;
};

}  // namespace detail

/// The derivative of `e` with respect to `var`, actively simplified.
inline Expr diff_verb(const Expr& e, const std::string& var, const Context& ctx) {
  Expr prepared = simplify(delazify_keep_nouns(e), {}, ctx);
  return simplify(detail::Differentiator(var, ctx).d(prepared), {}, ctx);
}

}  // namespace mex
