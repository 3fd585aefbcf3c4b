#pragma once
// Property checks shared by the gtest suite and the acceptance binary.
// Each returns how many cases ran and the first counterexample, if any.

#include "gen.hpp"
#include "mex/comprehension.hpp"
#include "mex/parser.hpp"
#include "mex/paths.hpp"
#include "mex/render.hpp"
#include "mex/simplify.hpp"
#include "mex/subst.hpp"
#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace mex::props {

struct Result {
  int cases = 0;
  int failures = 0;
  std::string first;  // first counterexample
  double worst = 0;   // largest numeric error seen, where meaningful

  void fail(const std::string& why) {
    if (failures++ == 0) first = why;
  }
  bool ok() const { return failures == 0; }
};

inline std::string src(const Expr& e) { return to_source(e); }

// --- simplify: idempotent and sound at exact rational points --------------

inline Result simplify_soundness(std::uint32_t seed, int n = 200, int points = 20) {
  gen::Gen g(seed);
  const std::vector<std::string> vars{"x", "y", "z"};
  Result r;
  while (r.cases < n) {
    Expr e = g.arith(3, vars);
    ++r.cases;
    Expr s;
    try {
      s = simplify(e);
    } catch (const std::exception& ex) {
      r.fail(src(e) + ": simplify threw " + ex.what());
      continue;
    }
    if (simplify(s) != s) {
      r.fail(src(e) + ": not idempotent, " + src(s) + " then " + src(simplify(s)));
      continue;
    }
    for (int k = 0; k < points; ++k) {
      std::map<std::string, Rational> env;
      for (const auto& v : vars) env[v] = g.small_rational(9);
      Rational want;
      try {
        want = oracle::eval_exact(e, env);
      } catch (const oracle::Undefined&) {
        continue;
      }
      try {
        Rational got = oracle::eval_exact(s, env);
        if (got != want) {
          r.fail(src(e) + " -> " + src(s) + " differs at a point");
          break;
        }
      } catch (const oracle::Undefined& u) {
        r.fail(src(s) + ": " + u.what());
        break;
      }
    }
  }
  return r;
}

// --- diff: symbolic derivative against central differences ----------------

inline Result diff_vs_finite_differences(std::uint32_t seed, int n = 30, double h = 1e-5, double tol = 1e-6) {
  gen::Gen g(seed);
  oracle::RealEval ev;
  ev.h = h;
  std::uniform_real_distribution<double> xs(0.3, 1.2);
  Result r;
  int attempts = 0;
  while (r.cases < n && attempts++ < 50 * n) {
    Expr e = g.smooth(3, "x");
    if (!occurs_free(e, "x")) continue;
    ++r.cases;
    Expr d;
    try {
      d = diff_verb(e, "x");
    } catch (const std::exception& ex) {
      r.fail(src(e) + ": diff threw " + ex.what());
      continue;
    }
    for (int k = 0; k < 3; ++k) {
      double x = xs(g.rng());
      double fd = ev.derivative(e, "x", {{"x", x}});
      double sym_d = ev(d, {{"x", x}});
      double delta = std::abs(fd - sym_d);
      r.worst = std::max(r.worst, delta);
      if (!(delta < tol)) {
        std::ostringstream os;
        os << src(e) << " at x=" << x << ": " << src(d) << " gives " << sym_d << ", differences give " << fd;
        r.fail(os.str());
        break;
      }
    }
  }
  return r;
}

// --- beta: two strategies, one normal form; no capture --------------------

inline Expr lambda_term(gen::Gen& g, int depth, std::vector<std::string>& bound) {
  static const std::vector<std::string> binders{"x", "y", "z"};
  static const std::vector<std::string> free{"a", "b", "y", "f"};
  auto atom = [&] {
    if (!bound.empty() && g.coin(0.7)) return sym(g.pick(bound));
    return sym(g.pick(free));
  };
  if (depth <= 0) return atom();
  auto lam = [&](int d) {
    int np = g.coin(0.8) ? 1 : 2;
    std::vector<std::string> ps;
    for (int i = 0; i < np; ++i) {
      std::string p = g.pick(binders);
      if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
    }
    for (const auto& p : ps) bound.push_back(p);
    Expr body = lambda_term(g, d, bound);
    bound.resize(bound.size() - ps.size());
    return Expr::lambda(ps, body);
  };
  switch (g.uniform(0, 5)) {
    case 0: return atom();
    case 1: return lam(depth - 1);
    case 2:
    case 3: {
      // redex
      Expr l = lam(depth - 1);
      std::vector<Expr> args;
      for (std::size_t i = 0; i < l.params().size(); ++i) args.push_back(lambda_term(g, depth - 1, bound));
      return Expr::apply(l, std::move(args));
    }
    case 4: return Expr::apply(atom(), {lambda_term(g, depth - 1, bound)});
    default: return op("+", {lambda_term(g, depth - 1, bound), lambda_term(g, depth - 1, bound)});
  }
}

inline bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& k : e.children()) n += node_count(k);
  return n;
}

inline Result beta_confluence(std::uint32_t seed, int n = 100, int limit = 300) {
  gen::Gen g(seed);
  Result r;
  int attempts = 0;
  while (r.cases < n && attempts++ < 100 * n) {
    std::vector<std::string> bound;
    Expr t = lambda_term(g, 4, bound);
    if (!detail::reduce_once(t, BetaStrategy::leftmost_outermost, {})) continue;
    bool captured = false;
    std::string where;
    BetaObserver watch = [&](const Expr& redex, const Expr& out) {
      // duplication can blow terms up; treat that like non-termination
      if (node_count(out) > 400) throw Error(ErrorCode::nontermination, "term too large");
      if (!captured && !subset(free_variables(out), free_variables(redex))) {
        captured = true;
        where = src(redex) + " -> " + src(out);
      }
    };
    BetaResult lo, ri;
    try {
      lo = beta_reduce(t, limit, BetaStrategy::leftmost_outermost, watch);
      ri = beta_reduce(t, limit, BetaStrategy::rightmost_innermost, watch);
    } catch (const Error&) {
      continue;  // not terminating within the limit
    }
    ++r.cases;
    if (captured) r.fail("free variables grew: " + where);
    else if (!subset(free_variables(lo.normal), free_variables(t)))
      r.fail(src(t) + ": normal form has new free variables");
    else if (alpha_normalize(lo.normal) != alpha_normalize(ri.normal))
      r.fail(src(t) + ": " + src(lo.normal) + " vs " + src(ri.normal));
  }
  return r;
}

// --- paths: part/substpart round trip, mkholes then fill ------------------

inline Result paths_round_trip(std::uint32_t seed, int n = 500) {
  gen::Gen g(seed);
  Result r;
  for (int i = 0; i < n; ++i) {
    Expr e = g.surface(4);
    ++r.cases;
    auto paths = all_paths(e);
    const Path& p = g.pick(paths);
    std::string at = src(e) + " at [" + path_to_string(p) + "]";
    try {
      Expr sub = part(e, p);
      if (substpart(sub, e, p) != e) {
        r.fail(at + ": putting the part back changes the tree");
        continue;
      }
      // a fresh value lands where it was put
      if (p.empty() || p.back() != 0) {
        Expr v = sym("fresh");
        if (part(substpart(v, e, p), p) != v) {
          r.fail(at + ": substpart then part loses the value");
          continue;
        }
      }
      // a random antichain of paths, holed and filled back
      std::vector<Path> chosen;
      std::vector<Path> pool = paths;
      std::shuffle(pool.begin(), pool.end(), g.rng());
      int want = g.uniform(1, 4);
      for (const auto& q : pool) {
        if (static_cast<int>(chosen.size()) >= want) break;
        bool clash = false;
        for (const auto& c : chosen) clash = clash || is_prefix(c, q) || is_prefix(q, c);
        if (!clash) chosen.push_back(q);
      }
      Exercise x = mkholes(e, chosen);
      std::map<int, Expr> answers;
      for (const auto& h : x.holes) answers[h.label] = x.answer(h.label);
      if (fill_holes(x, answers) != e) r.fail(src(e) + ": fill after mkholes differs");
    } catch (const std::exception& ex) {
      r.fail(at + ": " + ex.what());
    }
  }
  return r;
}

// --- comprehensions against nested loops -----------------------------------

struct ComprehensionCase {
  Comprehension c;
  std::string src;
};

/// Up to three generators over sets or ranges of at most six elements,
/// with optional filters.
inline ComprehensionCase random_comprehension(gen::Gen& g) {
  const std::vector<std::string> names{"a", "b", "c"};
  int ngens = g.uniform(1, 3);
  Comprehension c;
  std::vector<std::string> bound;
  auto small_term = [&]() -> Expr {
    if (bound.empty() || g.coin()) return num(g.uniform(-2, 4));
    Expr v = sym(g.pick(bound));
    return g.coin() ? v : op("+", {v, num(g.uniform(-2, 2))});
  };
  for (int i = 0; i < ngens; ++i) {
    Expr source;
    if (g.coin()) {
      std::vector<Expr> elems;
      int n = g.uniform(0, 6);
      for (int k = 0; k < n; ++k) elems.push_back(bound.empty() || g.coin() ? num(g.uniform(-3, 5)) : small_term());
      source = op("set", elems);
    } else {
      Expr lo = small_term();
      Expr hi = op("+", {lo, num(g.uniform(-1, 5))});
      if (!bound.empty() && g.coin()) hi = op("-", {num(g.uniform(3, 6)), sym(g.pick(bound))});
      source = op("range", {lo, hi});
    }
    c.clauses.push_back(Clause::gen(sym(names[static_cast<std::size_t>(i)]), source));
    bound.push_back(names[static_cast<std::size_t>(i)]);
    if (g.uniform(0, 3) == 0) {
      const char* rel = g.coin() ? "<" : ">=";
      c.clauses.push_back(Clause::filter(op(rel, {g.arith(2, bound, false), small_term()})));
    }
  }
  if (g.coin()) {
    std::vector<Expr> parts;
    for (const auto& v : bound) parts.push_back(sym(v));
    c.result = parts.size() == 1 ? parts[0] : op("tuple", parts);
  } else {
    c.result = g.arith(2, bound, false);
  }
  return {c, to_source(to_unified(c))};
}

namespace loops {

using Env = std::map<std::string, Rational>;

inline std::vector<Rational> source_values(const Expr& s, const Env& env) {
  std::vector<Rational> out;
  if (s.is_op("range")) {
    Rational lo = oracle::eval_exact(s.arg(0), env), hi = oracle::eval_exact(s.arg(1), env);
    for (Rational k = lo; k <= hi; k += 1) out.push_back(k);
  } else {
    for (const auto& a : s.args()) out.push_back(oracle::eval_exact(a, env));
  }
  return out;
}

inline bool holds(const Expr& cond, const Env& env) {
  Rational l = oracle::eval_exact(cond.arg(0), env), r = oracle::eval_exact(cond.arg(1), env);
  return cond.is_op("<") ? l < r : l >= r;
}

inline Expr result_value(const Expr& r, const Env& env) {
  if (r.is_op("tuple")) {
    std::vector<Expr> parts;
    for (const auto& a : r.args()) parts.push_back(num(oracle::eval_exact(a, env)));
    return op("tuple", parts);
  }
  return num(oracle::eval_exact(r, env));
}

/// Plain nested loops; values in first-seen order.
inline void run(const Comprehension& c, std::size_t i, Env& env, std::vector<Expr>& out, std::size_t& leaves) {
  if (i == c.clauses.size()) {
    Expr v = result_value(c.result, env);
    ++leaves;
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    return;
  }
  const Clause& cl = c.clauses[i];
  if (cl.kind == Clause::Kind::filter) {
    if (holds(cl.cond, env)) run(c, i + 1, env, out, leaves);
    return;
  }
  for (const Rational& x : source_values(cl.source, env)) {
    Env saved = env;
    env[cl.pattern.name()] = x;
    run(c, i + 1, env, out, leaves);
    env = saved;
  }
}

}  // namespace loops

inline Result comprehension_vs_loops(std::uint32_t seed, int n = 400) {
  gen::Gen g(seed);
  Result r;
  for (int i = 0; i < n; ++i) {
    ComprehensionCase k = random_comprehension(g);
    ++r.cases;
    try {
      loops::Env env;
      std::vector<Expr> want;
      std::size_t leaves = 0;
      loops::run(k.c, 0, env, want, leaves);
      Evaluation ev = evaluate(k.c);
      if (ev.values != want) r.fail(k.src + ": values differ from nested loops");
      else if (leaf_count(ev.tree) != leaves) r.fail(k.src + ": trace tree leaf count differs");
      else if (evaluate(parse(k.src)).values != want) r.fail(k.src + ": surface form parses differently");
      else if (evaluate(parse_loops(emit_loops(k.c))).values != want) r.fail(emit_loops(k.c) + ": loop round trip differs");
    } catch (const std::exception& ex) {
      r.fail(k.src + ": " + ex.what());
    }
  }
  return r;
}

}  // namespace mex::props
