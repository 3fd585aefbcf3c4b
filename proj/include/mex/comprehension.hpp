#pragma once

#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/parser.hpp"
#include "mex/render.hpp"
#include "mex/simplify.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mex {

struct Clause {
  enum class Kind { gen, filter };
  Kind kind = Kind::gen;
  Expr pattern;  // gen: a symbol or a tuple of symbols
  Expr source;   // gen: explicit set, range, or R2
  Expr cond;     // filter

  static Clause gen(Expr pattern, Expr source) { return {Kind::gen, std::move(pattern), std::move(source), Expr()}; }
  static Clause filter(Expr cond) { return {Kind::filter, Expr(), Expr(), std::move(cond)}; }
};

/// Unified form: generators and filters in order, the result last.
struct Comprehension {
  std::vector<Clause> clauses;
  Expr result;
};

namespace detail {

// Symbols in value positions; the head of f(x) is not a variable.
inline void value_symbols(const Expr& e, std::set<std::string>& out) {
  if (e.is_sym()) {
    out.insert(e.name());
    return;
  }
  if (e.is_app()) {
    if (!e.head().is_sym()) value_symbols(e.head(), out);
    for (const auto& a : e.args()) value_symbols(a, out);
    return;
  }
  if (e.is_lambda()) {
    std::set<std::string> inner;
    value_symbols(e.body(), inner);
    for (const auto& p : e.params()) inner.erase(p);
    out.insert(inner.begin(), inner.end());
    return;
  }
  for (const auto& c : e.children()) value_symbols(c, out);
}

inline std::vector<std::string> pattern_vars(const Expr& p) {
  if (p.is_sym()) return {p.name()};
  if (p.is_op("tuple")) {
    std::vector<std::string> out;
    for (const auto& a : p.args()) {
      if (!a.is_sym()) throw Error(ErrorCode::wrong_shape, "generator patterns are symbols or tuples of symbols");
      out.push_back(a.name());
    }
    return out;
  }
  throw Error(ErrorCode::wrong_shape, "generator patterns are symbols or tuples of symbols");
}

inline bool is_reals_plane(const Expr& e) { return e.is_sym("R2"); }

}  // namespace detail

/// Checks the scoping rules: generator variables are fresh, and every
/// filter, source and result only uses variables bound earlier.
inline void validate(const Comprehension& c) {
  std::set<std::string> bound;
  auto check = [&](const Expr& e, const char* where) {
    std::set<std::string> used;
    detail::value_symbols(e, used);
    for (const auto& v : used) {
      if (v == "true" || v == "false" || v == "R2") continue;
      if (!bound.contains(v))
        throw Error(ErrorCode::unbound_variable, std::string("variable '") + v + "' in the " + where + " is not bound by an earlier generator");
    }
  };
  for (const auto& cl : c.clauses) {
    if (cl.kind == Clause::Kind::gen) {
      check(cl.source, "generator source");
      for (const auto& v : detail::pattern_vars(cl.pattern))
        if (!bound.insert(v).second)
          throw Error(ErrorCode::duplicate_generator, "generator variable '" + v + "' is bound twice");
    } else {
      check(cl.cond, "filter");
    }
  }
  check(c.result, "result");
}

/// Both surface notations, and the unified one, to clauses.
inline Comprehension normalize(const Expr& e) {
  Comprehension c;
  auto qualifier = [&](const Expr& q) {
    if (q.is_op("in") && q.arity() == 2) c.clauses.push_back(Clause::gen(q.arg(0), q.arg(1)));
    else c.clauses.push_back(Clause::filter(q));
  };
  if (e.is_op("compre") && e.arity() >= 2) {
    for (std::size_t i = 1; i < e.arity(); ++i) qualifier(e.arg(i));
    c.result = e.arg(0);
  } else if (e.is_op("setof") && e.arity() >= 1 && e.arg(0).is_op("in")) {
    for (const auto& q : e.args()) qualifier(q);
    c.result = e.arg(0).arg(0);
  } else if (e.is_op("unified") && e.arity() >= 2) {
    for (std::size_t i = 0; i + 1 < e.arity(); ++i) qualifier(e.arg(i));
    c.result = e.args().back();
  } else {
    throw Error(ErrorCode::wrong_shape, "not a comprehension");
  }
  validate(c);
  return c;
}

/// The unified surface form {gen; filter; ...; expr}.
inline Expr to_unified(const Comprehension& c) {
  std::vector<Expr> items;
  for (const auto& cl : c.clauses)
    items.push_back(cl.kind == Clause::Kind::gen ? op("in", {cl.pattern, cl.source}) : cl.cond);
  items.push_back(c.result);
  return op("unified", std::move(items));
}

/// Back to a two-part notation: {v in S | cond} when that fits, else {e | quals}.
inline Expr to_standard(const Comprehension& c) {
  std::vector<Expr> quals;
  for (const auto& cl : c.clauses)
    quals.push_back(cl.kind == Clause::Kind::gen ? op("in", {cl.pattern, cl.source}) : cl.cond);
  if (!c.clauses.empty() && c.clauses.front().kind == Clause::Kind::gen && c.clauses.front().pattern == c.result) {
    bool rest_filters = true;
    for (std::size_t i = 1; i < c.clauses.size(); ++i) rest_filters = rest_filters && c.clauses[i].kind == Clause::Kind::filter;
    if (rest_filters) return op("setof", std::move(quals));
  }
  quals.insert(quals.begin(), c.result);
  return op("compre", std::move(quals));
}

struct TraceNode {
  std::string var;                       // empty at the root
  std::optional<Expr> value;
  std::vector<TraceNode> children;
  bool pruned = false;
  std::string pruned_reason;             // "filter" or "empty"
  std::map<std::string, Expr> annotations;
  std::optional<Expr> result;            // leaves only
};

struct Evaluation {
  std::vector<Expr> values;  // generation order, first occurrences
  TraceNode tree;
};

/// Sorts values canonically for set display.
inline std::vector<Expr> as_set(std::vector<Expr> values) {
  std::sort(values.begin(), values.end(), ExprLess{});
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

inline std::size_t leaf_count(const TraceNode& t) {
  if (t.result) return 1;
  std::size_t n = 0;
  for (const auto& c : t.children) n += leaf_count(c);
  return n;
}

namespace detail {

class ComprehensionEvaluator {
 public:
  ComprehensionEvaluator(const Comprehension& c, const Context& ctx) : c_(c), ctx_(ctx) {}

  Evaluation run() {
    Evaluation ev;
    std::map<std::string, Expr> env;
    step(0, env, ev.tree, ev);
    return ev;
  }

 private:
  Expr value(const Expr& e, const std::map<std::string, Expr>& env) const {
    return simplify(delazify(replace_free_symbols(e, env)), {}, ctx_);
  }

  std::vector<Expr> elements(const Clause& cl, const std::map<std::string, Expr>& env, TraceNode& node) const {
    if (is_reals_plane(cl.source)) throw Error(ErrorCode::non_finite, "cannot enumerate R2");
    Expr src = replace_free_symbols(cl.source, env);
    if (src.is_op("range") && src.arity() == 2) {
      Expr lo = value(src.arg(0), {}), hi = value(src.arg(1), {});
      if (!lo.is_integer_num() || !hi.is_integer_num())
        throw Error(ErrorCode::non_integer_range, "range {" + to_source(lo) + ", ..., " + to_source(hi) + "} needs integer endpoints");
      node.annotations["lo"] = lo;
      node.annotations["hi"] = hi;
      std::vector<Expr> out;
      Integer a = numerator(lo.value()), b = numerator(hi.value());
      if (b - a > 100000) throw Error(ErrorCode::non_finite, "range too large to enumerate");
      for (Integer k = a; k <= b; ++k) out.push_back(num(Rational(k)));
      node.annotations["set"] = op("set", out);
      return out;
    }
    Expr s = value(src, {});
    if (s.is_op("set") || s.is_op("list")) {
      node.annotations["set"] = op("set", std::vector<Expr>(s.args().begin(), s.args().end()));
      return std::vector<Expr>(s.args().begin(), s.args().end());
    }
    throw Error(ErrorCode::non_finite, "generator source " + to_source(s) + " is not a finite set");
  }

  void step(std::size_t i, std::map<std::string, Expr>& env, TraceNode& node, Evaluation& ev) const {
    if (i == c_.clauses.size()) {
      Expr r = value(c_.result, env);
      node.result = r;
      if (std::find(ev.values.begin(), ev.values.end(), r) == ev.values.end()) ev.values.push_back(r);
      return;
    }
    const Clause& cl = c_.clauses[i];
    if (cl.kind == Clause::Kind::filter) {
      Expr cond = replace_free_symbols(cl.cond, env);
      auto t = truth_value(cond, ctx_);
      if (!t) throw Error(ErrorCode::unevaluable_filter, "filter " + to_source(cond) + " is neither true nor false");
      if (!*t) {
        node.pruned = true;
        node.pruned_reason = "filter";
        node.annotations["filter"] = cl.cond;
        return;
      }
      step(i + 1, env, node, ev);
      return;
    }
    auto vars = pattern_vars(cl.pattern);
    auto elems = elements(cl, env, node);
    if (elems.empty()) {
      node.pruned = true;
      node.pruned_reason = "empty";
      return;
    }
    for (const auto& x : elems) {
      TraceNode child;
      child.var = to_source(cl.pattern);
      child.value = x;
      auto saved = env;
      if (vars.size() == 1 && cl.pattern.is_sym()) {
        env[vars[0]] = x;
      } else {
        if (!x.is_op("tuple") || x.arity() != vars.size())
          throw Error(ErrorCode::wrong_shape, "element " + to_source(x) + " does not match " + to_source(cl.pattern));
        for (std::size_t k = 0; k < vars.size(); ++k) env[vars[k]] = x.arg(k);
      }
      step(i + 1, env, child, ev);
      env = std::move(saved);
      node.children.push_back(std::move(child));
    }
  }

  const Comprehension& c_;
  const Context& ctx_;
};

}  // namespace detail

inline Evaluation evaluate(const Comprehension& c, const Context& ctx = Context::standard()) {
  validate(c);
  return detail::ComprehensionEvaluator(c, ctx).run();
}

inline Evaluation evaluate(const Expr& e, const Context& ctx = Context::standard()) {
  return evaluate(normalize(e), ctx);
}

/// Nested loops: `for v = lo, hi do` for ranges, `for v in {...} do` for
/// sets, `if cond then` for filters, `print(...)` for the result.
inline std::string emit_loops(const Comprehension& c, const Context& ctx = Context::standard()) {
  std::string out;
  int depth = 0;
  auto indent = [&] { return std::string(2 * static_cast<std::size_t>(depth), ' '); };
  for (const auto& cl : c.clauses) {
    if (cl.kind == Clause::Kind::gen) {
      if (cl.source.is_op("range") && cl.source.arity() == 2)
        out += indent() + "for " + to_source(cl.pattern, ctx) + " = " + to_source(cl.source.arg(0), ctx) + ", " +
               to_source(cl.source.arg(1), ctx) + " do\n";
      else
        out += indent() + "for " + to_source(cl.pattern, ctx) + " in " + to_source(cl.source, ctx) + " do\n";
    } else {
      out += indent() + "if " + to_source(cl.cond, ctx) + " then\n";
    }
    ++depth;
  }
  std::string shown;
  if (c.result.is_op("tuple")) {
    for (std::size_t i = 0; i < c.result.arity(); ++i) shown += (i ? ", " : "") + to_source(c.result.arg(i), ctx);
  } else {
    shown = to_source(c.result, ctx);
  }
  out += indent() + "print(" + shown + ")\n";
  while (depth > 0) {
    --depth;
    out += indent() + "end\n";
  }
  return out;
}

/// Reads a program in the emit_loops language back into clauses.
inline Comprehension parse_loops(std::string_view program, const Context& ctx = Context::standard()) {
  Comprehension c;
  std::istringstream in{std::string(program)};
  std::string line;
  int opened = 0, n = 0;
  bool printed = false;
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::syntax, "line " + std::to_string(n) + ": " + msg); };
  auto strip = [](std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t a = 0;
    while (a < s.size() && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    return s.substr(a);
  };
  auto ends_with = [](const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  while (std::getline(in, line)) {
    ++n;
    std::string t = strip(line);
    if (t.empty()) continue;
    if (t == "end") {
      if (--opened < 0) fail("unmatched end");
      continue;
    }
    if (printed) fail("nothing may follow print except end");
    if (t.rfind("for ", 0) == 0 && ends_with(t, " do")) {
      std::string body = strip(t.substr(4, t.size() - 7));
      auto in_pos = body.find(" in ");
      auto eq_pos = body.find(" = ");
      if (in_pos != std::string::npos && (eq_pos == std::string::npos || in_pos < eq_pos)) {
        c.clauses.push_back(Clause::gen(parse(body.substr(0, in_pos), ctx), parse(body.substr(in_pos + 4), ctx)));
      } else if (eq_pos != std::string::npos) {
        Expr bounds = parse("[" + body.substr(eq_pos + 3) + "]", ctx);
        if (bounds.arity() != 2) fail("a range loop needs two bounds");
        c.clauses.push_back(Clause::gen(parse(body.substr(0, eq_pos), ctx), op("range", {bounds.arg(0), bounds.arg(1)})));
      } else {
        fail("malformed for");
      }
      ++opened;
    } else if (t.rfind("if ", 0) == 0 && ends_with(t, " then")) {
      c.clauses.push_back(Clause::filter(parse(t.substr(3, t.size() - 8), ctx)));
      ++opened;
    } else if (t.rfind("print(", 0) == 0 && t.back() == ')') {
      Expr args = parse("[" + t.substr(6, t.size() - 7) + "]", ctx);
      c.result = args.arity() == 1 ? args.arg(0) : op("tuple", std::vector<Expr>(args.args().begin(), args.args().end()));
      printed = true;
    } else {
      fail("unrecognized statement '" + t + "'");
    }
  }
  if (!printed) throw Error(ErrorCode::syntax, "program has no print");
  if (opened != 0) throw Error(ErrorCode::syntax, "unbalanced for/if/end");
  validate(c);
  return c;
}

/// {(x, y) in R2 | y = rhs}: a symbolic value for display only.
inline Comprehension graph_comprehension(const Expr& eq) {
  if (!eq.is_op("=") || eq.arity() != 2 || !eq.arg(0).is_sym("y"))
    throw Error(ErrorCode::wrong_shape, "expected an equation y = f(x)");
  Comprehension c;
  Expr xy = op("tuple", {sym("x"), sym("y")});
  c.clauses.push_back(Clause::gen(xy, sym("R2")));
  c.clauses.push_back(Clause::filter(eq));
  c.result = xy;
  return c;
}

// ---------------------------------------------------------------------------
// Trace rendering

inline TreeNode trace_tree(const TraceNode& t) {
  TreeNode n;
  if (t.var.empty()) n.label = "•";
  else n.label = t.var + "=" + to_ascii(*t.value);
  if (t.result) n.label += " → " + to_ascii(*t.result);
  if (t.pruned) n.label += t.pruned_reason == "filter" ? " ✗" : " —";
  for (const auto& c : t.children) n.children.push_back(trace_tree(c));
  return n;
}

/// The trace as a table, one row per leaf. A node's cells appear only on
/// the first row below it. With `annotated`, each range generator after
/// the first also gets columns for its non-trivial endpoints and the
/// enumerated set.
inline std::string trace_table(const Comprehension& c, const Evaluation& ev, bool annotated = false) {
  enum class Col { value, endpoint_lo, endpoint_hi, set, result };
  struct Column {
    std::string header;
    std::size_t level;  // index into the current root-to-leaf path
    Col kind;
  };
  std::vector<Column> cols;
  std::size_t level = 1;
  for (const auto& cl : c.clauses) {
    if (cl.kind != Clause::Kind::gen) continue;
    if (annotated && level > 1 && cl.source.is_op("range")) {
      if (!cl.source.arg(0).is_sym() && !cl.source.arg(0).is_num())
        cols.push_back({to_ascii(cl.source.arg(0)), level - 1, Col::endpoint_lo});
      if (!cl.source.arg(1).is_sym() && !cl.source.arg(1).is_num())
        cols.push_back({to_ascii(cl.source.arg(1)), level - 1, Col::endpoint_hi});
      cols.push_back({to_ascii(cl.source), level - 1, Col::set});
    }
    cols.push_back({to_ascii(cl.pattern), level, Col::value});
    ++level;
  }
  cols.push_back({to_ascii(c.result), 0, Col::result});

  std::vector<std::vector<std::string>> rows;
  std::vector<const TraceNode*> path;
  auto annotation = [](const TraceNode& n, const char* key) {
    auto it = n.annotations.find(key);
    return it == n.annotations.end() ? std::string() : to_ascii(it->second);
  };
  auto first_below = [&](std::size_t lv) {
    for (std::size_t k = lv + 1; k < path.size(); ++k)
      if (&path[k - 1]->children.front() != path[k]) return false;
    return true;
  };
  std::function<void(const TraceNode&)> walk = [&](const TraceNode& t) {
    path.push_back(&t);
    if (t.result || t.children.empty()) {
      std::vector<std::string> row;
      for (const auto& col : cols) {
        std::string text;
        if (col.kind == Col::result) {
          if (t.result) text = to_ascii(*t.result);
        } else if (col.level < path.size()) {
          const TraceNode& n = *path[col.level];
          if (first_below(col.level)) {
            switch (col.kind) {
              case Col::value: text = to_ascii(*n.value); break;
              case Col::endpoint_lo: text = annotation(n, "lo"); break;
              case Col::endpoint_hi: text = annotation(n, "hi"); break;
              case Col::set: text = annotation(n, "set"); break;
              case Col::result: break;
            }
          }
        } else if (col.kind == Col::value && col.level == path.size()) {
          text = "—";
        }
        row.push_back(std::move(text));
      }
      rows.push_back(std::move(row));
    }
    for (const auto& ch : t.children) walk(ch);
    path.pop_back();
  };
  walk(ev.tree);

  std::vector<std::size_t> width(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) width[i] = text_width(cols[i].header);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], text_width(r[i]));
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) {
      s += r[i];
      if (i + 1 < r.size()) s += std::string(width[i] - text_width(r[i]) + 2, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::vector<std::string> header;
  for (const auto& col : cols) header.push_back(col.header);
  std::string out = line(header);
  for (const auto& r : rows) out += line(r);
  return out;
}

/// LaTeX for the unified form; with `annotate`, underbraces name the
/// generators, filters and result expression.
inline std::string comprehension_latex(const Comprehension& c, bool annotate, const Context& ctx = Context::standard()) {
  std::string out = "\\{";
  for (std::size_t i = 0; i < c.clauses.size(); ++i) {
    const auto& cl = c.clauses[i];
    std::string part = cl.kind == Clause::Kind::gen ? to_latex(op("in", {cl.pattern, cl.source}), {}, ctx)
                                                    : to_latex(cl.cond, {}, ctx);
    if (annotate) part = "\\underbrace{" + part + "}_{\\text{" + (cl.kind == Clause::Kind::gen ? "gen" : "filt") + "}}";
    out += part + "; ";
  }
  std::string r = to_latex(c.result, {}, ctx);
  if (annotate) r = "\\underbrace{" + r + "}_{\\text{expr}}";
  return out + r + "\\}";
}

}  // namespace mex
