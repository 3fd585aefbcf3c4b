#pragma once
// Statement evaluator behind the REPL: `name : expr`, function definitions,
// `;` and `$` terminators, `%` for the previous result, and a few commands
// (solve, subst, psubst, define, diff, V, lisptree, part, substpart, mkholes).

#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/parser.hpp"
#include "mex/paths.hpp"
#include "mex/render.hpp"
#include "mex/rules.hpp"
#include "mex/simplify.hpp"
#include "mex/subst.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mex {

struct Statement {
  std::string text;  // without the terminator
  bool show = true;  // `;` shows, `$` hides
};

/// Splits on `;` and `$` outside brackets. A trailing unterminated
/// statement is shown.
inline std::vector<Statement> split_statements(std::string_view src) {
  std::vector<Statement> out;
  std::string cur;
  int depth = 0;
  auto flush = [&](bool show) {
    std::string t = cur;
    cur.clear();
    std::size_t a = t.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return;
    t = t.substr(a, t.find_last_not_of(" \t\r\n") - a + 1);
    out.push_back({t, show});
  };
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    // comments
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      auto end = src.find("*/", i + 2);
      i = end == std::string_view::npos ? src.size() : end + 1;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (depth == 0 && (c == ';' || c == '$')) {
      flush(c == ';');
      continue;
    }
    cur += c;
  }
  flush(true);
  return out;
}

struct EvalOutput {
  std::optional<std::string> name;  // set by `name : expr`
  Expr value;
  std::string text;  // preformatted output (trees); empty means render `value`
  bool show = true;

  std::string display(const RenderOptions& opts = {}, const Context& ctx = Context::standard()) const {
    return text.empty() ? to_ascii(value, opts, ctx) : text;
  }
};

class Evaluator {
 public:
  Evaluator() = default;
  explicit Evaluator(Context ctx) : ctx_(std::move(ctx)) {}

  const Context& context() const { return ctx_; }
  Context& context() { return ctx_; }
  const std::map<std::string, Expr>& variables() const { return vars_; }

  void set(const std::string& name, Expr value) { vars_[name] = std::move(value); }

  /// Runs every statement in `src`, in order.
  std::vector<EvalOutput> run(std::string_view src) {
    std::vector<EvalOutput> out;
    for (const auto& s : split_statements(src)) out.push_back(run_statement(s));
    return out;
  }

  EvalOutput run_statement(const Statement& s) {
    EvalOutput out;
    out.show = s.show;
    std::string body = s.text;
    if (auto n = assignment_target(body)) {
      out.name = n->first;
      body = n->second;
    }
    Expr e = parse(body, ctx_);
    if (e.is_op(":=") && e.arity() == 2 && e.arg(0).is_app()) {
      // f(x) := body defines without evaluating the body
      define_function(ctx_, e.arg(0), e.arg(1));
      out.value = e;
    } else if (is_command(e, "lisptree")) {
      out.value = eval(e.arg(0));
      out.text = ascii_tree(out.value, TreeLayout::children_right, {}, ctx_);
    } else {
      out.value = eval(e);
    }
    if (out.name) vars_[*out.name] = out.value;
    vars_["%"] = out.value;
    return out;
  }

  /// Session variables substituted, commands run, then simplified.
  Expr eval(const Expr& e) {
    Expr x = replace_free_symbols(e, vars_);
    return run_commands(x);
  }

 private:
  static std::optional<std::pair<std::string, std::string>> assignment_target(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    if (i >= s.size() || !(std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) return std::nullopt;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    std::string name = s.substr(start, i - start);
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size() || s[i] != ':' || (i + 1 < s.size() && s[i + 1] == '=')) return std::nullopt;
    return std::make_pair(name, s.substr(i + 1));
  }

  // The elements of a list, or the expression itself.
  static std::vector<Expr> items(const Expr& e) {
    if (e.is_op("list")) return {e.args().begin(), e.args().end()};
    return {e};
  }

  static bool is_command(const Expr& e, const char* name) { return e.is_app() && e.head().is_sym(name); }

  static bool has_command(const Expr& e) {
    static const std::set<std::string> names{"solve", "subst", "psubst", "define", "V", "part", "substpart", "mkholes", "lisptree"};
    if (e.is_app() && e.head().is_sym() && names.contains(e.head().name())) return true;
    if (e.is_op("_s_") || e.is_op("_ss_") || e.is_op("_sss_") || e.is_op("_ssu_")) return true;
    for (const auto& c : e.children())
      if (has_command(c)) return true;
    return false;
  }

  Expr simp(const Expr& e) const { return simplify(e, {}, ctx_); }

  void arity(const Expr& e, std::size_t n) const {
    if (e.arity() != n)
      throw Error(ErrorCode::usage, e.head().name() + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
  }

  static std::vector<std::string> unknowns(const Expr& list) {
    std::vector<std::string> out;
    for (const auto& u : items(list)) {
      if (!u.is_sym()) throw Error(ErrorCode::usage, "solve: unknowns must be symbols");
      out.push_back(u.name());
    }
    return out;
  }

  static Path path_from_expr(const Expr& e) {
    Path p;
    for (const auto& k : items(e)) {
      if (!k.is_integer_num()) throw Error(ErrorCode::usage, "paths are lists of integers");
      p.push_back(static_cast<int>(numerator(k.value())));
    }
    return p;
  }

  Expr run_commands(const Expr& e) {
    if (!has_command(e)) return simp(e);
    if (e.is_op()) {
      const std::string& n = e.name();
      if (n == "_s_" || n == "_ss_" || n == "_sss_" || n == "_ssu_") {
        Expr target = run_commands(e.arg(0));
        Substitution s = substitution_from_expr(run_commands(e.arg(1)));
        auto form = *subst_form_from_string(n.substr(1, n.size() - 2));
        return subst_form(target, s, form, {}, ctx_);
      }
    }
    if (e.is_app() && e.head().is_sym()) {
      const std::string& h = e.head().name();
      if (h == "define") {
        arity(e, 2);
        Expr body = run_commands(e.arg(1));
        define_function(ctx_, e.arg(0), body);
        return op(":=", {e.arg(0), body});
      }
      std::vector<Expr> args;
      for (const auto& a : e.args()) args.push_back(run_commands(a));
      if (h == "solve") {
        arity(e, 2);
        std::vector<Expr> eqs = items(args[0]);
        Substitution s = solve_linear(eqs, unknowns(args[1]), ctx_);
        std::vector<Expr> eq_items;
        for (const auto& b : s.bindings) eq_items.push_back(op("=", {b.lhs(), b.rhs}));
        return op("list", {op("list", std::move(eq_items))});
      }
      if (h == "subst" || h == "psubst") {
        arity(e, 2);
        Substitution s = substitution_from_expr(args[0]);
        if (h == "psubst") return apply_subst(args[1], s, {}, ctx_).output;
        return simp(apply_sequential(args[1], s));
      }
      if (h == "V") {
        arity(e, 1);
        return v_matrix(substitution_from_expr(args[0]));
      }
      if (h == "part") {
        arity(e, 2);
        return part(args[0], path_from_expr(args[1]));
      }
      if (h == "substpart") {
        arity(e, 3);
        return substpart(args[0], args[1], path_from_expr(args[2]), ctx_);
      }
      if (h == "mkholes") {
        arity(e, 2);
        std::vector<Path> paths;
        for (const auto& p : args[1].args()) paths.push_back(path_from_expr(p));
        return mkholes(args[0], paths, ctx_).statement;
      }
      return simp(Expr::apply(e.head(), std::move(args)));
    }
    auto kids = e.children();
    for (auto& k : kids) k = run_commands(k);
    return simp(e.with_children(std::move(kids)));
  }

  Context ctx_;
  std::map<std::string, Expr> vars_;
};

}  // namespace mex
