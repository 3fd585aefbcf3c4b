#pragma once

#include "mex/error.hpp"
#include "mex/expr.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mex {

enum class Fixity { infix, prefix, postfix, nary, matchfix, function };
enum class Assoc { left, right, none };

inline const char* fixity_name(Fixity f) {
  switch (f) {
    case Fixity::infix: return "infix";
    case Fixity::prefix: return "prefix";
    case Fixity::postfix: return "postfix";
    case Fixity::nary: return "nary";
    case Fixity::matchfix: return "matchfix";
    case Fixity::function: return "function";
  }
  return "?";
}

/// Registry entry: how an operator parses, prints and simplifies.
struct OperatorDef {
  std::string name;
  Fixity fixity = Fixity::infix;
  int precedence = 0;
  bool lazy = false;
  std::string ascii;  // surface token; empty means "same as name"
  std::string latex;  // LaTeX token; empty means "same as ascii"
  Assoc assoc = Assoc::left;
  int arity = -1;  // fixed arity for function fixity, -1 = any (matchfix)

  const std::string& token() const { return ascii.empty() ? name : ascii; }
  const std::string& latex_token() const { return latex.empty() ? token() : latex; }

  bool operator==(const OperatorDef&) const = default;
};

inline bool is_identifier_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_identifier_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline bool is_identifier_token(std::string_view s) {
  if (s.empty() || !is_identifier_start(s[0])) return false;
  for (char c : s)
    if (!is_identifier_char(c)) return false;
  return true;
}

/// Operator table shared by the parser, simplifier and renderers.
///
/// Built once (standard()) plus explicit user registrations. Lookup is by
/// operator name and by surface token per fixity.
class OperatorRegistry {
 public:
  /// Registers `def`. An identical redefinition is a no-op; any other clash
  /// is a registry error. A name ending in '.' declares the lazy variant of
  /// the operator without the dot, which must already exist.
  void register_operator(OperatorDef def) {
    if (def.name.empty()) throw Error(ErrorCode::registry, "operator name must not be empty");
    if (is_lazy_name(def.name)) {
      auto base = active_name(def.name);
      if (!by_name_.contains(base))
        throw Error(ErrorCode::registry, "lazy operator '" + def.name + "' requires '" + base + "' to be registered");
      def.lazy = true;
    } else if (def.lazy) {
      throw Error(ErrorCode::registry, "lazy operator names must end with '.': " + def.name);
    }
    if (auto it = by_name_.find(def.name); it != by_name_.end()) {
      if (defs_[it->second] == def) return;
      throw Error(ErrorCode::registry, "conflicting redefinition of operator '" + def.name + "'");
    }
    auto& table = token_table(def.fixity);
    if (table.contains(def.token()) && def.fixity != Fixity::matchfix && def.fixity != Fixity::function)
      throw Error(ErrorCode::registry, "token '" + def.token() + "' already used by another " +
                                           fixity_name(def.fixity) + " operator");
    std::size_t index = defs_.size();
    by_name_[def.name] = index;
    if (def.fixity != Fixity::matchfix) table[def.token()] = index;
    defs_.push_back(std::move(def));
  }

  /// Registers "X." copying fixity, precedence and display of "X".
  void register_lazy_variant(const std::string& active) {
    const OperatorDef* base = find(active);
    if (!base) throw Error(ErrorCode::registry, "no operator '" + active + "' to derive a lazy variant from");
    OperatorDef lazy = *base;
    lazy.name = active + ".";
    lazy.ascii = base->token() + ".";
    lazy.latex = base->latex_token();
    lazy.lazy = true;
    register_operator(std::move(lazy));
  }

  const OperatorDef* find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : &defs_[it->second];
  }
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  const OperatorDef* find_infix(std::string_view token) const { return lookup(infix_, token); }
  const OperatorDef* find_prefix(std::string_view token) const { return lookup(prefix_, token); }
  const OperatorDef* find_postfix(std::string_view token) const { return lookup(postfix_, token); }
  const OperatorDef* find_function(std::string_view token) const { return lookup(function_, token); }

  /// Registration order, used to break precedence ties in error messages.
  std::size_t order(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? defs_.size() : it->second;
  }

  /// Non-identifier operator tokens, longest first, for the lexer.
  std::vector<std::string> symbolic_tokens() const {
    std::vector<std::string> out;
    for (const auto& d : defs_)
      if (d.fixity != Fixity::matchfix && d.fixity != Fixity::function && !is_identifier_token(d.token()))
        out.push_back(d.token());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() > b.size() : a < b;
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  const std::vector<OperatorDef>& all() const { return defs_; }

  /// Checks operator names and arities throughout `e`.
  void validate(const Expr& e) const {
    if (e.is_op()) {
      const OperatorDef* d = find(e.name());
      if (!d) throw Error(ErrorCode::unknown_operator, "unknown operator '" + e.name() + "'");
      std::size_t n = e.arity();
      bool ok = true;
      switch (d->fixity) {
        case Fixity::infix: ok = n == 2; break;
        case Fixity::nary: ok = n >= 2; break;
        case Fixity::prefix:
        case Fixity::postfix: ok = n == 1; break;
        case Fixity::function: ok = d->arity < 0 || n == static_cast<std::size_t>(d->arity); break;
        case Fixity::matchfix: ok = d->arity < 0 || n == static_cast<std::size_t>(d->arity); break;
      }
      if (!ok)
        throw Error(ErrorCode::unknown_operator,
                    "operator '" + e.name() + "' does not take " + std::to_string(n) + " argument(s)");
    }
    for (const auto& c : e.children()) validate(c);
  }

  static OperatorRegistry standard();

 private:
  using Table = std::map<std::string, std::size_t, std::less<>>;

  Table& token_table(Fixity f) {
    switch (f) {
      case Fixity::prefix: return prefix_;
      case Fixity::postfix: return postfix_;
      case Fixity::function: return function_;
      case Fixity::matchfix: return matchfix_;
      default: return infix_;
    }
  }
  const OperatorDef* lookup(const Table& t, std::string_view token) const {
    auto it = t.find(token);
    return it == t.end() ? nullptr : &defs_[it->second];
  }

  std::vector<OperatorDef> defs_;
  std::map<std::string, std::size_t> by_name_;
  Table infix_, prefix_, postfix_, function_, matchfix_;
};

namespace prec {
inline constexpr int bind = 10;
inline constexpr int subst = 15;
inline constexpr int equation = 20;
inline constexpr int logical_or = 25;
inline constexpr int logical_and = 27;
inline constexpr int logical_not = 28;
inline constexpr int member = 30;
inline constexpr int compare = 35;
inline constexpr int sum = 40;
inline constexpr int negation = 45;
inline constexpr int product = 50;
inline constexpr int juxtapose = 55;
inline constexpr int power = 60;
inline constexpr int postfix = 70;
inline constexpr int atom = 100;
}  // namespace prec

inline OperatorRegistry OperatorRegistry::standard() {
  OperatorRegistry r;
  auto add = [&](std::string name, Fixity fx, int p, std::string ascii, std::string latex, Assoc a = Assoc::left,
                 int arity = -1) {
    r.register_operator(OperatorDef{std::move(name), fx, p, false, std::move(ascii), std::move(latex), a, arity});
  };
  add(":=", Fixity::infix, prec::bind, ":=", ":=", Assoc::none);
  add("_s_", Fixity::infix, prec::subst, "_s_", "");
  add("_ss_", Fixity::infix, prec::subst, "_ss_", "");
  add("_sss_", Fixity::infix, prec::subst, "_sss_", "");
  add("_ssu_", Fixity::infix, prec::subst, "_ssu_", "");
  add("=", Fixity::infix, prec::equation, "=", "=");
  add("or", Fixity::nary, prec::logical_or, "or", "\\lor");
  add("and", Fixity::nary, prec::logical_and, "and", "\\land");
  add("not", Fixity::prefix, prec::logical_not, "not", "\\lnot");
  add("in", Fixity::infix, prec::member, "in", "\\in", Assoc::none);
  add("<", Fixity::infix, prec::compare, "<", "<", Assoc::none);
  add(">", Fixity::infix, prec::compare, ">", ">", Assoc::none);
  add("<=", Fixity::infix, prec::compare, "<=", "\\le", Assoc::none);
  add(">=", Fixity::infix, prec::compare, ">=", "\\ge", Assoc::none);
  add("+", Fixity::nary, prec::sum, "+", "+");
  add("-", Fixity::infix, prec::sum, "-", "-");
  add("neg", Fixity::prefix, prec::negation, "-", "-");
  add("*", Fixity::nary, prec::product, "*", "\\cdot");
  add("/", Fixity::infix, prec::product, "/", "/");
  add("^", Fixity::infix, prec::power, "^", "^", Assoc::right);
  add("prime", Fixity::postfix, prec::postfix, "'", "'");
  add("diff", Fixity::function, prec::atom, "diff", "", Assoc::left, 2);
  for (const char* a : {"+", "-", "neg", "*", "/", "^"}) r.register_lazy_variant(a);
  // Structural and presentation nodes; the parser handles their surface forms directly.
  for (const char* m : {"list", "set", "tuple", "compre", "setof", "unified", "V", "row", "underbrace"})
    add(m, Fixity::matchfix, prec::atom, m, "");
  r.register_operator(OperatorDef{"range", Fixity::matchfix, prec::atom, false, "range", "", Assoc::left, 2});
  r.register_operator(OperatorDef{"index", Fixity::matchfix, prec::postfix, false, "index", "", Assoc::left, 2});
  return r;
}

}  // namespace mex
