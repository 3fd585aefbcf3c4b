#pragma once

#include "mex/error.hpp"
#include "mex/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mex {

/// Immutable expression tree with shared structure.
///
/// Every node is one of: an exact rational number, a symbol, an application
/// `head(args...)`, a registered-operator node `op(args...)`, a lambda
/// abstraction, a hole `?` (optionally labeled), or a quoted ("noun") node that
/// shields its inner expression from simplification. Copying an Expr copies a
/// pointer; no operation mutates a node after construction.
class Expr {
 public:
  enum class Kind : std::uint8_t { num, sym, app, op, lambda, hole, quoted };

  Expr();

  static Expr number(Rational value);
  static Expr integer(long long value) { return number(Rational(value)); }
  static Expr symbol(std::string name);
  static Expr apply(Expr head, std::vector<Expr> args);
  static Expr op(std::string name, std::vector<Expr> args);
  /// Throws if two parameters share a name.
  static Expr lambda(std::vector<std::string> params, Expr body);
  static Expr hole(std::optional<int> label = std::nullopt);
  static Expr quote(Expr inner);

  Kind kind() const noexcept;
  bool is_num() const noexcept { return kind() == Kind::num; }
  bool is_sym() const noexcept { return kind() == Kind::sym; }
  bool is_app() const noexcept { return kind() == Kind::app; }
  bool is_op() const noexcept { return kind() == Kind::op; }
  bool is_lambda() const noexcept { return kind() == Kind::lambda; }
  bool is_hole() const noexcept { return kind() == Kind::hole; }
  bool is_quoted() const noexcept { return kind() == Kind::quoted; }

  bool is_op(std::string_view name) const noexcept;
  bool is_sym(std::string_view name) const noexcept;
  bool is_num(const Rational& v) const;
  bool is_integer_num() const;

  const Rational& value() const;
  /// Symbol name or operator name.
  const std::string& name() const;
  const Expr& head() const;
  /// Arguments of an App or Op node.
  std::span<const Expr> args() const;
  const Expr& arg(std::size_t i) const { return args()[i]; }
  std::size_t arity() const { return args().size(); }
  const std::vector<std::string>& params() const;
  const Expr& body() const;
  const Expr& inner() const;
  std::optional<int> label() const;

  std::size_t hash() const noexcept;
  bool same_node(const Expr& other) const noexcept { return node_ == other.node_; }

  /// Same node kind and payload, with the children replaced (App: head then args).
  Expr with_children(std::vector<Expr> children) const;
  /// All direct sub-expressions: App head then args, Op args, Lambda body, Quoted inner.
  std::vector<Expr> children() const;

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  const Node& node() const noexcept { return *node_; }

  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Kind kind = Kind::num;
  Rational value;
  std::string name;
  // App: head followed by args. Op: args. Lambda: body. Quoted: inner.
  std::vector<Expr> children;
  std::vector<std::string> params;
  std::optional<int> label;
  std::size_t hash = 0;
};

namespace detail {

inline std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

inline std::size_t hash_rational(const Rational& r) {
  return hash_combine(std::hash<std::string>{}(numerator(r).str()), std::hash<std::string>{}(denominator(r).str()));
}

}  // namespace detail

inline Expr::Expr() : Expr(number(Rational(0))) {}

inline Expr Expr::number(Rational value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::num;
  n->hash = detail::hash_combine(1, detail::hash_rational(value));
  n->value = std::move(value);
  return Expr(std::move(n));
}

inline Expr Expr::symbol(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::sym;
  n->hash = detail::hash_combine(2, std::hash<std::string>{}(name));
  n->name = std::move(name);
  return Expr(std::move(n));
}

inline Expr Expr::apply(Expr head, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::app;
  std::size_t h = detail::hash_combine(3, head.hash());
  for (const auto& a : args) h = detail::hash_combine(h, a.hash());
  n->hash = h;
  n->children.reserve(args.size() + 1);
  n->children.push_back(std::move(head));
  for (auto& a : args) n->children.push_back(std::move(a));
  return Expr(std::move(n));
}

inline Expr Expr::op(std::string name, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::op;
  std::size_t h = detail::hash_combine(4, std::hash<std::string>{}(name));
  for (const auto& a : args) h = detail::hash_combine(h, a.hash());
  n->hash = h;
  n->name = std::move(name);
  n->children = std::move(args);
  return Expr(std::move(n));
}

inline Expr Expr::lambda(std::vector<std::string> params, Expr body) {
  std::set<std::string> seen;
  for (const auto& p : params)
    if (!seen.insert(p).second) throw Error(ErrorCode::malformed_binding, "duplicate lambda parameter '" + p + "'");
  auto n = std::make_shared<Node>();
  n->kind = Kind::lambda;
  std::size_t h = 5;
  for (const auto& p : params) h = detail::hash_combine(h, std::hash<std::string>{}(p));
  n->hash = detail::hash_combine(h, body.hash());
  n->params = std::move(params);
  n->children.push_back(std::move(body));
  return Expr(std::move(n));
}

inline Expr Expr::hole(std::optional<int> label) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::hole;
  n->hash = detail::hash_combine(6, label ? static_cast<std::size_t>(*label) + 1 : 0);
  n->label = label;
  return Expr(std::move(n));
}

inline Expr Expr::quote(Expr inner) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::quoted;
  n->hash = detail::hash_combine(7, inner.hash());
  n->children.push_back(std::move(inner));
  return Expr(std::move(n));
}

inline Expr::Kind Expr::kind() const noexcept { return node().kind; }
inline bool Expr::is_op(std::string_view name) const noexcept { return is_op() && node().name == name; }
inline bool Expr::is_sym(std::string_view name) const noexcept { return is_sym() && node().name == name; }
inline bool Expr::is_num(const Rational& v) const { return is_num() && node().value == v; }
inline bool Expr::is_integer_num() const { return is_num() && mex::is_integer(node().value); }
inline const Rational& Expr::value() const { return node().value; }
inline const std::string& Expr::name() const { return node().name; }
inline const Expr& Expr::head() const { return node().children.front(); }

inline std::span<const Expr> Expr::args() const {
  const auto& c = node().children;
  if (kind() == Kind::app) return std::span<const Expr>(c).subspan(1);
  if (kind() == Kind::op) return std::span<const Expr>(c);
  return {};
}

inline const std::vector<std::string>& Expr::params() const { return node().params; }
inline const Expr& Expr::body() const { return node().children.front(); }
inline const Expr& Expr::inner() const { return node().children.front(); }
inline std::optional<int> Expr::label() const { return node().label; }
inline std::size_t Expr::hash() const noexcept { return node().hash; }

inline std::vector<Expr> Expr::children() const {
  switch (kind()) {
    case Kind::app:
    case Kind::op:
    case Kind::lambda:
    case Kind::quoted: return node().children;
    default: return {};
  }
}

inline Expr Expr::with_children(std::vector<Expr> children) const {
  switch (kind()) {
    case Kind::app: {
      Expr h = children.front();
      children.erase(children.begin());
      return apply(std::move(h), std::move(children));
    }
    case Kind::op: return op(name(), std::move(children));
    case Kind::lambda: return lambda(params(), std::move(children.front()));
    case Kind::quoted: return quote(std::move(children.front()));
    default: return *this;
  }
}

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = a.node();
  const auto& y = b.node();
  if (x.kind != y.kind || x.hash != y.hash) return false;
  switch (x.kind) {
    case Expr::Kind::num: return x.value == y.value;
    case Expr::Kind::sym: return x.name == y.name;
    case Expr::Kind::hole: return x.label == y.label;
    case Expr::Kind::op:
      if (x.name != y.name) return false;
      break;
    case Expr::Kind::lambda:
      if (x.params != y.params) return false;
      break;
    default: break;
  }
  if (x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i)
    if (!(x.children[i] == y.children[i])) return false;
  return true;
}

/// Total order on expressions: by kind, then payload, then children.
inline int compare(const Expr& a, const Expr& b) {
  if (a.same_node(b)) return 0;
  if (a.kind() != b.kind()) return static_cast<int>(a.kind()) < static_cast<int>(b.kind()) ? -1 : 1;
  auto cmp_str = [](const std::string& s, const std::string& t) { return s < t ? -1 : (t < s ? 1 : 0); };
  switch (a.kind()) {
    case Expr::Kind::num:
      if (a.value() < b.value()) return -1;
      return b.value() < a.value() ? 1 : 0;
    case Expr::Kind::sym: return cmp_str(a.name(), b.name());
    case Expr::Kind::hole: {
      int la = a.label().value_or(-1), lb = b.label().value_or(-1);
      return la < lb ? -1 : (lb < la ? 1 : 0);
    }
    case Expr::Kind::op:
      if (int c = cmp_str(a.name(), b.name())) return c;
      break;
    case Expr::Kind::lambda:
      if (a.params() != b.params()) return a.params() < b.params() ? -1 : 1;
      break;
    default: break;
  }
  auto ca = a.children(), cb = b.children();
  for (std::size_t i = 0; i < ca.size() && i < cb.size(); ++i)
    if (int c = compare(ca[i], cb[i])) return c;
  if (ca.size() != cb.size()) return ca.size() < cb.size() ? -1 : 1;
  return 0;
}

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

struct ExprHash {
  std::size_t operator()(const Expr& e) const noexcept { return e.hash(); }
};

inline bool expr_equal(const Expr& a, const Expr& b) { return a == b; }

// Convenience constructors.
inline Expr num(long long v) { return Expr::integer(v); }
inline Expr num(Rational v) { return Expr::number(std::move(v)); }
inline Expr sym(std::string name) { return Expr::symbol(std::move(name)); }
inline Expr call(std::string head, std::vector<Expr> args) { return Expr::apply(sym(std::move(head)), std::move(args)); }
inline Expr op(std::string name, std::vector<Expr> args) { return Expr::op(std::move(name), std::move(args)); }

/// Lazy operators carry a trailing '.' after the active operator's name.
inline bool is_lazy_name(std::string_view name) { return name.size() > 1 && name.back() == '.'; }
inline std::string active_name(std::string_view name) {
  return std::string(is_lazy_name(name) ? name.substr(0, name.size() - 1) : name);
}
inline bool is_lazy(const Expr& e) { return e.is_op() && is_lazy_name(e.name()); }

namespace detail {

inline void collect_free(const Expr& e, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::sym:
      if (!bound.contains(e.name())) out.insert(e.name());
      return;
    case Expr::Kind::lambda: {
      std::vector<std::string> added;
      for (const auto& p : e.params())
        if (bound.insert(p).second) added.push_back(p);
      collect_free(e.body(), bound, out);
      for (const auto& p : added) bound.erase(p);
      return;
    }
    default:
      for (const auto& c : e.children()) collect_free(c, bound, out);
  }
}

inline void collect_symbols(const Expr& e, std::set<std::string>& out) {
  if (e.is_sym()) out.insert(e.name());
  if (e.is_lambda()) out.insert(e.params().begin(), e.params().end());
  for (const auto& c : e.children()) collect_symbols(c, out);
}

}  // namespace detail

/// Symbols not bound by an enclosing lambda.
inline std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> bound, out;
  detail::collect_free(e, bound, out);
  return out;
}

/// Every symbol name occurring anywhere, bound or free, including lambda parameters.
inline std::set<std::string> all_symbols(const Expr& e) {
  std::set<std::string> out;
  detail::collect_symbols(e, out);
  return out;
}

inline bool occurs_free(const Expr& e, const std::string& name) { return free_variables(e).contains(name); }

/// Number of nodes.
inline std::size_t tree_size(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.children()) n += tree_size(c);
  return n;
}

/// Bottom-up rebuild; `f` sees each node after its children have been rewritten.
template <typename F>
Expr transform_bottom_up(const Expr& e, F&& f) {
  auto kids = e.children();
  if (kids.empty()) return f(e);
  bool changed = false;
  for (auto& k : kids) {
    Expr nk = transform_bottom_up(k, f);
    if (!nk.same_node(k)) changed = true;
    k = std::move(nk);
  }
  return f(changed ? e.with_children(std::move(kids)) : e);
}

}  // namespace mex

template <>
struct std::hash<mex::Expr> {
  std::size_t operator()(const mex::Expr& e) const noexcept { return e.hash(); }
};
