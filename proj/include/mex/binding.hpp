#pragma once

#include "mex/error.hpp"
#include "mex/expr.hpp"

#include <set>
#include <string>
#include <vector>

namespace mex {

/// One `lhs := rhs` entry. The left side is either a symbol or a function
/// pattern `head(p1, ..., pk)` with distinct parameter symbols.
struct Binding {
  std::string head;
  std::vector<std::string> params;
  bool function_pattern = false;
  Expr rhs;

  Expr lhs() const {
    if (!function_pattern) return sym(head);
    std::vector<Expr> ps;
    for (const auto& p : params) ps.push_back(sym(p));
    return Expr::apply(sym(head), std::move(ps));
  }

  /// `head := lambda(params, rhs)` for function patterns, `head := rhs` otherwise.
  Expr value() const { return function_pattern ? Expr::lambda(params, rhs) : rhs; }

  Expr to_expr() const { return op(":=", {lhs(), rhs}); }

  bool operator==(const Binding&) const = default;
};

/// Ordered binding list. Heads are pairwise distinct.
struct Substitution {
  std::vector<Binding> bindings;

  bool empty() const { return bindings.empty(); }
  std::size_t size() const { return bindings.size(); }

  const Binding* find(const std::string& head) const {
    for (const auto& b : bindings)
      if (b.head == head) return &b;
    return nullptr;
  }

  /// `[lhs := rhs, ...]` as a list node.
  Expr to_expr() const {
    std::vector<Expr> items;
    for (const auto& b : bindings) items.push_back(b.to_expr());
    return op("list", std::move(items));
  }

  bool operator==(const Substitution&) const = default;
};

/// Interprets `lhs` as a binding left side; nullopt if it is not a symbol or
/// a simple function pattern.
inline std::optional<Binding> binding_lhs(const Expr& lhs) {
  Binding b;
  if (lhs.is_sym()) {
    b.head = lhs.name();
    return b;
  }
  if (lhs.is_app() && lhs.head().is_sym()) {
    std::set<std::string> seen;
    b.head = lhs.head().name();
    b.function_pattern = true;
    for (const auto& a : lhs.args()) {
      if (!a.is_sym() || !seen.insert(a.name()).second) return std::nullopt;
      b.params.push_back(a.name());
    }
    return b;
  }
  return std::nullopt;
}

/// Builds a Substitution from a list of `:=` (or `=`) nodes; nested lists are
/// flattened so solver output `[[a = -3, b = 5]]` is accepted.
inline Substitution substitution_from_expr(const Expr& e) {
  Substitution s;
  std::set<std::string> heads;
  auto add = [&](const Expr& item, auto& self) -> void {
    if (item.is_op("list")) {
      for (const auto& x : item.args()) self(x, self);
      return;
    }
    if (!(item.is_op(":=") || item.is_op("=")) || item.arity() != 2)
      throw Error(ErrorCode::malformed_binding, "substitution entries must have the form lhs := rhs");
    auto b = binding_lhs(item.arg(0));
    if (!b)
      throw Error(ErrorCode::malformed_binding,
                  "binding left side must be a symbol or a function pattern h(v1, ..., vk)");
    if (!heads.insert(b->head).second)
      throw Error(ErrorCode::malformed_binding, "duplicate binding for '" + b->head + "'");
    b->rhs = item.arg(1);
    s.bindings.push_back(std::move(*b));
  };
  add(e, add);
  return s;
}

}  // namespace mex
