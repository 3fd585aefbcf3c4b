#pragma once

#include "mex/expr.hpp"
#include "mex/registry.hpp"

#include <map>
#include <string>
#include <vector>

namespace mex {

/// A user function introduced by `define(g(x), body)`.
struct FunctionDef {
  std::vector<std::string> params;
  Expr body;
};

/// Everything the engine consults besides the expression itself: the
/// operator table, user function definitions, and opaque function heads.
///
/// A Context is a plain value. Readers may share one; writers work on their
/// own copy (the service keeps one per session).
class Context {
 public:
  OperatorRegistry operators = OperatorRegistry::standard();
  std::map<std::string, FunctionDef> functions;
  std::map<std::string, int> opaque;  // head -> arity

  /// Opaque heads are never expanded by differentiation; f' f'' ... inherit
  /// opacity from f.
  bool is_opaque(std::string_view head) const {
    while (!head.empty() && head.back() == '\'') head.remove_suffix(1);
    return opaque.contains(std::string(head));
  }

  void declare_opaque(const std::string& head, int arity = 1) { opaque[head] = arity; }

  const FunctionDef* function(const std::string& name) const {
    auto it = functions.find(name);
    return it == functions.end() ? nullptr : &it->second;
  }

  static const Context& standard() {
    static const Context ctx;
    return ctx;
  }
};

}  // namespace mex
