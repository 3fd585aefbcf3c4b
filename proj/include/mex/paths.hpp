#pragma once

#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/simplify.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace mex {

/// Child indices from the root; k >= 1 is the k-th argument, 0 the head.
using Path = std::vector<int>;

inline std::string path_to_string(const Path& p, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(p[i]);
  }
  return out;
}

/// "1.2.2" -> {1, 2, 2}; the empty string is the root path.
inline Path parse_path(std::string_view text, char sep = '.') {
  Path p;
  if (text.empty()) return p;
  std::size_t start = 0;
  while (true) {
    auto end = text.find(sep, start);
    auto piece = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (piece.empty() || !std::all_of(piece.begin(), piece.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw Error(ErrorCode::path, "malformed path '" + std::string(text) + "'");
    p.push_back(std::stoi(std::string(piece)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return p;
}

inline bool is_prefix(const Path& a, const Path& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

namespace detail {

// Number of addressable argument positions and whether 0 (head) is valid.
inline std::size_t child_count(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::op:
    case Expr::Kind::app: return e.arity();
    case Expr::Kind::lambda:
    case Expr::Kind::quoted: return 1;
    default: return 0;
  }
}

inline bool has_head(const Expr& e) { return e.is_op() || e.is_app(); }

[[noreturn]] inline void bad_step(const Path& p, std::size_t step, const Expr& at) {
  throw Error(ErrorCode::path, "path [" + path_to_string(p) + "] fails at step " + std::to_string(step + 1) +
                                   " (index " + std::to_string(p[step]) + "): node has " +
                                   std::to_string(child_count(at)) + " children");
}

inline Expr child_at(const Expr& e, int k) {
  if (k == 0) return e.is_op() ? sym(e.name()) : e.head();
  if (e.is_lambda()) return e.body();
  if (e.is_quoted()) return e.inner();
  return e.arg(static_cast<std::size_t>(k - 1));
}

inline bool valid_step(const Expr& e, int k) {
  if (k == 0) return has_head(e);
  return k >= 1 && static_cast<std::size_t>(k) <= child_count(e);
}

inline Expr replace_child(const Expr& e, int k, const Expr& r, const Context& ctx) {
  if (k == 0) {
    std::vector<Expr> args(e.args().begin(), e.args().end());
    if (r.is_sym() && ctx.operators.contains(r.name())) return op(r.name(), std::move(args));
    return Expr::apply(r, std::move(args));
  }
  if (e.is_lambda()) return Expr::lambda(e.params(), r);
  if (e.is_quoted()) return Expr::quote(r);
  std::vector<Expr> args(e.args().begin(), e.args().end());
  args[static_cast<std::size_t>(k - 1)] = r;
  if (e.is_op()) return op(e.name(), std::move(args));
  return Expr::apply(e.head(), std::move(args));
}

}  // namespace detail

inline bool valid_path(const Expr& e, const Path& p) {
  Expr cur = e;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!detail::valid_step(cur, p[i])) return false;
    cur = detail::child_at(cur, p[i]);
  }
  return true;
}

/// The subterm addressed by `p`.
inline Expr part(const Expr& e, const Path& p) {
  Expr cur = e;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!detail::valid_step(cur, p[i])) detail::bad_step(p, i, cur);
    cur = detail::child_at(cur, p[i]);
  }
  return cur;
}

/// Copy of `e` with the subterm at `p` replaced; nothing is simplified.
inline Expr substpart(const Expr& replacement, const Expr& e, const Path& p,
                      const Context& ctx = Context::standard()) {
  std::vector<Expr> spine{e};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!detail::valid_step(spine.back(), p[i])) detail::bad_step(p, i, spine.back());
    spine.push_back(detail::child_at(spine.back(), p[i]));
  }
  Expr cur = replacement;
  for (std::size_t i = p.size(); i-- > 0;) cur = detail::replace_child(spine[i], p[i], cur, ctx);
  return cur;
}

/// Every valid path of `e` in preorder (root first).
inline std::vector<Path> all_paths(const Expr& e) {
  std::vector<Path> out;
  Path cur;
  auto walk = [&](const Expr& x, auto& self) -> void {
    out.push_back(cur);
    if (detail::has_head(x)) {
      cur.push_back(0);
      out.push_back(cur);
      cur.pop_back();
    }
    for (std::size_t k = 1; k <= detail::child_count(x); ++k) {
      cur.push_back(static_cast<int>(k));
      self(detail::child_at(x, static_cast<int>(k)), self);
      cur.pop_back();
    }
  };
  walk(e, walk);
  return out;
}

struct HoleSpec {
  int label = 0;
  Path path;
  bool operator==(const HoleSpec&) const = default;
};

/// A true expression with some subterms replaced by labeled holes.
struct Exercise {
  Expr statement;
  std::vector<HoleSpec> holes;
  Expr source;

  Expr answer(int label) const {
    for (const auto& h : holes)
      if (h.label == label) return part(source, h.path);
    throw Error(ErrorCode::missing_hole, "no hole labeled " + std::to_string(label));
  }
};

namespace detail {

// An ssu presentation stores the substituted expression twice: as the
// braced part and as the left side of the caption equation. Copies the
// (possibly holed) braced part over the second copy so both agree.
inline Expr sync_underbraces(const Expr& stmt, const Expr& src) {
  if (stmt.is_hole() || stmt.kind() != src.kind() || stmt.children().size() != src.children().size()) return stmt;
  auto kids = stmt.children();
  auto src_kids = src.children();
  for (std::size_t i = 0; i < kids.size(); ++i) kids[i] = sync_underbraces(kids[i], src_kids[i]);
  if (src.is_op("underbrace") && src.arity() == 2 && src.arg(1).is_op("=") && src.arg(1).arity() == 2 &&
      src.arg(1).arg(0) == src.arg(0) && kids[1].is_op("=") && kids[1].arity() == 2)
    kids[1] = op("=", {kids[0], kids[1].arg(1)});
  return stmt.with_children(std::move(kids));
}

}  // namespace detail

inline Exercise mkholes(const Expr& e, const std::vector<Path>& paths, const Context& ctx = Context::standard()) {
  for (std::size_t i = 0; i < paths.size(); ++i) {
    part(e, paths[i]);
    for (std::size_t j = 0; j < paths.size(); ++j) {
      if (i != j && is_prefix(paths[i], paths[j]))
        throw Error(ErrorCode::overlap, "hole paths [" + path_to_string(paths[i]) + "] and [" +
                                            path_to_string(paths[j]) + "] overlap");
    }
  }
  Exercise x{e, {}, e};
  int label = 0;
  for (const auto& p : paths) {
    ++label;
    x.statement = substpart(Expr::hole(label), x.statement, p, ctx);
    x.holes.push_back(HoleSpec{label, p});
  }
  x.statement = detail::sync_underbraces(x.statement, x.source);
  return x;
}

namespace detail {

inline bool is_structural(const Expr& e) {
  if (!e.is_op()) return false;
  static const std::set<std::string> names{"=", ":=", "_s_", "_ss_", "_sss_", "_ssu_", "V", "row",
                                           "underbrace", "list", "set", "tuple", "and", "or"};
  return names.contains(e.name());
}

}  // namespace detail

/// Canonical form applied below presentation and equation nodes, so each
/// side of every equation is compared on its own.
inline Expr canonical_parts(const Expr& e, const Context& ctx = Context::standard()) {
  if (detail::is_structural(e)) {
    auto kids = e.children();
    for (auto& k : kids) k = canonical_parts(k, ctx);
    return e.with_children(std::move(kids));
  }
  if (e.is_hole()) return e;
  return canonical(e, ctx);
}

/// Fills holes by label; labels missing from `answers` stay holes.
inline Expr fill_holes(const Exercise& x, const std::map<int, Expr>& answers, const Context& ctx = Context::standard()) {
  Expr out = x.statement;
  for (const auto& h : x.holes) {
    auto it = answers.find(h.label);
    if (it != answers.end()) out = substpart(it->second, out, h.path, ctx);
  }
  return detail::sync_underbraces(out, x.source);
}

struct HoleVerdict {
  int label = 0;
  Path path;
  bool correct = false;
};

struct HoleReport {
  std::vector<HoleVerdict> per_hole;
  bool all_correct = false;
  bool true_instance = false;
};

/// Each proposal is correct iff it is canonically equal to the recorded
/// answer; the global verdict checks the filled statement against the source.
inline HoleReport check_holes(const Exercise& x, const std::map<int, Expr>& proposed,
                              const Context& ctx = Context::standard()) {
  HoleReport r;
  for (const auto& h : x.holes)
    if (!proposed.contains(h.label))
      throw Error(ErrorCode::missing_hole, "no answer proposed for hole " + std::to_string(h.label));
  r.all_correct = true;
  for (const auto& h : x.holes) {
    const Expr& p = proposed.at(h.label);
    bool ok = false;
    try {
      ok = canonically_equal(p, part(x.source, h.path), ctx);
    } catch (const Error&) {
      ok = false;
    }
    r.per_hole.push_back(HoleVerdict{h.label, h.path, ok});
    r.all_correct = r.all_correct && ok;
  }
  try {
    r.true_instance = canonical_parts(fill_holes(x, proposed, ctx), ctx) == canonical_parts(x.source, ctx);
  } catch (const Error&) {
    r.true_instance = false;
  }
  return r;
}

}  // namespace mex
