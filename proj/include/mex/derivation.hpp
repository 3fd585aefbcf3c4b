#pragma once

#include "mex/binding.hpp"
#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/parser.hpp"
#include "mex/paths.hpp"
#include "mex/render.hpp"
#include "mex/rules.hpp"
#include "mex/simplify.hpp"

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mex {

enum class Particle { none, if_, then_, and_ };

inline const char* particle_name(Particle p) {
  switch (p) {
    case Particle::if_: return "if";
    case Particle::then_: return "then";
    case Particle::and_: return "and";
    case Particle::none: return "";
  }
  return "";
}

inline Particle particle_from_string(std::string_view s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "if") return Particle::if_;
  if (t == "then") return Particle::then_;
  if (t == "and") return Particle::and_;
  if (t.empty() || t == "none") return Particle::none;
  throw Error(ErrorCode::malformed_step, "unknown particle '" + std::string(s) + "'");
}

/// `by` asks the checker to find the kind itself (rewrite, then chain, then algebra).
enum class JustKind { assumption, rule, rewrite, chain, simplify, algebra, by };

inline const char* just_kind_name(JustKind k) {
  switch (k) {
    case JustKind::assumption: return "assume";
    case JustKind::rule: return "rule";
    case JustKind::rewrite: return "rewrite";
    case JustKind::chain: return "chain";
    case JustKind::simplify: return "simplify";
    case JustKind::algebra: return "algebra";
    case JustKind::by: return "by";
  }
  return "simplify";
}

inline JustKind just_kind_from_string(std::string_view s) {
  if (s == "assume" || s == "assumption") return JustKind::assumption;
  if (s == "rule") return JustKind::rule;
  if (s == "rewrite") return JustKind::rewrite;
  if (s == "chain") return JustKind::chain;
  if (s == "simplify") return JustKind::simplify;
  if (s == "algebra") return JustKind::algebra;
  if (s == "by") return JustKind::by;
  throw Error(ErrorCode::malformed_step, "unknown justification kind '" + std::string(s) + "'");
}

struct Justification {
  JustKind kind = JustKind::simplify;
  std::string rule;
  Substitution subst;
  std::vector<std::string> refs;
  bool operator==(const Justification&) const = default;
};

struct Step {
  Particle particle = Particle::none;
  std::optional<Expr> lhs;  // absent: continues the previous right side
  std::string label;
  Expr rhs;
  Justification just;
};

/// Record of an expanded step, so viewers can show the collapsed form.
struct Expansion {
  Step original;
  std::vector<std::string> labels;  // the steps that replaced it
};

struct Derivation {
  std::string title;
  bool columns = true;
  std::vector<Step> steps;
  std::vector<Expansion> expansions;
  std::vector<std::string> opaque;  // heads declared opaque while checking
};

enum class StepStatus { verified, failed, unverified_algebra, assumption };

inline const char* step_status_name(StepStatus s) {
  switch (s) {
    case StepStatus::verified: return "verified";
    case StepStatus::failed: return "failed";
    case StepStatus::unverified_algebra: return "unverified-algebra";
    case StepStatus::assumption: return "assumption";
  }
  return "failed";
}

using HighlightPair = std::pair<Path, Path>;

struct StepVerdict {
  std::string label;
  StepStatus status = StepStatus::failed;
  JustKind kind = JustKind::simplify;  // resolved kind for `by`
  std::string message;
  Expr lhs;                                  // effective left side
  std::optional<Expr> instance;              // rule steps: the instantiated schema
  std::vector<HighlightPair> highlight;      // lhs vs rhs

  bool ok() const { return status != StepStatus::failed; }
};

struct DerivationReport {
  std::vector<StepVerdict> steps;
  bool all_ok = false;
  int soft = 0;  // unverified-algebra passes
  std::optional<Expr> conclusion;
};

/// Minimal differing subtree pairs. Descends while both nodes have the same
/// head (lazy and active forms count as the same) and arity.
inline std::vector<HighlightPair> diff_highlight(const Expr& a, const Expr& b) {
  std::vector<HighlightPair> out;
  Path pa;
  auto same_shape = [](const Expr& x, const Expr& y) {
    if (x.kind() != y.kind()) return false;
    switch (x.kind()) {
      case Expr::Kind::op: return active_name(x.name()) == active_name(y.name()) && x.arity() == y.arity();
      case Expr::Kind::app: return x.head() == y.head() && x.arity() == y.arity();
      case Expr::Kind::quoted: return true;
      case Expr::Kind::lambda: return x.params() == y.params();
      default: return false;
    }
  };
  auto walk = [&](const Expr& x, const Expr& y, auto& self) -> void {
    if (x == y || (x.is_op() && y.is_op() && delazify_keep_nouns(x) == delazify_keep_nouns(y))) return;
    if (!same_shape(x, y)) {
      out.emplace_back(pa, pa);
      return;
    }
    std::size_t n = detail::child_count(x);
    for (std::size_t k = 1; k <= n; ++k) {
      pa.push_back(static_cast<int>(k));
      self(detail::child_at(x, static_cast<int>(k)), detail::child_at(y, static_cast<int>(k)), self);
      pa.pop_back();
    }
  };
  walk(a, b, walk);
  return out;
}

namespace detail {

inline std::optional<Expr> try_canonical(const Expr& e, const Context& ctx) {
  try {
    return canonical_parts(e, ctx);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline bool same_canonical(const Expr& a, const Expr& b, const Context& ctx) {
  auto x = try_canonical(a, ctx);
  auto y = try_canonical(b, ctx);
  return x && y && *x == *y;
}

// Results of rewriting `e` with from -> to: each single matching position,
// and all outermost matches at once.
inline std::vector<Expr> rewrites(const Expr& e, const Expr& from, const Expr& to, const Context& ctx) {
  auto target = try_canonical(from, ctx);
  if (!target) return {};
  std::vector<Path> hits;
  for (const auto& p : all_paths(e)) {
    if (!p.empty() && p.back() == 0) continue;
    auto c = try_canonical(part(e, p), ctx);
    if (c && *c == *target) hits.push_back(p);
  }
  std::vector<Expr> out;
  for (const auto& p : hits) out.push_back(substpart(to, e, p, ctx));
  if (hits.size() > 1) {
    std::vector<Path> outer;
    for (const auto& p : hits) {
      bool nested = false;
      for (const auto& q : outer) nested = nested || is_prefix(q, p);
      if (!nested) outer.push_back(p);
    }
    Expr all = e;
    for (const auto& p : outer) all = substpart(to, all, p, ctx);
    out.push_back(all);
  }
  return out;
}

// Union-find over canonical terms.
class EqualityGraph {
 public:
  explicit EqualityGraph(const Context& ctx) : ctx_(ctx) {}

  void add(const Expr& a, const Expr& b) {
    auto x = id(a), y = id(b);
    if (x && y) parent_[find(*x)] = find(*y);
  }

  bool connected(const Expr& a, const Expr& b) {
    auto x = id(a), y = id(b);
    return x && y && find(*x) == find(*y);
  }

  /// Original terms in the same class as `a`.
  std::vector<Expr> component(const Expr& a) {
    std::vector<Expr> out;
    auto x = id(a);
    if (!x) return out;
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (find(i) == find(*x)) out.push_back(terms_[i]);
    return out;
  }

 private:
  std::optional<std::size_t> id(const Expr& e) {
    auto c = try_canonical(e, ctx_);
    if (!c) return std::nullopt;
    auto [it, fresh] = ids_.emplace(*c, terms_.size());
    if (fresh) {
      terms_.push_back(e);
      parent_.push_back(it->second);
    }
    return it->second;
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }

  const Context& ctx_;
  std::map<Expr, std::size_t, ExprLess> ids_;
  std::vector<Expr> terms_;
  std::vector<std::size_t> parent_;
};

inline void collect_subterms(const Expr& e, std::vector<Expr>& out) {
  out.push_back(e);
  for (const auto& c : e.children()) collect_subterms(c, out);
}

inline bool has_uninterpreted_head(const Expr& e, const Context& ctx) {
  if (e.is_app()) {
    if (!e.head().is_sym()) return true;
    const std::string& h = e.head().name();
    if (!detail::is_elementary(h) && !ctx.functions.contains(h)) return true;
  }
  if (e.is_op() && !ctx.operators.contains(e.name())) return true;
  for (const auto& c : e.children())
    if (has_uninterpreted_head(c, ctx)) return true;
  return false;
}

}  // namespace detail

class DerivationChecker {
 public:
  DerivationChecker(const Derivation& d, const Context& ctx) : d_(d), ctx_(ctx) {
    for (const auto& h : d.opaque) ctx_.declare_opaque(h);
    for (std::size_t i = 0; i < d.steps.size(); ++i) {
      if (!index_.emplace(d.steps[i].label, i).second)
        throw Error(ErrorCode::malformed_step, "duplicate label " + d.steps[i].label);
    }
  }

  Expr effective_lhs(std::size_t i) const {
    const Step& s = d_.steps.at(i);
    if (s.lhs) return *s.lhs;
    if (i == 0) throw Error(ErrorCode::malformed_step, "step " + s.label + " has no left side to continue");
    return d_.steps[i - 1].rhs;
  }

  std::pair<Expr, Expr> equality(std::size_t i) const { return {effective_lhs(i), d_.steps[i].rhs}; }

  std::size_t ref_index(std::size_t i, const std::string& ref) const {
    auto it = index_.find(ref);
    if (it == index_.end() || it->second >= i)
      throw Error(ErrorCode::dangling_reference,
                  "step " + d_.steps[i].label + " refers to " + ref + ", which is not an earlier step");
    return it->second;
  }

  StepVerdict check(std::size_t i) const {
    const Step& s = d_.steps.at(i);
    StepVerdict v;
    v.label = s.label;
    v.kind = s.just.kind;
    v.lhs = effective_lhs(i);
    v.highlight = diff_highlight(v.lhs, s.rhs);
    std::vector<std::size_t> refs;
    for (const auto& r : s.just.refs) refs.push_back(ref_index(i, r));
    auto pass = [&](StepStatus st, JustKind k, std::string msg) {
      v.status = st;
      v.kind = k;
      v.message = std::move(msg);
      return v;
    };
    switch (s.just.kind) {
      case JustKind::assumption: return pass(StepStatus::assumption, JustKind::assumption, "assumed");
      case JustKind::simplify:
        if (simplify_ok(v.lhs, s.rhs)) return pass(StepStatus::verified, JustKind::simplify, "both sides simplify to the same form");
        return pass(StepStatus::failed, JustKind::simplify, "the two sides simplify to different forms");
      case JustKind::rule: {
        const Rule& r = rule_or_throw(s.just.rule);
        Expr inst = instantiate_rule(r, s.just.subst);
        v.instance = inst;
        if (rule_ok(v.lhs, s.rhs, inst)) return pass(StepStatus::verified, JustKind::rule, "instance of " + r.name);
        return pass(StepStatus::failed, JustKind::rule, "not an instance of " + r.name + " with the given bindings");
      }
      case JustKind::rewrite:
        if (rewrite_ok(v.lhs, s.rhs, refs)) return pass(StepStatus::verified, JustKind::rewrite, "rewrite by the referenced equalities");
        return pass(StepStatus::failed, JustKind::rewrite, "no rewrite by the referenced equalities gives the right side");
      case JustKind::chain:
        if (chain_ok(v.lhs, s.rhs, refs)) return pass(StepStatus::verified, JustKind::chain, "follows by symmetry and transitivity");
        return pass(StepStatus::failed, JustKind::chain, "the referenced equalities do not connect the two sides");
      case JustKind::algebra: return algebra(i, v, refs);
      case JustKind::by:
        if (refs.empty()) {
          if (simplify_ok(v.lhs, s.rhs)) return pass(StepStatus::verified, JustKind::simplify, "both sides simplify to the same form");
          return pass(StepStatus::failed, JustKind::by, "no references given");
        }
        if (rewrite_ok(v.lhs, s.rhs, refs)) return pass(StepStatus::verified, JustKind::rewrite, "rewrite by the referenced equalities");
        if (chain_ok(v.lhs, s.rhs, refs)) return pass(StepStatus::verified, JustKind::chain, "follows by symmetry and transitivity");
        return algebra(i, v, refs);
    }
    return v;
  }

 private:
  bool simplify_ok(const Expr& a, const Expr& b) const {
    try {
      return expand(delazify(a), ctx_) == expand(delazify(b), ctx_);
    } catch (const Error&) {
      return false;
    }
  }

  bool rule_ok(const Expr& lhs, const Expr& rhs, const Expr& inst) const {
    if (detail::same_canonical(op("=", {lhs, rhs}), inst, ctx_)) return true;
    if (!inst.is_op("=") || inst.arity() != 2) return false;
    for (int dir = 0; dir < 2; ++dir) {
      const Expr& from = dir == 0 ? inst.arg(0) : inst.arg(1);
      const Expr& to = dir == 0 ? inst.arg(1) : inst.arg(0);
      for (const auto& c : detail::rewrites(lhs, from, to, ctx_))
        if (detail::same_canonical(c, rhs, ctx_)) return true;
    }
    return false;
  }

  bool rewrite_ok(const Expr& lhs, const Expr& rhs, const std::vector<std::size_t>& refs) const {
    for (auto r : refs) {
      auto [a, b] = equality(r);
      for (int dir = 0; dir < 2; ++dir) {
        for (const auto& c : detail::rewrites(lhs, dir == 0 ? a : b, dir == 0 ? b : a, ctx_))
          if (detail::same_canonical(c, rhs, ctx_)) return true;
      }
    }
    return false;
  }

  bool chain_ok(const Expr& lhs, const Expr& rhs, const std::vector<std::size_t>& refs) const {
    if (detail::same_canonical(lhs, rhs, ctx_)) return true;
    detail::EqualityGraph g(ctx_);
    for (auto r : refs) {
      auto [a, b] = equality(r);
      g.add(a, b);
    }
    return g.connected(lhs, rhs);
  }

  // Both sides of a known equality under the same operation.
  StepVerdict algebra(std::size_t i, StepVerdict v, const std::vector<std::size_t>& refs) const {
    const Expr& rhs = d_.steps[i].rhs;
    const Expr lhs = v.lhs;
    detail::EqualityGraph g(ctx_);
    for (std::size_t k = 0; k < i; ++k) {
      auto [a, b] = equality(k);
      g.add(a, b);
    }
    std::vector<std::pair<Expr, Expr>> known;
    for (auto r : refs) {
      auto [a, b] = equality(r);
      auto comp = g.component(a);
      for (const auto& p : comp)
        for (const auto& q : comp)
          if (!(p == q)) known.emplace_back(p, q);
    }
    std::vector<Expr> operands;
    for (const auto& [p, q] : known) detail::collect_subterms(p, operands), detail::collect_subterms(q, operands);
    detail::collect_subterms(lhs, operands);
    detail::collect_subterms(rhs, operands);
    std::set<Expr, ExprLess> uniq(operands.begin(), operands.end());
    auto target_l = detail::try_canonical(lhs, ctx_);
    auto target_r = detail::try_canonical(rhs, ctx_);
    v.kind = JustKind::algebra;
    if (target_l && target_r) {
      for (const auto& [p, q] : known) {
        for (const auto& c : uniq) {
          if (c.is_num(0)) continue;
          for (const char* o : {"+", "-", "*", "/"}) {
            for (int side = 0; side < 2; ++side) {
              auto apply = [&](const Expr& x) { return side == 0 ? op(o, {x, c}) : op(o, {c, x}); };
              auto l = detail::try_canonical(apply(p), ctx_);
              if (!l || !(*l == *target_l)) continue;
              auto r = detail::try_canonical(apply(q), ctx_);
              if (r && *r == *target_r) {
                v.status = StepStatus::verified;
                v.message = std::string("both sides ") + (side == 0 ? "" : "applied to ") + o + " " + to_source(c);
                return v;
              }
            }
          }
        }
      }
    }
    // Apply the same one-argument head to both sides.
    if (target_l && target_r && lhs.is_app() && rhs.is_app() && lhs.head() == rhs.head() && lhs.arity() == 1 &&
        rhs.arity() == 1) {
      for (const auto& [p, q] : known) {
        if (detail::same_canonical(lhs.arg(0), p, ctx_) && detail::same_canonical(rhs.arg(0), q, ctx_)) {
          v.status = StepStatus::verified;
          v.message = "applied " + to_source(lhs.head()) + " to both sides";
          return v;
        }
      }
    }
    bool symbolic = detail::has_uninterpreted_head(op("=", {lhs, rhs}), ctx_);
    std::set<std::string> known_vars;
    for (auto r : refs) {
      auto [a, b] = equality(r);
      symbolic = symbolic || detail::has_uninterpreted_head(op("=", {a, b}), ctx_);
      for (const auto& x : free_variables(op("=", {a, b}))) known_vars.insert(x);
    }
    // A symbol that appears for the first time (a renamed constant) is a
    // definition the checker cannot verify.
    for (const auto& x : free_variables(op("=", {lhs, rhs})))
      symbolic = symbolic || !known_vars.contains(x);
    if (symbolic) {
      v.status = StepStatus::unverified_algebra;
      v.message = "algebra step not machine-verified";
    } else {
      v.status = StepStatus::failed;
      v.message = "no operation on both sides of the referenced equalities gives this step";
    }
    return v;
  }

  const Derivation& d_;
  Context ctx_;
  std::map<std::string, std::size_t> index_;
};

inline StepVerdict check_step(const Derivation& d, std::size_t i, const Context& ctx = Context::standard()) {
  return DerivationChecker(d, ctx).check(i);
}

/// Start of the final chain: the last step with an explicit left side.
inline std::optional<Expr> conclusion(const Derivation& d) {
  if (d.steps.empty()) return std::nullopt;
  for (std::size_t i = d.steps.size(); i-- > 0;)
    if (d.steps[i].lhs) return op("=", {*d.steps[i].lhs, d.steps.back().rhs});
  return std::nullopt;
}

inline DerivationReport check_derivation(const Derivation& d, const Context& ctx = Context::standard()) {
  DerivationReport rep;
  rep.conclusion = conclusion(d);
  rep.all_ok = !d.steps.empty();
  std::optional<DerivationChecker> checker;
  std::string setup_error;
  try {
    checker.emplace(d, ctx);
  } catch (const Error& e) {
    setup_error = e.what();
  }
  for (std::size_t i = 0; i < d.steps.size(); ++i) {
    StepVerdict v;
    v.label = d.steps[i].label;
    v.kind = d.steps[i].just.kind;
    if (!checker) {
      v.message = setup_error;
    } else {
      try {
        v = checker->check(i);
      } catch (const Error& e) {
        v.status = StepStatus::failed;
        v.message = e.what();
      }
    }
    if (v.status == StepStatus::unverified_algebra) ++rep.soft;
    rep.all_ok = rep.all_ok && v.ok();
    rep.steps.push_back(std::move(v));
  }
  return rep;
}

/// Replaces step `label` by the steps of `expansion`, whose conclusion must
/// equal that step's equality. Labels become (1), (2), ...; references inside
/// the expansion resolve first to its own labels, then to earlier steps.
inline Derivation expand_step(const Derivation& d, const std::string& label, const Derivation& expansion,
                              const Context& ctx = Context::standard()) {
  std::size_t t = d.steps.size();
  for (std::size_t i = 0; i < d.steps.size(); ++i)
    if (d.steps[i].label == label) t = i;
  if (t == d.steps.size()) throw Error(ErrorCode::dangling_reference, "no step labeled " + label);
  if (expansion.steps.empty()) throw Error(ErrorCode::malformed_step, "empty expansion");
  DerivationChecker orig(d, ctx);
  auto [tl, tr] = orig.equality(t);
  auto concl = conclusion(expansion);
  if (!concl || !detail::same_canonical(*concl, op("=", {tl, tr}), ctx))
    throw Error(ErrorCode::conclusion_mismatch, "the expansion does not conclude the equality of step " + label);

  Derivation out;
  out.title = d.title;
  out.columns = d.columns;
  out.opaque = d.opaque;
  std::map<std::string, std::string> outer_map, inner_map;
  int counter = 0;
  auto next_label = [&] { return "(" + std::to_string(++counter) + ")"; };
  std::vector<Step> steps;
  for (std::size_t i = 0; i < t; ++i) {
    Step s = d.steps[i];
    std::string old = s.label;
    s.label = next_label();
    outer_map[old] = s.label;
    steps.push_back(std::move(s));
  }
  Expansion record{d.steps[t], {}};
  std::size_t first_inner = steps.size();
  for (const auto& src : expansion.steps) {
    Step s = src;
    std::string old = s.label;
    s.label = next_label();
    inner_map[old] = s.label;
    for (auto& r : s.just.refs) {
      if (auto it = inner_map.find(r); it != inner_map.end()) r = it->second;
      else if (auto jt = outer_map.find(r); jt != outer_map.end()) r = jt->second;
      else throw Error(ErrorCode::dangling_reference, "expansion refers to unknown step " + r);
    }
    record.labels.push_back(s.label);
    steps.push_back(std::move(s));
  }
  steps[first_inner].particle = d.steps[t].particle;
  outer_map[label] = steps.back().label;
  for (std::size_t i = t + 1; i < d.steps.size(); ++i) {
    Step s = d.steps[i];
    std::string old = s.label;
    s.label = next_label();
    outer_map[old] = s.label;
    for (auto& r : s.just.refs) {
      auto it = outer_map.find(r);
      if (it == outer_map.end()) throw Error(ErrorCode::dangling_reference, "step refers to unknown step " + r);
      r = it->second;
    }
    steps.push_back(std::move(s));
  }
  for (auto& r : record.original.just.refs) r = outer_map.count(r) ? outer_map[r] : r;
  record.original.label = steps[first_inner].label;
  out.steps = std::move(steps);
  out.expansions = d.expansions;
  out.expansions.push_back(std::move(record));
  return out;
}

/// The document with every recorded expansion folded back into one step,
/// relabeled (1), (2), ...
inline Derivation collapsed_view(const Derivation& d) {
  Derivation out{d.title, d.columns, {}, {}, d.opaque};
  std::map<std::string, std::string> folded;  // hidden label -> start label
  std::map<std::string, const Expansion*> starts;
  for (const auto& x : d.expansions) {
    if (x.labels.empty()) continue;
    starts[x.labels.front()] = &x;
    for (const auto& l : x.labels) folded[l] = x.labels.front();
  }
  std::map<std::string, std::string> renamed;
  int counter = 0;
  for (const auto& s : d.steps) {
    if (folded.contains(s.label) && folded[s.label] != s.label) continue;
    auto it = starts.find(s.label);
    Step step = it == starts.end() ? s : it->second->original;
    std::string fresh = "(" + std::to_string(++counter) + ")";
    renamed[s.label] = fresh;
    step.label = fresh;
    for (auto& r : step.just.refs) {
      std::string target = folded.contains(r) ? folded[r] : r;
      if (renamed.contains(target)) r = renamed[target];
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

/// Only the conclusion, as one step.
inline Derivation conclusion_view(const Derivation& d) {
  Derivation out{d.title, d.columns, {}, {}, d.opaque};
  auto c = conclusion(d);
  if (!c) return out;
  Step s;
  s.lhs = c->arg(0);
  s.rhs = c->arg(1);
  s.label = "(1)";
  s.just.kind = JustKind::assumption;
  out.steps.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Text form: one step per line, five fields separated by '|':
//   particle | lhs | label | rhs | justification
// Lines starting with '#' are comments; "title: ..." and "columns: off"
// set the header. Justifications: empty or "simplify", "assume",
// "rule NAME [bindings]", "[NAME] [bindings]", a rule description such as
// "the chain rule", "by (1), (2)", "rewrite (1)", "chain (4), (2)",
// "algebra (5)".

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> parse_refs(std::string_view text, int line) {
  std::vector<std::string> refs;
  std::size_t i = 0;
  while (i < text.size()) {
    auto open = text.find('(', i);
    if (open == std::string_view::npos) break;
    auto close = text.find(')', open);
    if (close == std::string_view::npos)
      throw Error(ErrorCode::malformed_step, "line " + std::to_string(line) + ": unterminated reference");
    refs.emplace_back(text.substr(open, close - open + 1));
    i = close + 1;
  }
  return refs;
}

inline Justification parse_justification(const std::string& text, int line, const Context& ctx) {
  Justification j;
  std::string t = trim(text);
  auto word_end = t.find_first_of(" [");
  std::string head = t.substr(0, word_end);
  std::string rest = word_end == std::string::npos ? "" : trim(t.substr(word_end));
  if (t.empty() || t == "simplify") {
    j.kind = JustKind::simplify;
  } else if (t == "assume" || t == "assumption") {
    j.kind = JustKind::assumption;
  } else if (head == "by" || head == "rewrite" || head == "chain" || head == "algebra") {
    j.kind = just_kind_from_string(head);
    j.refs = parse_refs(rest, line);
    if (j.refs.empty())
      throw Error(ErrorCode::malformed_step, "line " + std::to_string(line) + ": '" + head + "' needs references");
  } else if (head == "rule" || t.front() == '[') {
    j.kind = JustKind::rule;
    std::string body = head == "rule" ? rest : t;
    if (body.front() == '[') {
      auto close = body.find(']');
      if (close == std::string::npos) throw Error(ErrorCode::malformed_step, "line " + std::to_string(line) + ": bad rule name");
      j.rule = trim(body.substr(1, close - 1));
      body = trim(body.substr(close + 1));
    } else {
      auto sp = body.find_first_of(" [");
      j.rule = body.substr(0, sp);
      body = sp == std::string::npos ? "" : trim(body.substr(sp));
    }
    if (!body.empty()) j.subst = parse_bindings(body, ctx);
  } else {
    for (const auto& r : builtin_catalog()) {
      if (t == r.description || t == r.name) {
        j.kind = JustKind::rule;
        j.rule = r.name;
        return j;
      }
    }
    throw Error(ErrorCode::malformed_step, "line " + std::to_string(line) + ": unrecognized justification '" + t + "'");
  }
  return j;
}

}  // namespace detail

inline std::string justification_text(const Justification& j, const Context& ctx = Context::standard()) {
  auto refs = [&] {
    std::string s;
    for (std::size_t i = 0; i < j.refs.size(); ++i) s += (i ? ", " : "") + j.refs[i];
    return s;
  };
  switch (j.kind) {
    case JustKind::assumption: return "assume";
    case JustKind::simplify: return "simplify";
    case JustKind::rule: {
      std::string s = "rule " + j.rule;
      if (!j.subst.empty()) {
        s += " [";
        for (std::size_t i = 0; i < j.subst.bindings.size(); ++i)
          s += (i ? ", " : "") + to_source(j.subst.bindings[i].to_expr(), ctx);
        s += "]";
      }
      return s;
    }
    default: return std::string(just_kind_name(j.kind)) + " " + refs();
  }
}

inline Derivation parse_derivation_text(std::string_view text, const Context& ctx = Context::standard()) {
  Derivation d;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("title:", 0) == 0) {
      d.title = detail::trim(t.substr(6));
      continue;
    }
    if (t.rfind("opaque:", 0) == 0) {
      std::string list = t.substr(7);
      std::istringstream names(list);
      std::string name;
      while (std::getline(names, name, ',')) {
        name = detail::trim(name);
        if (!name.empty()) d.opaque.push_back(name);
      }
      continue;
    }
    if (t.rfind("columns:", 0) == 0) {
      d.columns = detail::trim(t.substr(8)) != "off";
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto bar = line.find('|', start);
      fields.push_back(line.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    if (fields.size() != 5)
      throw Error(ErrorCode::malformed_step, "line " + std::to_string(n) + ": expected 5 fields separated by '|', got " +
                                                 std::to_string(fields.size()));
    Step s;
    s.particle = particle_from_string(detail::trim(fields[0]));
    std::string lhs = detail::trim(fields[1]);
    if (!lhs.empty()) s.lhs = parse(lhs, ctx);
    s.label = detail::trim(fields[2]);
    if (s.label.empty()) throw Error(ErrorCode::malformed_step, "line " + std::to_string(n) + ": missing label");
    s.rhs = parse(detail::trim(fields[3]), ctx);
    s.just = detail::parse_justification(fields[4], n, ctx);
    if (s.particle == Particle::if_ && detail::trim(fields[4]).empty()) s.just.kind = JustKind::assumption;
    d.steps.push_back(std::move(s));
  }
  if (d.steps.empty()) throw Error(ErrorCode::malformed_step, "derivation has no steps");
  if (!d.steps.front().lhs) throw Error(ErrorCode::malformed_step, "the first step needs a left side");
  return d;
}

inline std::string derivation_to_text(const Derivation& d, const Context& ctx = Context::standard()) {
  std::string out;
  if (!d.title.empty()) out += "title: " + d.title + "\n";
  if (!d.columns) out += "columns: off\n";
  if (!d.opaque.empty()) {
    out += "opaque: ";
    for (std::size_t i = 0; i < d.opaque.size(); ++i) out += (i ? ", " : "") + d.opaque[i];
    out += "\n";
  }
  for (const auto& s : d.steps) {
    out += std::string(particle_name(s.particle)) + " | " + (s.lhs ? to_source(*s.lhs, ctx) : "") + " | " + s.label +
           " | " + to_source(s.rhs, ctx) + " | " + justification_text(s.just, ctx) + "\n";
  }
  return out;
}

}  // namespace mex
