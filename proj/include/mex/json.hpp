#pragma once
// JSON forms of expressions, exercises, derivations and comprehension traces.

#include "mex/comprehension.hpp"
#include "mex/derivation.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/parser.hpp"
#include "mex/paths.hpp"
#include "mex/render.hpp"
#include "mex/rules.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mex {

using Json = nlohmann::json;

inline Json to_json(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::num: return {{"num", to_fraction_string(e.value())}};
    case Expr::Kind::sym: return {{"sym", e.name()}};
    case Expr::Kind::op: {
      Json args = Json::array();
      for (const auto& a : e.args()) args.push_back(to_json(a));
      return {{"op", e.name()}, {"args", args}};
    }
    case Expr::Kind::app: {
      Json args = Json::array();
      for (const auto& a : e.args()) args.push_back(to_json(a));
      return {{"app", {{"head", to_json(e.head())}, {"args", args}}}};
    }
    case Expr::Kind::lambda: return {{"lam", {{"params", e.params()}, {"body", to_json(e.body())}}}};
    case Expr::Kind::hole: {
      auto l = e.label();
      return {{"hole", l ? Json(*l) : Json(nullptr)}};
    }
    case Expr::Kind::quoted: return {{"quote", to_json(e.inner())}};
  }
  return nullptr;
}

namespace detail {

[[noreturn]] inline void bad_json(const std::string& what) { throw Error(ErrorCode::wrong_shape, "JSON: " + what); }

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad_json(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline std::string string_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) bad_json(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline Expr ast_from_json(const Json& j) {
  using detail::bad_json;
  if (j.is_object() && j.contains("op")) {
    if (j.size() != 2 || !j.contains("args") || !j.at("op").is_string() || !j.at("args").is_array())
      bad_json("op nodes are {\"op\": name, \"args\": [...]}");
    std::vector<Expr> args;
    for (const auto& a : j.at("args")) args.push_back(ast_from_json(a));
    return op(j.at("op").get<std::string>(), std::move(args));
  }
  if (!j.is_object() || j.size() != 1) bad_json("an expression is an object with exactly one key");
  const auto& [key, v] = *j.items().begin();
  if (key == "num") {
    if (!v.is_string()) bad_json("num must be a string \"n/d\"");
    try {
      return num(parse_rational(v.get<std::string>()));
    } catch (const std::invalid_argument&) {
      bad_json("num must be a string \"n/d\"");
    }
  }
  if (key == "sym") {
    if (!v.is_string()) bad_json("sym must be a string");
    return sym(v.get<std::string>());
  }
  if (key == "app") {
    std::vector<Expr> args;
    for (const auto& a : detail::field(v, "args")) args.push_back(ast_from_json(a));
    return Expr::apply(ast_from_json(detail::field(v, "head")), std::move(args));
  }
  if (key == "lam") {
    std::vector<std::string> ps;
    for (const auto& p : detail::field(v, "params")) {
      if (!p.is_string()) bad_json("lambda params are strings");
      ps.push_back(p.get<std::string>());
    }
    return Expr::lambda(std::move(ps), ast_from_json(detail::field(v, "body")));
  }
  if (key == "hole") {
    if (v.is_null()) return Expr::hole();
    if (!v.is_number_integer()) bad_json("hole label must be an integer or null");
    return Expr::hole(v.get<int>());
  }
  if (key == "quote") return Expr::quote(ast_from_json(v));
  bad_json("unknown expression key '" + key + "'");
}

/// Surface source (a JSON string) or an AST object.
inline Expr expr_from_request(const Json& j, const Context& ctx = Context::standard()) {
  if (j.is_string()) return parse(j.get<std::string>(), ctx);
  return ast_from_json(j);
}

inline Json to_json(const Path& p) { return Json(std::vector<int>(p.begin(), p.end())); }

inline Path path_from_json(const Json& j) {
  if (!j.is_array()) detail::bad_json("a path is an array of integers");
  Path p;
  for (const auto& k : j) {
    if (!k.is_number_integer()) detail::bad_json("a path is an array of integers");
    p.push_back(k.get<int>());
  }
  return p;
}

/// Bindings as `:=` nodes.
inline Json to_json(const Substitution& s) {
  Json out = Json::array();
  for (const auto& b : s.bindings) out.push_back(to_json(b.to_expr()));
  return out;
}

/// Source text "[a := 2, ...]", an array of `:=` ASTs or sources, or a
/// list AST.
inline Substitution substitution_from_json(const Json& j, const Context& ctx = Context::standard()) {
  if (j.is_string()) return parse_bindings(j.get<std::string>(), ctx);
  if (j.is_array()) {
    std::vector<Expr> items;
    for (const auto& b : j) items.push_back(expr_from_request(b, ctx));
    return substitution_from_expr(op("list", std::move(items)));
  }
  return substitution_from_expr(ast_from_json(j));
}

/// Both renderings plus the AST, as every response carries them.
inline Json rendered(const Expr& e, const RenderOptions& opts = {}, const Context& ctx = Context::standard()) {
  return {{"ast", to_json(e)}, {"latex", to_latex(e, opts, ctx)}, {"ascii", to_ascii(e, opts, ctx)}};
}

// ---------------------------------------------------------------------------
// Annotations

inline Json to_json(const Annotation& a) {
  Json j{{"path", to_json(a.path)}, {"kind", annotation_kind_name(a.kind)}};
  j["caption"] = a.kind == AnnotationKind::underbrace ? to_json(a.caption) : Json(nullptr);
  return j;
}

inline Annotation annotation_from_json(const Json& j, const Context& ctx = Context::standard()) {
  Annotation a;
  a.path = path_from_json(detail::field(j, "path"));
  std::string k = detail::string_field(j, "kind");
  if (k == "box") a.kind = AnnotationKind::box;
  else if (k == "highlight") a.kind = AnnotationKind::highlight;
  else if (k == "underbrace") a.kind = AnnotationKind::underbrace;
  else detail::bad_json("unknown annotation kind '" + k + "'");
  if (j.contains("caption") && !j.at("caption").is_null()) a.caption = expr_from_request(j.at("caption"), ctx);
  return a;
}

// ---------------------------------------------------------------------------
// Exercises

enum class Audience { teacher, student };

inline Json to_json(const Exercise& x, Audience audience) {
  Json holes = Json::array();
  for (const auto& h : x.holes) holes.push_back({{"label", h.label}, {"path", to_json(h.path)}});
  Json j{{"statement", to_json(x.statement)}, {"holes", holes}};
  if (audience == Audience::teacher) j["source"] = to_json(x.source);
  return j;
}

inline Exercise exercise_from_json(const Json& j) {
  Exercise x;
  x.statement = ast_from_json(detail::field(j, "statement"));
  for (const auto& h : detail::field(j, "holes")) {
    if (!h.contains("label") || !h.at("label").is_number_integer()) detail::bad_json("hole label must be an integer");
    x.holes.push_back(HoleSpec{h.at("label").get<int>(), path_from_json(detail::field(h, "path"))});
  }
  if (!j.contains("source")) detail::bad_json("the exercise has no source; student views cannot be checked");
  x.source = ast_from_json(j.at("source"));
  return x;
}

inline Json to_json(const HoleReport& r) {
  Json per = Json::array();
  for (const auto& v : r.per_hole) per.push_back({{"label", v.label}, {"correct", v.correct}});
  return {{"perHole", per}, {"allCorrect", r.all_correct}};
}

// ---------------------------------------------------------------------------
// Rules

inline Json to_json(const Rule& r) {
  return {{"name", r.name}, {"description", r.description}, {"schema", to_json(r.schema)}, {"params", r.params}};
}

inline Json catalog_json() {
  Json out = Json::array();
  for (const auto& r : builtin_catalog()) out.push_back(to_json(r));
  return out;
}

// ---------------------------------------------------------------------------
// Derivations

inline Json to_json(const Justification& j) {
  Json out{{"kind", just_kind_name(j.kind)}};
  if (!j.rule.empty()) out["rule"] = j.rule;
  if (!j.subst.empty()) out["subst"] = to_json(j.subst);
  if (!j.refs.empty()) out["refs"] = j.refs;
  return out;
}

inline Justification justification_from_json(const Json& j, const Context& ctx = Context::standard()) {
  Justification out;
  out.kind = just_kind_from_string(detail::string_field(j, "kind"));
  if (j.contains("rule")) out.rule = detail::string_field(j, "rule");
  if (j.contains("subst")) out.subst = substitution_from_json(j.at("subst"), ctx);
  if (j.contains("refs"))
    for (const auto& r : j.at("refs")) out.refs.push_back(r.get<std::string>());
  if (out.kind == JustKind::rule && out.rule.empty()) throw Error(ErrorCode::malformed_step, "rule justification without a rule name");
  return out;
}

inline Json to_json(const Step& s) {
  return {{"particle", particle_name(s.particle)},
          {"lhs", s.lhs ? to_json(*s.lhs) : Json(nullptr)},
          {"label", s.label},
          {"rhs", to_json(s.rhs)},
          {"just", to_json(s.just)}};
}

inline Json to_json(const Derivation& d) {
  Json steps = Json::array();
  for (const auto& s : d.steps) steps.push_back(to_json(s));
  Json j{{"title", d.title}, {"steps", steps}};
  if (!d.columns) j["columns"] = false;
  if (!d.opaque.empty()) j["opaque"] = d.opaque;
  if (!d.expansions.empty()) {
    Json xs = Json::array();
    for (const auto& x : d.expansions) xs.push_back({{"original", to_json(x.original)}, {"labels", x.labels}});
    j["expansions"] = xs;
  }
  return j;
}

inline Step step_from_json(const Json& j, const Context& ctx = Context::standard()) {
  Step s;
  if (j.contains("particle")) s.particle = particle_from_string(detail::string_field(j, "particle"));
  if (j.contains("lhs") && !j.at("lhs").is_null()) s.lhs = expr_from_request(j.at("lhs"), ctx);
  s.label = detail::string_field(j, "label");
  s.rhs = expr_from_request(detail::field(j, "rhs"), ctx);
  if (j.contains("just")) s.just = justification_from_json(j.at("just"), ctx);
  return s;
}

inline Derivation derivation_from_json(const Json& j, const Context& ctx = Context::standard()) {
  Derivation d;
  if (j.contains("title")) d.title = detail::string_field(j, "title");
  if (j.contains("columns")) d.columns = j.at("columns").get<bool>();
  if (j.contains("opaque"))
    for (const auto& h : j.at("opaque")) d.opaque.push_back(h.get<std::string>());
  for (const auto& s : detail::field(j, "steps")) d.steps.push_back(step_from_json(s, ctx));
  if (j.contains("expansions"))
    for (const auto& x : j.at("expansions")) {
      Expansion e{step_from_json(detail::field(x, "original"), ctx), {}};
      for (const auto& l : detail::field(x, "labels")) e.labels.push_back(l.get<std::string>());
      d.expansions.push_back(std::move(e));
    }
  return d;
}

inline Json to_json(const StepVerdict& v, const Context& ctx = Context::standard()) {
  Json hl = Json::array();
  for (const auto& [a, b] : v.highlight) hl.push_back({{"lhs", to_json(a)}, {"rhs", to_json(b)}});
  Json j{{"label", v.label},
         {"status", step_status_name(v.status)},
         {"kind", just_kind_name(v.kind)},
         {"message", v.message},
         {"lhs", to_json(v.lhs)},
         {"highlight", hl}};
  j["instance"] = v.instance ? rendered(*v.instance, {}, ctx) : Json(nullptr);
  return j;
}

inline Json to_json(const DerivationReport& r, const Context& ctx = Context::standard()) {
  Json steps = Json::array();
  for (const auto& v : r.steps) steps.push_back(to_json(v, ctx));
  Json j{{"steps", steps}, {"allOk", r.all_ok}, {"soft", r.soft}};
  j["conclusion"] = r.conclusion ? rendered(*r.conclusion, {}, ctx) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Comprehension traces

inline Json to_json(const TraceNode& t) {
  Json children = Json::array();
  for (const auto& c : t.children) children.push_back(to_json(c));
  Json ann = Json::object();
  for (const auto& [k, v] : t.annotations) ann[k] = to_json(v);
  Json j{{"var", t.var},
         {"value", t.value ? to_json(*t.value) : Json(nullptr)},
         {"children", children},
         {"pruned", t.pruned},
         {"annotations", ann}};
  if (t.pruned) j["prunedBy"] = t.pruned_reason;
  if (t.result) j["result"] = to_json(*t.result);
  return j;
}

}  // namespace mex
