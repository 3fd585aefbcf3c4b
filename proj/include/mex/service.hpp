#pragma once
// Session service: request routing and JSON bodies, independent of the
// HTTP transport (see service_http.hpp).

#include "mex/comprehension.hpp"
#include "mex/derivation.hpp"
#include "mex/json.hpp"
#include "mex/paths.hpp"
#include "mex/rules.hpp"
#include "mex/simplify.hpp"
#include "mex/subst.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace mex {

struct Response {
  int status = 200;
  Json body;
};

using SessionObject = std::variant<Expr, Derivation, Exercise>;

struct Session {
  std::string id;
  Context ctx;
  std::map<std::string, SessionObject> objects;
  int next_expr = 1;
  int next_exercise = 1;
  std::chrono::system_clock::time_point created;
  std::chrono::steady_clock::time_point last_used;
  std::mutex mutex;  // one writer per session
};

struct ServiceOptions {
  std::chrono::seconds ttl{2 * 60 * 60};
  std::string snapshot;  // empty: no persistence
  std::function<std::string()> new_id;  // default: 128 random bits as hex
  std::function<std::chrono::steady_clock::time_point()> now = [] { return std::chrono::steady_clock::now(); };
};

/// 32 hex digits from the system entropy source.
inline std::string random_session_id() {
  std::random_device rd;
  std::string out;
  char buf[9];
  for (int i = 0; i < 4; ++i) {
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    out += buf;
  }
  return out;
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::duplicate_name: return 409;
    case ErrorCode::unknown_rule:
    case ErrorCode::dangling_reference:
    case ErrorCode::malformed_step:
    case ErrorCode::conclusion_mismatch:
    case ErrorCode::missing_hole:
    case ErrorCode::overlap: return 422;
    default: return 400;
  }
}

inline Response error_response(int status, const std::string& code, const std::string& message,
                               const std::optional<SourceSpan>& span = std::nullopt) {
  Json sp = span ? Json{{"start", span->start}, {"end", span->end}} : Json(nullptr);
  return {status, {{"error", {{"code", code}, {"message", message}, {"span", sp}}}}};
}

class Service {
 public:
  explicit Service(ServiceOptions opts = {}) : opts_(std::move(opts)) {
    if (!opts_.new_id) opts_.new_id = random_session_id;
    if (!opts_.snapshot.empty()) load_snapshot(opts_.snapshot);
  }

  /// Routes one request. `path` excludes the query string.
  Response handle(std::string_view method, std::string_view path, const std::string& body) {
    try {
      auto parts = split_path(path);
      if (method == "POST" && parts.size() == 1 && parts[0] == "session") {
        Response r = create_session();
        if (!opts_.snapshot.empty()) save_snapshot(opts_.snapshot);
        return r;
      }
      if (method == "GET" && parts.size() == 1 && parts[0] == "rules") return {200, catalog_json()};
      if (parts.size() < 3 || parts[0] != "session") throw Error(ErrorCode::not_found, "no route for " + std::string(path));
      std::shared_ptr<Session> s = session(parts[1]);
      std::vector<std::string> rest(parts.begin() + 2, parts.end());
      Response r;
      {
        std::lock_guard lock(s->mutex);
        r = route(*s, method, rest, body);
      }
      if (method == "POST" && r.status == 200 && !opts_.snapshot.empty()) save_snapshot(opts_.snapshot);
      return r;
    } catch (const Error& e) {
      return error_response(http_status(e.code()), e.code_name(), e.what(), e.span());
    } catch (const Json::exception& e) {
      return error_response(400, "bad_json", e.what());
    } catch (const std::exception& e) {
      return error_response(500, "internal", e.what());
    }
  }

  std::size_t session_count() {
    std::lock_guard lock(mutex_);
    evict();
    return sessions_.size();
  }

  void save_snapshot(const std::string& file) {
    std::vector<std::shared_ptr<Session>> live;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [id, s] : sessions_) live.push_back(s);
    }
    Json all = Json::array();
    for (const auto& s : live) {
      std::lock_guard lock(s->mutex);
      all.push_back(session_json(*s));
    }
    std::lock_guard write_lock(snapshot_mutex_);
    std::string tmp = file + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw Error(ErrorCode::io, "cannot write snapshot " + tmp);
      out << Json{{"sessions", all}}.dump(1);
    }
    std::rename(tmp.c_str(), file.c_str());
  }

  void load_snapshot(const std::string& file) {
    std::ifstream in(file);
    if (!in) return;  // first run
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::io, "snapshot " + file + " is not valid JSON: " + e.what());
    }
    std::lock_guard lock(mutex_);
    for (const auto& sj : j.at("sessions")) {
      auto s = std::make_shared<Session>();
      s->id = sj.at("id").get<std::string>();
      s->created = std::chrono::system_clock::now();
      s->last_used = opts_.now();
      s->next_expr = sj.value("nextExpr", 1);
      s->next_exercise = sj.value("nextExercise", 1);
      for (const auto& [name, f] : sj.at("functions").items()) {
        std::vector<std::string> ps = f.at("params").get<std::vector<std::string>>();
        s->ctx.functions[name] = FunctionDef{ps, ast_from_json(f.at("body"))};
      }
      for (const auto& [name, o] : sj.at("objects").items()) {
        std::string type = o.at("type").get<std::string>();
        if (type == "expr") s->objects.emplace(name, ast_from_json(o.at("value")));
        else if (type == "derivation") s->objects.emplace(name, derivation_from_json(o.at("value")));
        else if (type == "exercise") s->objects.emplace(name, exercise_from_json(o.at("value")));
      }
      sessions_[s->id] = s;
    }
  }

 private:
  static std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : path) {
      if (c == '/') {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  void evict() {
    auto now = opts_.now();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second->last_used > opts_.ttl) it = sessions_.erase(it);
      else ++it;
    }
  }

  Response create_session() {
    auto s = std::make_shared<Session>();
    s->created = std::chrono::system_clock::now();
    s->last_used = opts_.now();
    std::lock_guard lock(mutex_);
    evict();
    do s->id = opts_.new_id();
    while (sessions_.contains(s->id));
    sessions_[s->id] = s;
    return {200, {{"id", s->id}}};
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(mutex_);
    evict();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session");
    it->second->last_used = opts_.now();
    return it->second;
  }

  static Json parse_body(const std::string& body) {
    if (body.empty()) return Json::object();
    try {
      return Json::parse(body);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::syntax, std::string("request body is not JSON: ") + e.what());
    }
  }

  static const Json& need(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::usage, std::string("missing field '") + key + "'");
    return j.at(key);
  }

  /// A stored expression name, surface source, or an AST.
  static Expr target(const Session& s, const Json& j) {
    if (j.is_string()) {
      auto it = s.objects.find(j.get<std::string>());
      if (it != s.objects.end()) {
        if (const Expr* e = std::get_if<Expr>(&it->second)) return *e;
        throw Error(ErrorCode::wrong_shape, "'" + it->first + "' is not an expression");
      }
    }
    return expr_from_request(j, s.ctx);
  }

  static void store(Session& s, const std::string& name, SessionObject obj) {
    if (s.objects.contains(name)) throw Error(ErrorCode::duplicate_name, "the name '" + name + "' is taken");
    s.objects.emplace(name, std::move(obj));
  }

  Response route(Session& s, std::string_view method, const std::vector<std::string>& rest, const std::string& raw) {
    if (method == "GET" && rest.size() == 2 && rest[0] == "derivation") return get_derivation(s, rest[1]);
    if (method != "POST") throw Error(ErrorCode::not_found, "no such route");
    Json req = parse_body(raw);
    std::string r = rest[0];
    for (std::size_t i = 1; i < rest.size(); ++i) r += "/" + rest[i];
    if (r == "parse") return parse_expr(s, req);
    if (r == "subst") return substitute(s, req);
    if (r == "simplify") {
      Expr e = simplify(target(s, need(req, "target")), {}, s.ctx);
      return {200, rendered(e, {}, s.ctx)};
    }
    if (r == "diff") return differentiate(s, req);
    if (r == "exercise/make") return make_exercise(s, req);
    if (r == "exercise/check") return check_exercise(s, req);
    if (r == "derivation/check") return check_document(s, req);
    if (r == "comprehension/eval") return eval_comprehension(s, req);
    throw Error(ErrorCode::not_found, "no such route");
  }

  Response parse_expr(Session& s, const Json& req) {
    Expr e = expr_from_request(need(req, "src"), s.ctx);
    std::string name;
    if (req.contains("name")) {
      name = req.at("name").get<std::string>();
    } else {
      do name = "e" + std::to_string(s.next_expr++);
      while (s.objects.contains(name));
    }
    store(s, name, e);
    Json out = rendered(e, {}, s.ctx);
    out["name"] = name;
    return {200, out};
  }

  Response substitute(Session& s, const Json& req) {
    Expr e = target(s, need(req, "target"));
    Substitution sub = substitution_from_json(need(req, "bindings"), s.ctx);
    std::string f = req.value("form", std::string("s"));
    auto form = subst_form_from_string(f);
    if (!form) throw Error(ErrorCode::usage, "form must be one of s, ss, sss, ssu");
    SubstResult res = apply_subst(e, sub, {}, s.ctx);
    Expr shown = *form == SubstForm::ss ? subst_presentation(e, sub, e, *form) : subst_presentation(e, sub, res.output, *form);
    Json out = rendered(shown, {}, s.ctx);
    out["betaSteps"] = res.beta_steps;
    return {200, out};
  }

  Response differentiate(Session& s, const Json& req) {
    Expr e = target(s, need(req, "target"));
    std::string var = req.value("var", std::string("x"));
    bool noun = req.value("noun", false);
    Expr d = noun ? Expr::quote(op("diff", {e, sym(var)})) : diff_verb(e, var, s.ctx);
    return {200, rendered(d, {}, s.ctx)};
  }

  Response make_exercise(Session& s, const Json& req) {
    Expr e = target(s, need(req, "target"));
    std::vector<Path> paths;
    for (const auto& p : need(req, "paths")) paths.push_back(path_from_json(p));
    Exercise x = mkholes(e, paths, s.ctx);
    std::string id = "x" + std::to_string(s.next_exercise++);
    Json student = to_json(x, Audience::student);
    Json statement = rendered(x.statement, {}, s.ctx);
    statement["holes"] = student.at("holes");
    store(s, id, std::move(x));
    return {200, {{"exerciseId", id}, {"statement", statement}}};
  }

  Response check_exercise(Session& s, const Json& req) {
    std::string id = need(req, "exerciseId").get<std::string>();
    auto it = s.objects.find(id);
    if (it == s.objects.end() || !std::holds_alternative<Exercise>(it->second))
      throw Error(ErrorCode::not_found, "unknown exercise '" + id + "'");
    const Exercise& x = std::get<Exercise>(it->second);
    std::map<int, Expr> answers;
    for (const auto& [label, src] : need(req, "answers").items()) {
      int l = 0;
      try {
        l = std::stoi(label);
      } catch (const std::exception&) {
        throw Error(ErrorCode::usage, "hole labels are integers");
      }
      answers[l] = expr_from_request(src, s.ctx);
    }
    return {200, to_json(check_holes(x, answers, s.ctx))};
  }

  static Json document_with_report(const Derivation& d, const Context& ctx) {
    Json out = to_json(d);
    DerivationReport rep = check_derivation(d, ctx);
    out["report"] = to_json(rep, ctx);
    Json latex = Json::array();
    for (std::size_t i = 0; i < d.steps.size(); ++i) {
      const auto& st = d.steps[i];
      const auto& v = rep.steps[i];
      RenderOptions lo, ro;
      for (const auto& [a, b] : v.highlight) {
        lo.annotations.push_back({a, AnnotationKind::highlight, Expr()});
        ro.annotations.push_back({b, AnnotationKind::highlight, Expr()});
      }
      Json row{{"label", st.label}, {"rhs", to_latex(st.rhs, ro, ctx)}, {"rhsAscii", to_ascii(st.rhs, {}, ctx)}};
      row["lhs"] = st.lhs ? Json(to_latex(*st.lhs, lo, ctx)) : Json(nullptr);
      row["lhsAscii"] = st.lhs ? Json(to_ascii(*st.lhs, {}, ctx)) : Json(nullptr);
      row["just"] = justification_text(st.just, ctx);
      latex.push_back(row);
    }
    out["rows"] = latex;
    return out;
  }

  Response get_derivation(Session& s, const std::string& name) {
    auto it = s.objects.find(name);
    if (it == s.objects.end() || !std::holds_alternative<Derivation>(it->second))
      throw Error(ErrorCode::not_found, "unknown derivation '" + name + "'");
    const Derivation& d = std::get<Derivation>(it->second);
    Json out = document_with_report(d, s.ctx);
    out["collapsed"] = to_json(collapsed_view(d));
    out["conclusionOnly"] = to_json(conclusion_view(d));
    return {200, out};
  }

  Response check_document(Session& s, const Json& req) {
    const Json& doc = need(req, "document");
    Derivation d = doc.is_string() ? parse_derivation_text(doc.get<std::string>(), s.ctx) : derivation_from_json(doc, s.ctx);
    if (req.contains("expand")) {
      const Json& x = req.at("expand");
      const Json& sub = need(x, "document");
      Derivation inner = sub.is_string() ? parse_derivation_text(sub.get<std::string>(), s.ctx) : derivation_from_json(sub, s.ctx);
      d = expand_step(d, need(x, "label").get<std::string>(), inner, s.ctx);
    }
    Json out = to_json(check_derivation(d, s.ctx), s.ctx);
    if (req.contains("name")) {
      std::string name = req.at("name").get<std::string>();
      store(s, name, d);
      out["name"] = name;
    }
    return {200, out};
  }

  Response eval_comprehension(Session& s, const Json& req) {
    Expr e = expr_from_request(need(req, "src"), s.ctx);
    Comprehension c = normalize(e);
    Evaluation ev = evaluate(c, s.ctx);
    Json values = Json::array();
    for (const auto& v : ev.values) values.push_back(rendered(v, {}, s.ctx));
    return {200,
            {{"values", values},
             {"traceTree", to_json(ev.tree)},
             {"loopProgram", emit_loops(c, s.ctx)},
             {"unified", rendered(to_unified(c), {}, s.ctx)}}};
  }

  static Json session_json(const Session& s) {
    Json objects = Json::object();
    for (const auto& [name, o] : s.objects) {
      if (const Expr* e = std::get_if<Expr>(&o)) objects[name] = {{"type", "expr"}, {"value", to_json(*e)}};
      else if (const Derivation* d = std::get_if<Derivation>(&o)) objects[name] = {{"type", "derivation"}, {"value", to_json(*d)}};
      else objects[name] = {{"type", "exercise"}, {"value", to_json(std::get<Exercise>(o), Audience::teacher)}};
    }
    Json functions = Json::object();
    for (const auto& [name, f] : s.ctx.functions) functions[name] = {{"params", f.params}, {"body", to_json(f.body)}};
    return {{"id", s.id}, {"objects", objects}, {"functions", functions}, {"nextExpr", s.next_expr}, {"nextExercise", s.next_exercise}};
  }

  ServiceOptions opts_;
  std::mutex mutex_;
  std::mutex snapshot_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace mex
