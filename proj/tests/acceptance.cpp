// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "mex/derivation.hpp"
#include "mex/eval.hpp"
#include "mex/json.hpp"
#include "mex/service.hpp"
#include "properties.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

using namespace mex;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture(const std::string& name) { return slurp(std::string(MEX_FIXTURES) + "/" + name); }

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failed;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
};

bool same(const Expr& a, const std::string& b) { return canonical_parts(a) == canonical_parts(parse(b)); }

int failures = 0;

void criterion(int n, const char* title, const std::function<void(Check&)>& body) {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failed.push_back(std::string("threw: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = c.failed.empty();
  if (!ok) ++failures;
  std::printf("%s %2d  %s (%.3fs)%s%s\n", ok ? "PASS" : "FAIL", n, title, secs, c.note.empty() ? "" : "  ",
              c.note.c_str());
  for (const auto& f : c.failed) std::printf("         %s\n", f.c_str());
  std::fflush(stdout);
}

void property(Check& c, const props::Result& r, int at_least) {
  c.expect(r.cases >= at_least, std::to_string(r.cases) + " cases, need " + std::to_string(at_least));
  c.expect(r.ok(), std::to_string(r.failures) + " counterexamples, first: " + r.first);
  c.note = std::to_string(r.cases) + " cases";
}

// --- service helpers ---------------------------------------------------------

const char* kChain = "'diff(f(g(x)), x) = f'(g(x)) *. g'(x)";
const char* kChainBindings = "[f(x) := x^3, f'(x) := 3*x^2, g(x) := log(x) + x^2, g'(x) := 2*x + 1/x]";

ServiceOptions counting_ids() {
  ServiceOptions o;
  auto n = std::make_shared<int>(0);
  o.new_id = [n] { return "s" + std::to_string(++*n); };
  return o;
}

struct Client {
  Service& svc;
  std::string id;
  explicit Client(Service& s) : svc(s) { id = svc.handle("POST", "/session", "").body.at("id"); }
  Response post(const std::string& route, const Json& body) {
    return svc.handle("POST", "/session/" + id + "/" + route, body.dump());
  }
  Response get(const std::string& route) { return svc.handle("GET", "/session/" + id + "/" + route, ""); }
};

bool contains_key(const Json& j, const std::string& key) {
  if (j.is_object() && j.contains(key)) return true;
  if (j.is_object() || j.is_array())
    for (const auto& v : j)
      if (contains_key(v, key)) return true;
  return false;
}

int count_value(const Json& j, const Json& needle) {
  if (j == needle) return 1;
  int n = 0;
  if (j.is_object() || j.is_array())
    for (const auto& v : j) n += count_value(v, needle);
  return n;
}

std::vector<std::string> replay(Service& svc) {
  Client c(svc);
  std::vector<std::string> out;
  auto keep = [&](const Response& r) { out.push_back(std::to_string(r.status) + " " + r.body.dump()); };
  keep(c.post("parse", {{"src", "a +. b = b +. a"}, {"name", "o"}}));
  keep(c.post("subst", {{"target", "o"}, {"bindings", "[a = 2, b = 3]"}, {"form", "sss"}}));
  keep(c.post("simplify", {{"target", "2 + 3 + 4*x + 5*x"}}));
  keep(c.post("diff", {{"target", "x^2"}, {"var", "x"}, {"noun", true}}));
  Response chain = c.post("subst", {{"target", kChain}, {"bindings", kChainBindings}, {"form", "ssu"}});
  keep(chain);
  Response made = c.post("exercise/make", {{"target", chain.body.at("ast")},
                                           {"paths", {{1, 2, 2, 1, 2}, {1, 2, 3, 1, 2}, {1, 2, 4, 1, 2}, {2, 2, 2}}}});
  keep(made);
  keep(c.post("comprehension/eval", {{"src", "{(x, y) | x in {1, ..., 5}, y in {x, ..., 6-x}}"}}));
  keep(c.post("derivation/check", {{"document", fixture("deriv-6x3-7x4.txt")}, {"name", "d"}}));
  keep(c.get("derivation/d"));
  keep(c.post("parse", {{"src", "("}}));
  return out;
}

}  // namespace

int main() {
  std::printf("mex acceptance\n");

  criterion(1, "session replay: line through two points", [](Check& c) {
    auto t0 = std::chrono::steady_clock::now();
    Evaluator ev;
    auto out = ev.run(fixture("session4.mac"));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(out.size() == 10, "expected 10 outputs");
    if (out.size() != 10) return;
    c.expect(same(out[3].value, "b + a = 2"), "eq1: " + out[3].display());
    c.expect(out[5].value == parse("[[a = -3, b = 5]]"), "solve: " + out[5].display());
    c.expect(same(out[6].value, "5 - 3x"), "subst: " + out[6].display());
    c.expect(out[8].value == num(2), "g(1): " + out[8].display());
    c.expect(out[9].value == num(-4), "g(3): " + out[9].display());
    c.expect(secs < 1.0, "took " + std::to_string(secs) + "s");
  });

  criterion(2, "lazy operators and parallel substitution", [](Check& c) {
    Evaluator ev;
    auto out = ev.run(fixture("session41.mac"));
    c.expect(out.size() == 11, "expected 11 outputs");
    if (out.size() != 11) return;
    Expr sss = out[4].value;
    c.expect(sss.is_op("=") && sss.arg(1) == parse("2 +. 3 = 3 +. 2"), "lazy instance: " + out[4].display());
    c.expect(sss.is_op("=") && to_ascii(sss.arg(1)) == "2 + 3 = 3 + 2", "rendering: " + out[4].display());
    Substitution s1 = parse_bindings("[f(x) := g(g(x)), g(x) := f(f(x))]");
    c.expect(apply_subst(parse("f(g(t))"), s1).output == parse("g(g(f(f(t))))"), "applySubst");
    c.expect(apply_sequential(parse("f(g(t))"), s1) == parse("f(f(f(t)))"), "applySequential");
    c.expect(out[8].value == parse("g(g(f(f(t))))"), "psubst: " + out[8].display());
    c.expect(out[9].value == parse("f(f(f(t)))"), "subst: " + out[9].display());
  });

  criterion(3, "holes: dpart, substpart, mkholes, checkHoles", [](Check& c) {
    Expr o = parse("2 +. 3 +. 4 = 2 +. 7");
    c.expect(to_ascii(o, boxed_at({2, 1})) == "2 + 3 + 4 = ⎡2⎤ + 7", "dpart: " + to_ascii(o, boxed_at({2, 1})));
    c.expect(to_ascii(substpart(Expr::hole(), o, {2, 1})) == "2 + 3 + 4 = ? + 7", "substpart");
    Context ctx;
    Expr chain = subst_form(parse(kChain), parse_bindings(kChainBindings), SubstForm::ssu, {}, ctx);
    std::vector<Path> paths{{1, 2, 2, 1, 2}, {1, 2, 3, 1, 2}, {1, 2, 4, 1, 2}, {2, 2, 2}};
    Exercise x = mkholes(chain, paths, ctx);
    // each of the first three holes is the value of a binding row
    const char* names[] = {"f'(x)", "g(x)", "g'(x)"};
    for (int i = 0; i < 3; ++i) {
      Path row(paths[i].begin(), paths[i].end() - 1);
      row.push_back(1);
      c.expect(part(chain, row) == parse(names[i]), std::string("hole ") + std::to_string(i + 1) + " is not at " + names[i]);
    }
    c.expect(x.answer(1) == parse("3*x^2") && x.answer(2) == parse("log(x) + x^2") && x.answer(3) == parse("2*x + 1/x"),
             "recorded answers");
    // the result slot: the right side of the instantiated equation
    Expr result = part(chain, {2, 2});
    c.expect(result.is_op("=") && part(chain, {2, 2, 2}) == x.answer(4), "hole 4 is not the result slot");
    std::map<int, Expr> answers{{1, parse("3x^2")}, {2, parse("x^2 + log(x)")}, {3, parse("2x + 1/x")}, {4, x.answer(4)}};
    auto rep = check_holes(x, answers, ctx);
    c.expect(rep.all_correct && rep.true_instance, "correct answers rejected");
    answers[3] = parse("2x");
    c.expect(!check_holes(x, answers, ctx).per_hole[2].correct, "wrong g' accepted");
  });

  criterion(4, "product derivative proof", [](Check& c) {
    Derivation d = derivation_from_json(Json::parse(fixture("deriv-6x3-7x4.json")));
    c.expect(d.steps.size() == 11, "expected 11 steps");
    auto rep = check_derivation(d);
    c.expect(rep.all_ok && rep.soft == 0, "not fully verified");
    c.expect(rep.conclusion && *rep.conclusion == parse("((6x^3)*(7x^4))' = 294x^6"), "conclusion");
    if (d.steps.size() < 4) return;
    const auto& v = rep.steps[3];
    c.expect(v.kind == JustKind::rule && d.steps[3].just.rule == "RPot", "step (4) rule");
    c.expect(d.steps[3].just.subst == parse_bindings("[n := 3]"), "step (4) substitution");
    c.expect(v.highlight.size() == 1 && part(v.lhs, v.highlight[0].first) == parse("'diff(x^3, x)") &&
                 part(d.steps[3].rhs, v.highlight[0].second) == parse("3x^2"),
             "step (4) highlight");
  });

  criterion(5, "inverse-function derivative tables and expandStep", [](Check& c) {
    Derivation compact = parse_derivation_text(fixture("ln-compact.txt"));
    Derivation expanded = parse_derivation_text(fixture("ln-expanded.txt"));
    c.expect(compact.steps.size() == 6 && expanded.steps.size() == 9, "row counts");
    auto rc = check_derivation(compact), re = check_derivation(expanded);
    c.expect(rc.all_ok && rc.soft == 0, "compact table does not verify");
    c.expect(re.all_ok && re.soft == 0, "expanded table does not verify");
    Derivation x = expand_step(compact, "(5)", parse_derivation_text(fixture("ln-expansion-5.txt")));
    auto rx = check_derivation(x);
    c.expect(x.steps.size() == expanded.steps.size(), "expanded row count");
    for (std::size_t i = 0; i < std::min(x.steps.size(), expanded.steps.size()); ++i) {
      c.expect(x.steps[i].label == expanded.steps[i].label && x.steps[i].rhs == expanded.steps[i].rhs,
               "row " + std::to_string(i + 1) + " differs");
      c.expect(rx.steps[i].status == re.steps[i].status, "verdict " + std::to_string(i + 1) + " differs");
    }
    c.expect(rx.conclusion && re.conclusion && *rx.conclusion == *re.conclusion, "conclusion");
  });

  criterion(6, "comprehensions and trace trees", [](Check& c) {
    Evaluation a = evaluate(parse("{10a | a in {2,3,4}}"));
    c.expect(a.values == std::vector<Expr>{num(20), num(30), num(40)}, "{10a}: wrong values");
    c.expect(leaf_count(a.tree) == 3, "{10a}: leaf count");
    Evaluation b = evaluate(parse("{(x, y) | x in {1, ..., 5}, y in {x, ..., 6-x}}"));
    std::vector<Expr> want;
    for (auto [x, y] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 2}, {2, 3}, {2, 4}, {3, 3}})
      want.push_back(op("tuple", {num(x), num(y)}));
    c.expect(b.values == want, "nested: wrong pairs");
    c.expect(b.tree.children.size() == 5 && b.tree.children[3].pruned && b.tree.children[4].pruned &&
                 !b.tree.children[2].pruned,
             "nested: x=4,5 not pruned");
    c.expect(leaf_count(b.tree) == 9, "nested: leaf count");
  });

  criterion(7, "simplify idempotent and sound at 20 rational points", [](Check& c) {
    property(c, props::simplify_soundness(701, 200, 20), 200);
  });

  criterion(8, "diff against central differences, h=1e-5, |d|<1e-6", [](Check& c) {
    auto r = props::diff_vs_finite_differences(801, 30, 1e-5, 1e-6);
    property(c, r, 30);
    char buf[64];
    std::snprintf(buf, sizeof buf, ", worst |d| = %.2e", r.worst);
    c.note += buf;
  });

  criterion(9, "beta confluence and capture avoidance", [](Check& c) { property(c, props::beta_confluence(901, 100), 100); });

  criterion(10, "part/substpart and mkholes/fill round trips", [](Check& c) {
    property(c, props::paths_round_trip(1001, 500), 500);
  });

  criterion(11, "comprehensions against nested loops, emitLoops round trip", [](Check& c) {
    property(c, props::comprehension_vs_loops(1101, 400), 400);
  });

  criterion(12, "service determinism, no answer leaks, no webui", [](Check& c) {
    Service s1(counting_ids()), s2(counting_ids());
    auto r1 = replay(s1), r2 = replay(s2);
    c.expect(r1 == r2, "two replays differ");
    Service s3;
    c.expect(replay(s3) == r1, "replay depends on the session id");

    Service svc;
    Client cl(svc);
    Response chain = cl.post("subst", {{"target", kChain}, {"bindings", kChainBindings}, {"form", "ssu"}});
    std::vector<Path> paths{{1, 2, 2, 1, 2}, {1, 2, 3, 1, 2}, {1, 2, 4, 1, 2}, {2, 2, 2}};
    Json jp = Json::array();
    for (const auto& p : paths) jp.push_back(to_json(p));
    Response made = cl.post("exercise/make", {{"target", chain.body.at("ast")}, {"paths", jp}});
    c.expect(made.status == 200, "exercise/make failed");
    c.expect(!contains_key(made.body, "source"), "student view has a source key");
    Expr src = ast_from_json(chain.body.at("ast"));
    const Json& shown = made.body.at("statement").at("ast");
    for (const auto& p : paths) {
      Json answer = to_json(part(src, p));
      c.expect(count_value(shown, answer) < count_value(to_json(src), answer), "answer at [" + path_to_string(p) + "] leaks");
    }
    c.expect(count_value(shown, to_json(part(src, paths[3]))) == 0, "result leaks");
    // the build description has no web client target
    c.expect(slurp(std::string(MEX_SOURCE_DIR) + "/CMakeLists.txt").find("webui") == std::string::npos,
             "a webui target is part of the build");
  });

  std::printf("%s\n", failures == 0 ? "all criteria pass" : (std::to_string(failures) + " criteria failed").c_str());
  return failures == 0 ? 0 : 1;
}
