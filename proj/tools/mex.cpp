// mex: REPL and batch front end.
//
// Exit codes: 0 ok, 1 usage or other error, 2 parse error, 3 check
// failed, 4 io error.

#include "mex/comprehension.hpp"
#include "mex/derivation.hpp"
#include "mex/document.hpp"
#include "mex/eval.hpp"
#include "mex/json.hpp"
#include "mex/paths.hpp"
#include "mex/service_http.hpp"
#include "mex/subst.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mex;

enum Exit { ok = 0, usage = 1, parse_error = 2, check_failed = 3, io_error = 4 };

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::syntax:
    case ErrorCode::unknown_operator:
    case ErrorCode::malformed_binding:
    case ErrorCode::wrong_shape:
    case ErrorCode::malformed_step: return parse_error;
    case ErrorCode::io: return io_error;
    case ErrorCode::conclusion_mismatch:
    case ErrorCode::dangling_reference: return check_failed;
    default: return usage;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::syntax, path + ": " + e.what());
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Global {
  std::string format = "ascii";
  std::string layout = "children-right";
  int port = 8080;
  std::string snapshot;
  std::string host = "127.0.0.1";
  std::string origin = "*";
};

TreeLayout layout_of(const Global& g) {
  return g.layout == "root-top" ? TreeLayout::root_top : TreeLayout::children_right;
}

std::string show(const Expr& e, const Global& g, const Context& ctx = Context::standard()) {
  if (g.format == "latex") return to_latex(e, {}, ctx);
  if (g.format == "json") return to_json(e).dump();
  if (g.format == "source") return to_source(e, ctx);
  return to_ascii(e, {}, ctx);
}

// --- repl --------------------------------------------------------------------

bool statement_complete(const std::string& buf) {
  int depth = 0;
  char last = 0;
  for (char c : buf) {
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (!std::isspace(static_cast<unsigned char>(c))) last = c;
  }
  return depth <= 0 && (last == ';' || last == '$');
}

int run_repl(std::istream& in, const Global& g, bool labels) {
  Evaluator ev;
  std::string buf, line;
  int n = 0, worst = ok;
  bool tty = false;
  auto prompt = [&] {
    if (tty) std::cout << "(%i" << n + 1 << ") " << std::flush;
  };
  prompt();
  while (std::getline(in, line)) {
    buf += line + "\n";
    if (!statement_complete(buf)) continue;
    for (const auto& st : split_statements(buf)) {
      ++n;
      try {
        EvalOutput out = ev.run_statement(st);
        if (!st.show) continue;
        std::string text = out.text.empty() ? show(out.value, g, ev.context()) : out.text;
        if (labels) std::cout << "(%o" << n << ") ";
        std::cout << text << "\n";
      } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        worst = std::max(worst, exit_code(e));
      }
    }
    buf.clear();
    prompt();
  }
  if (buf.find_first_not_of(" \t\r\n") != std::string::npos) {
    std::cerr << "error: unterminated statement at end of input\n";
    worst = std::max(worst, static_cast<int>(parse_error));
  }
  return worst;
}

// --- holes -------------------------------------------------------------------

/// "1=3x^2,2=log(x)+x^2": commas split only before `<digits>=`.
std::map<int, Expr> parse_answers(const std::string& text) {
  std::map<int, Expr> out;
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      std::size_t k = j;
      while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
      if (k > j && k < text.size() && text[k] == '=') {
        items.push_back(cur);
        cur.clear();
        continue;
      }
    }
    cur += c;
  }
  items.push_back(cur);
  for (const auto& it : items) {
    auto eq = it.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::usage, "answers look like 1=<expr>,2=<expr>");
    int label = 0;
    try {
      label = std::stoi(it.substr(0, eq));
    } catch (const std::exception&) {
      throw Error(ErrorCode::usage, "hole labels are integers");
    }
    out[label] = parse(it.substr(eq + 1));
  }
  return out;
}

std::vector<Path> parse_paths(const std::string& text) {
  std::vector<Path> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_path(item));
  return out;
}

// --- check -------------------------------------------------------------------

Derivation load_derivation(const std::string& path) {
  if (ends_with(path, ".json")) return derivation_from_json(read_json(path));
  return parse_derivation_text(read_file(path));
}

int run_check(const std::string& file, bool verbose, bool strict, const Global& g) {
  Derivation d = load_derivation(file);
  DerivationReport rep = check_derivation(d);
  if (g.format == "json") {
    std::cout << to_json(rep).dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < rep.steps.size(); ++i) {
      const auto& v = rep.steps[i];
      if (!verbose && v.status != StepStatus::failed) continue;
      std::cout << v.label << " " << step_status_name(v.status) << " [" << just_kind_name(v.kind) << "]";
      if (!v.message.empty()) std::cout << " " << v.message;
      std::cout << "\n";
      if (verbose) {
        std::cout << "    " << show(v.lhs, g) << " = " << show(d.steps[i].rhs, g) << "\n";
        if (v.instance) std::cout << "    instance: " << show(*v.instance, g) << "\n";
      }
    }
    if (rep.conclusion) std::cout << "conclusion: " << show(*rep.conclusion, g) << "\n";
  }
  if (!rep.all_ok) {
    std::cerr << "check failed\n";
    return check_failed;
  }
  if (rep.soft > 0) {
    std::cerr << "warning: " << rep.soft << " algebra step" << (rep.soft == 1 ? "" : "s")
              << " accepted without a full check\n";
    if (strict) return check_failed;
  }
  return ok;
}

// --- serve -------------------------------------------------------------------

httplib::Server* running_server = nullptr;

int run_serve(const Global& g) {
  ServiceOptions opts;
  opts.snapshot = g.snapshot;
  Service service(opts);
  httplib::Server server;
  bind_service(server, service, g.origin);
  running_server = &server;
  std::signal(SIGINT, [](int) {
    if (running_server) running_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (running_server) running_server->stop();
  });
  std::cerr << "listening on http://" << g.host << ":" << g.port << "\n";
  if (!server.listen(g.host, g.port)) {
    std::cerr << "error: cannot listen on " << g.host << ":" << g.port << "\n";
    return io_error;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mex: manipulable expressions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file: format, layout, port, snapshot");
  Global g;
  app.add_option("--format", g.format, "ascii | latex | json | source")
      ->check(CLI::IsMember({"ascii", "latex", "json", "source"}));
  app.add_option("--layout", g.layout, "tree layout: children-right | root-top")
      ->check(CLI::IsMember({"children-right", "root-top"}));
  app.add_option("--port", g.port, "port for serve");
  app.add_option("--snapshot", g.snapshot, "session snapshot file for serve");
  app.add_option("--host", g.host, "address for serve");
  app.add_option("--origin", g.origin, "allowed CORS origin for serve");

  auto* repl = app.add_subcommand("repl", "read statements from stdin; ';' shows, '$' hides");
  bool no_labels = false;
  std::string repl_file;
  repl->add_flag("--no-labels", no_labels, "print results without (%oN) labels");
  repl->add_option("file", repl_file, "read statements from this file instead of stdin");

  auto* eval = app.add_subcommand("eval", "evaluate statements");
  std::string eval_src;
  bool eval_tree = false;
  eval->add_option("-e,--expr", eval_src, "statements")->required();
  eval->add_flag("--tree", eval_tree, "print the expression tree");

  auto* subst = app.add_subcommand("subst", "apply a substitution");
  std::string subst_src, subst_bindings, subst_form_name = "s";
  bool sequential = false;
  subst->add_option("-e,--expr", subst_src, "expression")->required();
  subst->add_option("-s,--subst", subst_bindings, "bindings, e.g. \"[a := 2, f(x) := x^2]\"")->required();
  subst->add_option("--form", subst_form_name, "s | ss | sss | ssu")->check(CLI::IsMember({"s", "ss", "sss", "ssu"}));
  subst->add_flag("--sequential", sequential, "apply bindings one after another instead of in parallel");

  auto* check = app.add_subcommand("check", "check a derivation document (.json or text)");
  std::string check_file;
  bool verbose = false, strict = false, emit_json = false;
  check->add_option("file", check_file, "document")->required();
  check->add_flag("--emit-json", emit_json, "print the parsed document as JSON and exit");
  check->add_flag("-v,--verbose", verbose, "print every step");
  check->add_flag("--strict", strict, "fail on algebra steps that were only accepted softly");

  auto* holes = app.add_subcommand("holes", "make and check fill-in-the-blank exercises");
  holes->require_subcommand(1);
  auto* make = holes->add_subcommand("make", "replace subterms by holes");
  std::string make_src, make_paths, make_out;
  bool student = false;
  make->add_option("-e,--expr", make_src, "expression (statements allowed; the last value is used)")->required();
  make->add_option("-p,--paths", make_paths, "dot-separated paths, comma-separated, e.g. 1.2,2.1")->required();
  make->add_option("-o,--output", make_out, "write the exercise JSON here");
  make->add_flag("--student", student, "print the student view (no source)");
  auto* hcheck = holes->add_subcommand("check", "check proposed answers");
  std::string ex_file, answers;
  hcheck->add_option("file", ex_file, "exercise JSON")->required();
  hcheck->add_option("-a,--answers", answers, "1=<expr>,2=<expr>,...")->required();

  auto* compre = app.add_subcommand("compre", "evaluate a set comprehension");
  std::string compre_src;
  bool compre_tree = false, compre_loops = false, compre_table = false, annotated = false;
  compre->add_option("-e,--expr", compre_src, "comprehension")->required();
  compre->add_flag("--tree", compre_tree, "print the evaluation tree");
  compre->add_flag("--loops", compre_loops, "print the equivalent loop program");
  compre->add_flag("--table", compre_table, "print the evaluation table");
  compre->add_flag("--annotated", annotated, "add endpoint and set columns to the table");

  auto* render = app.add_subcommand("render", "typeset a derivation document");
  std::string render_file, parallel_file;
  bool highlight = false, no_labels_r = false, no_just = false;
  render->add_option("file", render_file, "document (.json or text)")->required();
  render->add_option("--parallel", parallel_file, "second document, set side by side with the first");
  render->add_flag("--highlight", highlight, "mark what each step changed");
  render->add_flag("--no-labels", no_labels_r, "omit step labels");
  render->add_flag("--no-justifications", no_just, "omit justifications");

  auto* serve = app.add_subcommand("serve", "serve the JSON session API over HTTP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : usage;
  }

  try {
    if (*repl && !repl_file.empty()) {
      std::istringstream in(read_file(repl_file));
      return run_repl(in, g, !no_labels);
    }
    if (*repl) return run_repl(std::cin, g, !no_labels);

    if (*eval) {
      Evaluator ev;
      for (const auto& out : ev.run(eval_src)) {
        if (!out.show) continue;
        if (!out.text.empty()) std::cout << out.text << "\n";
        else if (eval_tree) std::cout << ascii_tree(out.value, layout_of(g), {}, ev.context()) << "\n";
        else std::cout << show(out.value, g, ev.context()) << "\n";
      }
      return ok;
    }

    if (*subst) {
      Expr e = parse(subst_src);
      Substitution s = parse_bindings(subst_bindings);
      auto form = *subst_form_from_string(subst_form_name);
      Expr out;
      if (sequential) {
        Expr r = simplify(apply_sequential(e, s));
        out = subst_presentation(e, s, r, form);
      } else {
        out = subst_form(e, s, form);
      }
      std::cout << show(out, g) << "\n";
      return ok;
    }

    if (*check && emit_json) {
      std::cout << to_json(load_derivation(check_file)).dump(2) << "\n";
      return ok;
    }
    if (*check) return run_check(check_file, verbose, strict, g);

    if (*make) {
      Evaluator ev;
      auto outs = ev.run(make_src);
      if (outs.empty()) throw Error(ErrorCode::usage, "nothing to make holes in");
      Exercise x = mkholes(outs.back().value, parse_paths(make_paths));
      Json j = to_json(x, student ? Audience::student : Audience::teacher);
      if (!make_out.empty()) {
        std::ofstream f(make_out);
        if (!f) throw Error(ErrorCode::io, "cannot write " + make_out);
        f << j.dump(2) << "\n";
        std::cout << show(x.statement, g) << "\n";
      } else {
        std::cout << j.dump(2) << "\n";
      }
      return ok;
    }

    if (*hcheck) {
      Exercise x = exercise_from_json(read_json(ex_file));
      HoleReport r = check_holes(x, parse_answers(answers));
      if (g.format == "json") {
        std::cout << to_json(r).dump(2) << "\n";
      } else {
        for (const auto& v : r.per_hole)
          std::cout << "?" << v.label << " " << (v.correct ? "correct" : "incorrect") << "\n";
        std::cout << (r.all_correct ? "all correct" : "not all correct") << "\n";
      }
      return r.all_correct ? ok : check_failed;
    }

    if (*compre) {
      Comprehension c = normalize(parse(compre_src));
      std::cout << show(to_unified(c), g) << "\n";
      Evaluation ev = evaluate(c);
      std::cout << "= " << show(op("set", ev.values), g) << "\n";
      if (compre_tree) std::cout << render_tree(trace_tree(ev.tree), layout_of(g)) << "\n";
      if (compre_table) std::cout << trace_table(c, ev, annotated);
      if (compre_loops) std::cout << emit_loops(c);
      return ok;
    }

    if (*render) {
      LayoutOptions lay;
      lay.tree = layout_of(g);
      lay.highlight_changes = highlight;
      lay.show_labels = !no_labels_r;
      lay.show_justifications = !no_just;
      Derivation d = load_derivation(render_file);
      if (!parallel_file.empty()) {
        Derivation other = load_derivation(parallel_file);
        std::cout << (g.format == "latex" ? parallel_latex(d, other, lay) : parallel_ascii(d, other, lay)) << "\n";
        return ok;
      }
      RenderableDocument doc{d, {}, lay};
      if (g.format == "latex") std::cout << render_latex(doc) << "\n";
      else if (g.format == "json") std::cout << render_json_value(doc).dump(2) << "\n";
      else std::cout << render_ascii(doc) << "\n";
      return ok;
    }

    if (*serve) return run_serve(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return usage;
}
