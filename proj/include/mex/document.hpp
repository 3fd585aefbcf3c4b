#pragma once
// Whole-document rendering: an expression, derivation, evaluation trace or
// exercise plus annotations and layout switches, to ASCII, LaTeX or JSON.
// Also the two-column layout that sets two derivations side by side.

#include "mex/comprehension.hpp"
#include "mex/derivation.hpp"
#include "mex/json.hpp"
#include "mex/paths.hpp"
#include "mex/render.hpp"

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

namespace mex {

struct LayoutOptions {
  TreeLayout tree = TreeLayout::children_right;
  bool as_tree = false;  // expressions drawn as trees instead of inline
  bool show_labels = true;
  bool show_justifications = true;
  bool highlight_changes = false;  // derivations: mark what each step changed
  Audience audience = Audience::student;
};

struct RenderableDocument {
  std::variant<Expr, Derivation, TraceNode, Exercise> base;
  std::vector<Annotation> annotations;  // paths into the expression or exercise statement
  LayoutOptions layout;
};

namespace detail {

inline const Expr* annotated_expr(const RenderableDocument& d) {
  if (auto e = std::get_if<Expr>(&d.base)) return e;
  if (auto x = std::get_if<Exercise>(&d.base)) return &x->statement;
  return nullptr;
}

inline void check_annotations(const RenderableDocument& d) {
  if (d.annotations.empty()) return;
  const Expr* e = annotated_expr(d);
  if (!e) throw Error(ErrorCode::path, "annotations apply to expressions and exercises only");
  for (const auto& a : d.annotations) part(*e, a.path);
}

inline RenderOptions with_annotations(const std::vector<Annotation>& as) {
  RenderOptions o;
  o.annotations = as;
  return o;
}

struct Row {
  std::string particle, lhs, rhs, label, just;
};

inline std::vector<Row> derivation_rows(const Derivation& d, const LayoutOptions& lay, bool latex, const Context& ctx) {
  std::vector<StepVerdict> verdicts;
  if (lay.highlight_changes) verdicts = check_derivation(d, ctx).steps;
  std::vector<Row> rows;
  for (std::size_t i = 0; i < d.steps.size(); ++i) {
    const Step& s = d.steps[i];
    RenderOptions lo, ro;
    if (lay.highlight_changes)
      for (const auto& [a, b] : verdicts[i].highlight) {
        lo.annotations.push_back({a, AnnotationKind::highlight, Expr()});
        ro.annotations.push_back({b, AnnotationKind::highlight, Expr()});
      }
    auto show = [&](const Expr& e, const RenderOptions& o) { return latex ? to_latex(e, o, ctx) : to_ascii(e, o, ctx); };
    Row r;
    r.particle = particle_name(s.particle);
    if (s.lhs) r.lhs = show(*s.lhs, lo);
    r.rhs = show(s.rhs, ro);
    if (lay.show_labels) r.label = s.label;
    if (lay.show_justifications) r.just = justification_text(s.just, ctx);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string pad_right(const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, text_width(s)), ' '); }
inline std::string pad_left(const std::string& s, std::size_t w) { return std::string(w - std::min(w, text_width(s)), ' ') + s; }

inline std::string rtrim(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

// Fixed-width lines: particle, L right-aligned, "=", R, label, justification.
inline std::vector<std::string> ascii_derivation_lines(const Derivation& d, const LayoutOptions& lay, const Context& ctx) {
  auto rows = derivation_rows(d, lay, false, ctx);
  std::size_t wp = 0, wl = 0, wr = 0, wlab = 0;
  for (const auto& r : rows) {
    wp = std::max(wp, text_width(r.particle));
    wl = std::max(wl, text_width(r.lhs));
    wr = std::max(wr, text_width(r.rhs));
    wlab = std::max(wlab, text_width(r.label));
  }
  std::vector<std::string> out;
  if (!d.title.empty()) out.push_back(d.title);
  for (const auto& r : rows) {
    std::string line;
    if (wp) line += pad_right(r.particle, wp) + " ";
    if (d.columns) {
      line += pad_left(r.lhs, wl) + " = " + pad_right(r.rhs, wr);
    } else {
      line += (r.lhs.empty() ? "" : r.lhs + " ") + "= " + r.rhs;
    }
    if (wlab) line += "  " + pad_right(r.label, wlab);
    if (!r.just.empty()) line += "  " + r.just;
    out.push_back(rtrim(line));
  }
  return out;
}

inline std::string latex_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\textbackslash{}";
    else if (c == '{' || c == '}' || c == '_' || c == '&' || c == '%' || c == '$' || c == '#') out += std::string("\\") + c;
    else if (c == '^') out += "\\^{}";
    else out += c;
  }
  return "\\text{" + out + "}";
}

inline std::string latex_derivation(const Derivation& d, const LayoutOptions& lay, const Context& ctx) {
  auto rows = derivation_rows(d, lay, true, ctx);
  bool particles = std::any_of(rows.begin(), rows.end(), [](const Row& r) { return !r.particle.empty(); });
  std::string spec = std::string(particles ? "l" : "") + (d.columns ? "rcl" : "l") + (lay.show_labels ? "l" : "") +
                     (lay.show_justifications ? "l" : "");
  std::string out = "\\begin{array}{" + spec + "}\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    std::vector<std::string> cells;
    if (particles) cells.push_back(r.particle.empty() ? "" : latex_text(r.particle));
    if (d.columns) {
      cells.push_back(r.lhs);
      cells.push_back("=");
      cells.push_back(r.rhs);
    } else {
      cells.push_back((r.lhs.empty() ? "" : r.lhs + " ") + "= " + r.rhs);
    }
    if (lay.show_labels) cells.push_back(latex_text(r.label));
    if (lay.show_justifications) cells.push_back(r.just.empty() ? "" : latex_text(r.just));
    std::string line = "  ";
    for (std::size_t k = 0; k < cells.size(); ++k) line += (k ? " & " : "") + cells[k];
    out += line + (i + 1 < rows.size() ? " \\\\\n" : "\n");
  }
  return out + "\\end{array}";
}

inline void latex_trace(const TraceNode& n, int depth, std::vector<std::string>& lines) {
  std::string row = "\\quad";
  for (int i = 1; i < depth; ++i) row += "\\quad";
  row += " " + n.var + " = " + (n.value ? to_latex(*n.value) : std::string("?"));
  if (n.result) row += " \\to " + to_latex(*n.result);
  if (n.pruned) row += n.pruned_reason == "filter" ? " \\quad \\times" : " \\quad \\emptyset";
  lines.push_back(row);
  for (const auto& c : n.children) latex_trace(c, depth + 1, lines);
}

}  // namespace detail

inline std::string render_ascii(const RenderableDocument& d, const Context& ctx = Context::standard()) {
  detail::check_annotations(d);
  RenderOptions opts = detail::with_annotations(d.annotations);
  if (const Expr* e = detail::annotated_expr(d))
    return d.layout.as_tree ? ascii_tree(*e, d.layout.tree, opts, ctx) : to_ascii(*e, opts, ctx);
  if (auto der = std::get_if<Derivation>(&d.base)) {
    auto lines = detail::ascii_derivation_lines(*der, d.layout, ctx);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? "\n" : "") + lines[i];
    return out;
  }
  return render_tree(trace_tree(std::get<TraceNode>(d.base)), d.layout.tree);
}

inline std::string render_latex(const RenderableDocument& d, const Context& ctx = Context::standard()) {
  detail::check_annotations(d);
  RenderOptions opts = detail::with_annotations(d.annotations);
  if (const Expr* e = detail::annotated_expr(d)) return to_latex(*e, opts, ctx);
  if (auto der = std::get_if<Derivation>(&d.base)) return detail::latex_derivation(*der, d.layout, ctx);
  std::vector<std::string> lines;
  for (const auto& c : std::get<TraceNode>(d.base).children) detail::latex_trace(c, 1, lines);
  std::string out = "\\begin{array}{l}\n";
  for (std::size_t i = 0; i < lines.size(); ++i) out += "  " + lines[i] + (i + 1 < lines.size() ? " \\\\\n" : "\n");
  return out + "\\end{array}";
}

inline Json render_json_value(const RenderableDocument& d, const Context& ctx = Context::standard()) {
  detail::check_annotations(d);
  Json out;
  if (auto e = std::get_if<Expr>(&d.base)) {
    out = {{"expr", to_json(*e)}};
  } else if (auto x = std::get_if<Exercise>(&d.base)) {
    out = {{"exercise", to_json(*x, d.layout.audience)}};
  } else if (auto der = std::get_if<Derivation>(&d.base)) {
    out = {{"derivation", to_json(*der)}};
    if (d.layout.highlight_changes) out["report"] = to_json(check_derivation(*der, ctx), ctx);
  } else {
    out = {{"trace", to_json(std::get<TraceNode>(d.base))}};
  }
  Json as = Json::array();
  for (const auto& a : d.annotations) as.push_back(to_json(a));
  out["annotations"] = as;
  return out;
}

inline std::string render_json(const RenderableDocument& d, const Context& ctx = Context::standard()) {
  return render_json_value(d, ctx).dump();
}

/// Two derivations side by side, row k next to row k; the shorter side
/// is padded with blank rows.
inline std::string parallel_ascii(const Derivation& left, const Derivation& right, const LayoutOptions& lay = {},
                                  const Context& ctx = Context::standard()) {
  auto a = detail::ascii_derivation_lines(left, lay, ctx);
  auto b = detail::ascii_derivation_lines(right, lay, ctx);
  std::size_t w = 0;
  for (const auto& l : a) w = std::max(w, text_width(l));
  std::string out;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    std::string l = i < a.size() ? a[i] : "";
    std::string r = i < b.size() ? b[i] : "";
    out += (i ? "\n" : "") + detail::rtrim(detail::pad_right(l, w) + "  │  " + r);
  }
  return out;
}

inline std::string parallel_latex(const Derivation& left, const Derivation& right, const LayoutOptions& lay = {},
                                  const Context& ctx = Context::standard()) {
  LayoutOptions l = lay;
  l.show_justifications = false;
  auto a = detail::derivation_rows(left, l, true, ctx);
  auto b = detail::derivation_rows(right, l, true, ctx);
  std::string spec = lay.show_labels ? "rcll|rcll" : "rcl|rcl";
  std::string out = "\\begin{array}{" + spec + "}\n";
  auto cells = [&](const std::vector<detail::Row>& rows, std::size_t i) {
    if (i >= rows.size()) return std::string(lay.show_labels ? " & & & " : " & & ");
    const auto& r = rows[i];
    return r.lhs + " & = & " + r.rhs + (lay.show_labels ? " & " + detail::latex_text(r.label) : "");
  };
  std::size_t n = std::max(a.size(), b.size());
  if (!left.title.empty() || !right.title.empty()) {
    std::string span = lay.show_labels ? "4" : "3";
    out += "  \\multicolumn{" + span + "}{c|}{" + detail::latex_text(left.title) + "} & \\multicolumn{" + span + "}{c}{" +
           detail::latex_text(right.title) + "} \\\\\n";
  }
  for (std::size_t i = 0; i < n; ++i) out += "  " + cells(a, i) + " & " + cells(b, i) + (i + 1 < n ? " \\\\\n" : "\n");
  return out + "\\end{array}";
}

}  // namespace mex
