#pragma once

#include "mex/context.hpp"
#include "mex/expr.hpp"
#include "mex/paths.hpp"
#include "mex/rational.hpp"
#include "mex/registry.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mex {

enum class AnnotationKind { box, highlight, underbrace };

inline const char* annotation_kind_name(AnnotationKind k) {
  switch (k) {
    case AnnotationKind::box: return "box";
    case AnnotationKind::highlight: return "highlight";
    case AnnotationKind::underbrace: return "underbrace";
  }
  return "box";
}

struct Annotation {
  Path path;
  AnnotationKind kind = AnnotationKind::box;
  Expr caption;  // underbrace only
};

struct RenderOptions {
  /// Print lazy operators with their dot ("+.").
  bool show_dots = false;
  /// ASCII surface syntax that parses back to the same tree.
  bool source = false;
  std::vector<Annotation> annotations;
};

inline RenderOptions source_options() {
  RenderOptions o;
  o.source = true;
  o.show_dots = true;
  return o;
}

/// Display width in code points (the box and tree glyphs are one column).
inline std::size_t text_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

namespace detail {

struct Printed {
  std::string text;
  int prec = prec::atom;
  bool negative = false;  // text starts with a minus sign
};

inline bool exact_decimal(const Rational& r, std::string& out) {
  Integer d = denominator(r);
  int twos = 0, fives = 0;
  while (d % 2 == 0) d /= 2, ++twos;
  while (d % 5 == 0) d /= 5, ++fives;
  if (d != 1) return false;
  int places = std::max(twos, fives);
  Integer scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  Integer scaled = numerator(r) * scale / denominator(r);
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string digits = scaled.str();
  while (digits.size() <= static_cast<std::size_t>(places)) digits.insert(digits.begin(), '0');
  out = (neg ? "-" : "") + digits.substr(0, digits.size() - places) + "." + digits.substr(digits.size() - places);
  return true;
}

inline std::string latex_symbol(const std::string& name) {
  static const std::map<std::string, std::string> greek{
      {"alpha", "\\alpha"}, {"beta", "\\beta"},   {"gamma", "\\gamma"}, {"delta", "\\delta"},
      {"theta", "\\theta"}, {"lambda", "\\lambda"}, {"pi", "\\pi"},     {"phi", "\\phi"}};
  if (auto it = greek.find(name); it != greek.end()) return it->second;
  if (name == "R2") return "\\mathbb{R}^2";
  std::string out;
  for (char c : name) {
    if (c == '%') out += "\\%";
    else if (c == '_') out += "\\_";
    else out += c;
  }
  if (text_width(name) > 1 && std::all_of(name.begin(), name.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }))
    return "\\mathrm{" + out + "}";
  return out;
}

inline bool is_elementary_head(const std::string& f) {
  return f == "sin" || f == "cos" || f == "tan" || f == "exp" || f == "log" || f == "sqrt";
}

class Printer {
 public:
  Printer(bool latex, const RenderOptions& opts, const OperatorRegistry& ops)
      : latex_(latex), opts_(opts), ops_(ops) {
    if (!opts.source)
      for (const auto& a : opts.annotations) annotations_.emplace(a.path, a);
  }

  std::string render(const Expr& e) {
    Path p;
    return print(e, p).text;
  }

  Printed print(const Expr& e, Path& path) { return annotate(print_plain(e, path), path); }

 private:
  // Wraps `out` in the markup of the annotation at `path`, if any.
  Printed annotate(Printed out, const Path& path) const {
    auto it = annotations_.find(path);
    if (it == annotations_.end()) return out;
    const Annotation& a = it->second;
    switch (a.kind) {
      case AnnotationKind::box:
        return {latex_ ? "\\boxed{" + out.text + "}" : "⎡" + out.text + "⎤", prec::atom};
      case AnnotationKind::highlight:
        return {latex_ ? "\\mexhl{" + out.text + "}" : "«" + out.text + "»", prec::atom};
      case AnnotationKind::underbrace: {
        Printer sub(latex_, RenderOptions{opts_.show_dots, false, {}}, ops_);
        std::string cap = sub.render(a.caption);
        return {latex_ ? "\\underbrace{" + out.text + "}_{" + cap + "}" : "⎣" + out.text + "⎦_(" + cap + ")",
                prec::atom};
      }
    }
    return out;
  }

  // Child i of e (1-based) printed with the path extended.
  Printed child(const Expr& c, Path& path, int index) {
    path.push_back(index);
    Printed p = print(c, path);
    path.pop_back();
    return p;
  }

  static std::string paren(const std::string& s, bool latex) {
    return latex ? "\\left(" + s + "\\right)" : "(" + s + ")";
  }
  std::string paren(const std::string& s) const { return paren(s, latex_); }

  std::string wrap_if(const Printed& p, bool cond) const { return cond ? paren(p.text) : p.text; }

  std::string op_token(const std::string& name) const {
    const OperatorDef* d = ops_.find(name);
    std::string tok = d ? (latex_ ? d->latex_token() : d->token()) : name;
    if (is_lazy_name(name) && !(opts_.show_dots && !latex_)) {
      const OperatorDef* base = ops_.find(active_name(name));
      tok = base ? (latex_ ? base->latex_token() : base->token()) : active_name(name);
    }
    return tok;
  }

  bool tight(const std::string& name) const {
    std::string a = active_name(name);
    return !latex_ && (a == "*" || a == "/" || a == "^");
  }

  int precedence_of(const std::string& name) const {
    const OperatorDef* d = ops_.find(name);
    return d ? d->precedence : prec::atom;
  }

  Printed number(const Rational& v) const {
    if (is_integer(v)) {
      std::string s = v.str();
      if (v < 0) return {s, prec::negation, true};
      return {s, prec::atom};
    }
    bool neg = v < 0;
    Rational a = neg ? Rational(-v) : v;
    if (latex_) {
      std::string s = "\\frac{" + numerator(a).str() + "}{" + denominator(a).str() + "}";
      return neg ? Printed{"-" + s, prec::negation, true} : Printed{s, prec::product};
    }
    std::string dec;
    if (opts_.source && exact_decimal(v, dec)) return {dec, neg ? prec::negation : prec::atom, neg};
    std::string s = to_fraction_string(v);
    return {s, neg ? prec::negation : prec::product, neg};
  }

  Printed print_plain(const Expr& e, Path& path) {
    switch (e.kind()) {
      case Expr::Kind::num: return number(e.value());
      case Expr::Kind::sym:
        if (latex_) return {latex_symbol(e.name()), prec::atom};
        return {!opts_.source && e.name() == "R2" ? "ℝ²" : e.name(), prec::atom};
      case Expr::Kind::hole: {
        auto l = e.label();
        if (!l) return {"?", prec::atom};
        return {latex_ ? "?_{" + std::to_string(*l) + "}" : "?" + std::to_string(*l), prec::atom};
      }
      case Expr::Kind::lambda: {
        Printed body = child(e.body(), path, 1);
        std::string ps;
        for (std::size_t i = 0; i < e.params().size(); ++i) ps += (i ? ", " : "") + e.params()[i];
        if (latex_) {
          std::string lp;
          for (std::size_t i = 0; i < e.params().size(); ++i) lp += (i ? ", " : "") + latex_symbol(e.params()[i]);
          return {"\\lambda " + lp + ".\\, " + body.text, prec::atom};
        }
        return {std::string(opts_.source ? "lambda" : "λ") + "([" + ps + "], " + body.text + ")", prec::atom};
      }
      case Expr::Kind::quoted: return quoted(e, path);
      case Expr::Kind::app: return application(e, path);
      case Expr::Kind::op: return operation(e, path);
    }
    return {"", prec::atom};
  }

  Printed quoted(const Expr& e, Path& path) {
    const Expr& in = e.inner();
    if (!opts_.source && in.is_op("diff") && in.arity() == 2) {
      path.push_back(1);
      Printed r = annotate(derivative(in, path), path);
      path.pop_back();
      return r;
    }
    Printed inner = child(in, path, 1);
    if (!opts_.source) return inner;
    return {"'" + wrap_if(inner, inner.prec < prec::postfix), prec::postfix - 1};
  }

  // d/dx u, for the noun (and the verb outside source mode).
  Printed derivative(const Expr& d, Path& path) {
    Printed u = child(d.arg(0), path, 1);
    Printed v = child(d.arg(1), path, 2);
    bool par = u.prec < prec::power || u.negative;
    if (latex_) return {"\\frac{d}{d" + v.text + "} " + wrap_if(u, par), prec::product};
    return {"d/d" + v.text + " " + wrap_if(u, par), prec::product};
  }

  Printed application(const Expr& e, Path& path) {
    Printed head = child(e.head(), path, 0);
    const Expr& h = e.head();
    std::string head_text = head.text;
    if (!(h.is_sym() || h.is_lambda() || h.is_app() || h.is_hole())) head_text = paren(head.text);
    std::vector<std::string> args;
    for (std::size_t i = 0; i < e.arity(); ++i) args.push_back(child(e.arg(i), path, static_cast<int>(i + 1)).text);
    std::string joined;
    for (std::size_t i = 0; i < args.size(); ++i) joined += (i ? ", " : "") + args[i];
    if (latex_ && h.is_sym() && is_elementary_head(h.name()) && args.size() == 1) {
      if (h.name() == "sqrt") return {"\\sqrt{" + joined + "}", prec::atom};
      return {"\\" + h.name() + paren(joined), prec::postfix + 10};
    }
    return {head_text + paren(joined), prec::postfix + 10};
  }

  std::string join_children(const Expr& e, Path& path, const std::string& sep, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < e.arity(); ++i) {
      if (i > from) out += sep;
      out += child(e.arg(i), path, static_cast<int>(i + 1)).text;
    }
    return out;
  }

  std::string lbrace() const { return latex_ ? "\\{" : "{"; }
  std::string rbrace() const { return latex_ ? "\\}" : "}"; }

  Printed operation(const Expr& e, Path& path) {
    const std::string& n = e.name();
    const std::string a = active_name(n);
    if (n == "list") return {"[" + join_children(e, path, ", ") + "]", prec::atom};
    if (n == "set") return {lbrace() + join_children(e, path, ", ") + rbrace(), prec::atom};
    if (n == "tuple") return {paren(join_children(e, path, ", ")), prec::atom};
    if (n == "range" && e.arity() == 2)
      return {lbrace() + join_children(e, path, latex_ ? ", \\dots, " : ", ..., ") + rbrace(), prec::atom};
    if ((n == "compre" || n == "setof") && e.arity() >= 1) {
      std::string head = child(e.arg(0), path, 1).text;
      std::string bar = latex_ ? " \\mid " : " | ";
      return {lbrace() + head + bar + join_children(e, path, ", ", 1) + rbrace(), prec::atom};
    }
    if (n == "unified") return {lbrace() + join_children(e, path, "; ") + rbrace(), prec::atom};
    if (n == "index" && e.arity() == 2) {
      Printed base = child(e.arg(0), path, 1);
      Printed i = child(e.arg(1), path, 2);
      return {wrap_if(base, base.prec < prec::postfix) + "[" + i.text + "]", prec::postfix};
    }
    if (n == "V") return v_matrix(e, path);
    if (n == "row") return {join_children(e, path, ", "), prec::atom};
    if (n == "_s_" && e.arity() == 2 && e.arg(1).is_op("list") && all_bindings(e.arg(1))) {
      Printed base = child(e.arg(0), path, 1);
      path.push_back(2);
      std::string items;
      for (std::size_t i = 0; i < e.arg(1).arity(); ++i) {
        if (i) items += ", ";
        items += child(e.arg(1).arg(i), path, static_cast<int>(i + 1)).text;
      }
      Printed list = annotate({latex_ ? "\\left[" + items + "\\right]" : "[" + items + "]", prec::atom}, path);
      path.pop_back();
      return {wrap_if(base, base.prec < prec::postfix) + list.text, prec::postfix};
    }
    if (n == "_ss_" && e.arity() == 2 && !opts_.source) {
      Printed base = child(e.arg(0), path, 1);
      Printed v = child(e.arg(1), path, 2);
      return {wrap_if(base, base.prec < prec::postfix) + (latex_ ? " " : "") + v.text, prec::postfix};
    }
    if (n == "underbrace" && e.arity() == 2) {
      Printed top = child(e.arg(0), path, 1);
      Printed cap = caption(e, path);
      if (latex_) return {"\\underbrace{" + top.text + "}_{" + cap.text + "}", prec::atom};
      return {"underbrace(" + top.text + ", " + cap.text + ")", prec::atom};
    }
    if (a == "diff" && e.arity() == 2 && !opts_.source) return derivative(e, path);
    if (n == ":=" && in_v_ && !latex_) {
      Printed l = child(e.arg(0), path, 1), r = child(e.arg(1), path, 2);
      return {l.text + ":=" + r.text, prec::bind};
    }
    const OperatorDef* def = ops_.find(n);
    if (!def || def->fixity == Fixity::matchfix || def->fixity == Fixity::function) {
      std::string name = def ? (latex_ ? def->latex_token() : def->token()) : n;
      if (latex_) name = "\\operatorname{" + name + "}";
      return {name + paren(join_children(e, path, ", ")), prec::postfix + 10};
    }
    switch (def->fixity) {
      case Fixity::prefix: return prefix(e, *def, path);
      case Fixity::postfix: {
        Printed x = child(e.arg(0), path, 1);
        bool par = !(e.arg(0).is_app() && x.prec >= prec::postfix);
        return {wrap_if(x, par) + op_token(n), prec::postfix};
      }
      default: break;
    }
    if (a == "^" && !opts_.source && e.arity() == 2 && e.arg(1).is_num() && e.arg(1).value() < 0) {
      Printed base = child(e.arg(0), path, 1);
      Rational k = -e.arg(1).value();
      bool bpar = base.prec <= prec::power || base.negative;
      std::string den = k == 1 ? base.text : wrap_if(base, bpar) + (latex_ ? "^{" + number(k).text + "}" : "^" + wrap_if(number(k), !is_integer(k)));
      if (latex_) return {"\\frac{1}{" + den + "}", prec::product};
      bool dpar = k == 1 ? base.prec <= prec::product || base.negative : false;
      return {"1/" + (dpar ? paren(den) : den), prec::product};
    }
    if (a == "*" && !opts_.source) {
      if (auto f = fraction(e, path)) return *f;
    }
    if (a == "/" && latex_ && e.arity() == 2) {
      Printed x = child(e.arg(0), path, 1), y = child(e.arg(1), path, 2);
      return {"\\frac{" + x.text + "}{" + y.text + "}", prec::product};
    }
    return infix(e, *def, path);
  }

  static bool all_bindings(const Expr& list) {
    for (const auto& b : list.args())
      if (!b.is_op(":=") || b.arity() != 2) return false;
    return true;
  }

  Printed caption(const Expr& ub, Path& path) {
    const Expr& c = ub.arg(1);
    if (c.is_op("=") && c.arity() == 2) {
      path.push_back(2);
      Printed r = child(c.arg(1), path, 2);
      path.pop_back();
      return r;
    }
    return child(c, path, 2);
  }

  Printed v_matrix(const Expr& e, Path& path) {
    bool saved = in_v_;
    in_v_ = true;
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < e.arity(); ++i) rows.push_back(child(e.arg(i), path, static_cast<int>(i + 1)).text);
    in_v_ = saved;
    if (latex_) {
      std::string body;
      for (std::size_t i = 0; i < rows.size(); ++i) body += (i ? " \\\\ " : "") + rows[i];
      return {"\\begin{bmatrix} " + body + " \\end{bmatrix}", prec::atom};
    }
    std::string body;
    for (std::size_t i = 0; i < rows.size(); ++i) body += (i ? "; " : "") + rows[i];
    return {"[" + body + "]", prec::atom};
  }

  Printed prefix(const Expr& e, const OperatorDef& def, Path& path) {
    Printed x = child(e.arg(0), path, 1);
    std::string tok = op_token(e.name());
    bool starts_numeric = !x.text.empty() && (std::isdigit(static_cast<unsigned char>(x.text[0])) || x.text[0] == '-');
    bool par = x.prec <= def.precedence || (active_name(e.name()) == "neg" && starts_numeric);
    bool word = !tok.empty() && std::isalpha(static_cast<unsigned char>(tok[0]));
    std::string sep = word ? " " : "";
    if (latex_ && !tok.empty() && tok[0] == '\\') sep = " ";
    return {tok + sep + wrap_if(x, par), def.precedence, tok == "-"};
  }

  // Display form of products with negative powers: num/den.
  std::optional<Printed> fraction(const Expr& e, Path& path) {
    std::vector<int> numer, denom;
    Rational coef_num = 1, coef_den = 1;
    bool has_den = false;
    for (std::size_t i = 0; i < e.arity(); ++i) {
      const Expr& f = e.arg(i);
      if (f.is_op("^") && f.arity() == 2 && f.arg(1).is_num() && f.arg(1).value() < 0) {
        denom.push_back(static_cast<int>(i));
        has_den = true;
      } else if (i == 0 && f.is_num() && !is_integer(f.value())) {
        coef_num = Rational(numerator(f.value()));
        coef_den = Rational(denominator(f.value()));
        has_den = true;
      } else {
        numer.push_back(static_cast<int>(i));
      }
    }
    if (!has_den) return std::nullopt;
    bool negative = coef_num < 0;
    if (negative) coef_num = -coef_num;
    std::vector<Printed> top, bottom;
    if (coef_num != 1) top.push_back(number(coef_num));
    for (int i : numer) top.push_back(child(e.arg(static_cast<std::size_t>(i)), path, i + 1));
    if (coef_den != 1) bottom.push_back(number(coef_den));
    for (int i : denom) {
      const Expr& f = e.arg(static_cast<std::size_t>(i));
      path.push_back(i + 1);
      Printed base = child(f.arg(0), path, 1);
      path.pop_back();
      Rational k = -f.arg(1).value();
      if (k == 1) {
        bottom.push_back(base);
      } else {
        Printed exp = number(k);
        bool bpar = base.prec <= prec::power || base.negative;
        std::string t = latex_ ? wrap_if(base, bpar) + "^{" + exp.text + "}"
                               : wrap_if(base, bpar) + "^" + wrap_if(exp, exp.prec < prec::atom);
        bottom.push_back({t, prec::power});
      }
    }
    auto join = [&](const std::vector<Printed>& xs, bool for_latex_frac) {
      if (xs.empty()) return Printed{"1", prec::atom};
      if (xs.size() == 1) return xs.front();
      std::string s;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        bool par = xs[i].prec < prec::product || (i > 0 && xs[i].negative);
        if (i) s += latex_ ? " \\cdot " : "*";
        s += for_latex_frac ? (par ? paren(xs[i].text) : xs[i].text) : wrap_if(xs[i], par);
      }
      return Printed{s, prec::product};
    };
    Printed t = join(top, latex_), b = join(bottom, latex_);
    std::string text;
    if (latex_) {
      text = "\\frac{" + t.text + "}{" + b.text + "}";
    } else {
      text = wrap_if(t, t.prec < prec::product) + "/" + wrap_if(b, b.prec <= prec::product);
    }
    if (negative) return Printed{"-" + text, prec::negation, true};
    return Printed{text, prec::product};
  }

  // Does the product term start with a negative coefficient? Returns the
  // printed absolute value when it does.
  std::optional<std::string> negated_term(const Expr& t, Path& path, int index) {
    if (opts_.source) return std::nullopt;
    if (annotations_.count(path_with(path, index))) return std::nullopt;
    if (t.is_num() && t.value() < 0) return number(-t.value()).text;
    if (is_op_active(t, "neg")) {
      path.push_back(index);
      Printed x = child(t.arg(0), path, 1);
      path.pop_back();
      return wrap_if(x, x.prec <= prec::sum || x.negative);
    }
    if (t.is_op("*") && t.arity() >= 2 && t.arg(0).is_num() && t.arg(0).value() < 0) {
      std::vector<Expr> rest(t.args().begin(), t.args().end());
      Rational c = -rest[0].value();
      if (c == 1)
        rest.erase(rest.begin());
      else
        rest[0] = num(c);
      Expr positive = rest.size() == 1 ? rest.front() : op("*", rest);
      // Paths inside a rewritten term no longer line up; annotated terms keep
      // their literal form (checked above).
      Path scratch;
      Printer sub(latex_, RenderOptions{opts_.show_dots, false, {}}, ops_);
      Printed p = sub.print(positive, scratch);
      return wrap_if(p, p.prec <= prec::sum);
    }
    return std::nullopt;
  }

  static Path path_with(const Path& p, int i) {
    Path q = p;
    q.push_back(i);
    return q;
  }

  static bool is_op_active(const Expr& e, const char* name) { return e.is_op() && active_name(e.name()) == name; }

  Printed infix(const Expr& e, const OperatorDef& def, Path& path) {
    const std::string& n = e.name();
    const std::string a = active_name(n);
    std::string tok = op_token(n);
    std::string sep;
    if (tight(n)) sep = tok;
    else if (latex_ && a == "*") sep = " \\cdot ";
    else sep = " " + tok + " ";
    int p = def.precedence;
    std::string out;
    std::vector<std::size_t> order(e.arity());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (a == "+" && !opts_.source && e.arity() > 1 && negated_term(e.arg(0), path, 1)) {
      // display 5 - 3x rather than -3x + 5
      for (std::size_t k = 1; k < e.arity(); ++k) {
        if (!negated_term(e.arg(k), path, static_cast<int>(k + 1))) {
          order.erase(order.begin() + static_cast<std::ptrdiff_t>(k));
          order.insert(order.begin(), k);
          break;
        }
      }
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      const Expr& c = e.arg(order[i]);
      int index = static_cast<int>(order[i] + 1);
      if (i > 0 && a == "+") {
        if (auto neg = negated_term(c, path, index)) {
          out += " - " + *neg;
          continue;
        }
      }
      Printed x = child(c, path, index);
      bool par = needs_parens(e, def, i, c, x);
      std::string piece = wrap_if(x, par);
      if (i > 0) {
        if (latex_ && a == "*") out += product_sep(e.arg(order[i - 1]), c, piece);
        else if (latex_ && a == "^") out += "^";
        else out += sep;
      }
      if (latex_ && a == "^" && i > 0) piece = "{" + (par ? x.text : piece) + "}";
      out += piece;
    }
    return {out, p, !out.empty() && out[0] == '-'};
  }

  std::string product_sep(const Expr& left, const Expr& right, const std::string& piece) const {
    bool left_number = left.is_num() && is_integer(left.value()) && left.value() >= 0;
    bool right_starts_letter = !piece.empty() && (std::isalpha(static_cast<unsigned char>(piece[0])) || piece[0] == '\\' || piece[0] == '(');
    bool right_number = right.is_num();
    if (left_number && right_starts_letter && !right_number && piece.rfind("\\frac", 0) != 0) return " ";
    return " \\cdot ";
  }

  bool needs_parens(const Expr& parent, const OperatorDef& def, std::size_t i, const Expr& c, const Printed& x) const {
    const std::string a = active_name(parent.name());
    int p = def.precedence;
    if (latex_ && a == "^" && i > 0) return false;
    if (c.is_num() && c.value() < 0 && is_integer(c.value())) {
      if (a == "*" && i == 0) return false;
      if (a == "^" && i > 0 && !latex_) return true;
    }
    if (x.negative && a == "*" && i == 0 && !opts_.source) return x.prec < p && !(c.is_num());
    if (x.prec < p) return true;
    if (x.prec > p) return false;
    // equal precedence
    switch (def.fixity) {
      case Fixity::nary:
        if (c.is_op() && c.name() == parent.name()) return true;
        return i > 0;
      default:
        break;
    }
    if (def.assoc == Assoc::left) return i > 0;
    if (def.assoc == Assoc::right) return i == 0;
    return true;
  }

  bool latex_;
  RenderOptions opts_;
  const OperatorRegistry& ops_;
  std::map<Path, Annotation> annotations_;
  bool in_v_ = false;
};

}  // namespace detail

/// One-line ASCII rendering. Display mode hides lazy dots and prints
/// fractions; `source` mode prints surface syntax that parses back.
inline std::string to_ascii(const Expr& e, const RenderOptions& opts = {}, const Context& ctx = Context::standard()) {
  if (!opts.source && e.is_op("underbrace") && e.arity() == 2) {
    // Top-level underbrace: three lines, the caption centered under a brace.
    detail::Printer top(false, opts, ctx.operators);
    RenderOptions cap_opts = opts;
    cap_opts.annotations.clear();
    detail::Printer capp(false, cap_opts, ctx.operators);
    std::string t = top.render(e.arg(0));
    const Expr& c = e.arg(1);
    std::string cap = capp.render(c.is_op("=") && c.arity() == 2 ? c.arg(1) : c);
    std::size_t w = std::max<std::size_t>(text_width(t), 3);
    std::size_t mid = w / 2;
    std::string brace = "└";
    for (std::size_t i = 1; i + 1 < w; ++i) brace += i == mid ? "┬" : "─";
    brace += "┘";
    std::size_t cw = text_width(cap);
    std::size_t pad = mid >= cw / 2 ? mid - cw / 2 : 0;
    return t + "\n" + brace + "\n" + std::string(pad, ' ') + cap;
  }
  return detail::Printer(false, opts, ctx.operators).render(e);
}

/// Surface syntax; parse(to_source(e)) == e for every parsed e.
inline std::string to_source(const Expr& e, const Context& ctx = Context::standard()) {
  return detail::Printer(false, source_options(), ctx.operators).render(e);
}

inline std::string to_latex(const Expr& e, const RenderOptions& opts = {}, const Context& ctx = Context::standard()) {
  RenderOptions o = opts;
  o.source = false;
  return detail::Printer(true, o, ctx.operators).render(e);
}

// ---------------------------------------------------------------------------
// Trees

struct TreeNode {
  std::string label;
  std::vector<TreeNode> children;
};

enum class TreeLayout { children_right, root_top };

inline std::optional<TreeLayout> tree_layout_from_string(std::string_view s) {
  if (s == "children-right" || s == "right") return TreeLayout::children_right;
  if (s == "root-top" || s == "top") return TreeLayout::root_top;
  return std::nullopt;
}

namespace detail {

inline std::string node_label(const Expr& e, const RenderOptions& opts, const OperatorRegistry& ops) {
  switch (e.kind()) {
    case Expr::Kind::num: return to_display_string(e.value());
    case Expr::Kind::sym: return e.name();
    case Expr::Kind::hole: return e.label() ? "?" + std::to_string(*e.label()) : "?";
    case Expr::Kind::lambda: return "λ";
    case Expr::Kind::quoted: return "'" + node_label(e.inner(), opts, ops);
    case Expr::Kind::app: return e.head().is_sym() ? e.head().name() : "ap";
    case Expr::Kind::op: {
      const std::string& n = e.name();
      if (n == "list") return "[]";
      if (n == "set") return "{}";
      if (n == "tuple") return "()";
      const OperatorDef* d = ops.find(n);
      if (is_lazy_name(n) && !opts.show_dots) {
        const OperatorDef* base = ops.find(active_name(n));
        return base ? base->token() : active_name(n);
      }
      return d ? d->token() : n;
    }
  }
  return "";
}

inline TreeNode build_tree(const Expr& e, Path& path, const RenderOptions& opts, const OperatorRegistry& ops,
                           const std::map<Path, AnnotationKind>& marks) {
  TreeNode node{node_label(e, opts, ops), {}};
  auto mark = [&](const Path& p, std::string& label) {
    auto it = marks.find(p);
    if (it == marks.end()) return;
    if (it->second == AnnotationKind::highlight) label = "«" + label + "»";
    else label = "⎡" + label + "⎤";
  };
  auto add = [&](const Expr& c, int index) {
    path.push_back(index);
    node.children.push_back(build_tree(c, path, opts, ops, marks));
    path.pop_back();
  };
  const Expr& shape = e.is_quoted() ? e.inner() : e;
  Path own = path;
  if (e.is_quoted()) path.push_back(1);
  switch (shape.kind()) {
    case Expr::Kind::lambda:
      for (const auto& p : shape.params()) node.children.push_back(TreeNode{p, {}});
      add(shape.body(), 1);
      break;
    case Expr::Kind::app:
      if (!shape.head().is_sym()) add(shape.head(), 0);
      for (std::size_t i = 0; i < shape.arity(); ++i) add(shape.arg(i), static_cast<int>(i + 1));
      break;
    case Expr::Kind::op:
      for (std::size_t i = 0; i < shape.arity(); ++i) add(shape.arg(i), static_cast<int>(i + 1));
      break;
    default: break;
  }
  if (e.is_quoted()) {
    mark(path, node.label);
    path.pop_back();
  }
  mark(own, node.label);
  return node;
}

inline std::vector<std::string> layout_right(const TreeNode& n) {
  if (n.children.empty()) return {n.label};
  std::vector<std::string> out;
  std::string pad(text_width(n.label) + 1, ' ');
  if (n.children.size() == 1) {
    auto sub = layout_right(n.children[0]);
    out.push_back(n.label + "─" + sub[0]);
    std::string p2(text_width(n.label) + 1, ' ');
    for (std::size_t i = 1; i < sub.size(); ++i) out.push_back(p2 + sub[i]);
    return out;
  }
  for (std::size_t k = 0; k < n.children.size(); ++k) {
    auto sub = layout_right(n.children[k]);
    bool first = k == 0, last = k + 1 == n.children.size();
    std::string lead = first ? n.label + "─┬─" : pad + (last ? "└─" : "├─");
    std::string cont = pad + (last ? "  " : "│ ");
    out.push_back(lead + sub[0]);
    for (std::size_t i = 1; i < sub.size(); ++i) out.push_back(cont + sub[i]);
  }
  return out;
}

struct Block {
  std::vector<std::string> lines;
  std::size_t width = 0;
  std::size_t anchor = 0;  // column of the node label's center
};

inline std::string pad_to(std::string s, std::size_t w) {
  std::size_t cur = text_width(s);
  if (cur < w) s += std::string(w - cur, ' ');
  return s;
}

inline Block layout_top(const TreeNode& n) {
  std::size_t lw = text_width(n.label);
  if (n.children.empty()) return Block{{n.label}, lw, lw / 2};
  std::vector<Block> kids;
  for (const auto& c : n.children) kids.push_back(layout_top(c));
  const std::size_t gap = 2;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (i) total += gap;
    offsets.push_back(total);
    total += kids[i].width;
  }
  std::size_t first_anchor = offsets.front() + kids.front().anchor;
  std::size_t last_anchor = offsets.back() + kids.back().anchor;
  std::size_t center = (first_anchor + last_anchor) / 2;
  // Shift children right if the label would start left of column 0.
  std::size_t shift = center < lw / 2 ? lw / 2 - center : 0;
  center += shift;
  std::size_t width = std::max(total + shift, center - lw / 2 + lw);
  Block b;
  b.width = width;
  b.anchor = center;
  std::string label_line = std::string(center - lw / 2, ' ') + n.label;
  b.lines.push_back(pad_to(label_line, width));
  std::string conn;
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < kids.size(); ++i) anchors.push_back(offsets[i] + kids[i].anchor + shift);
  for (std::size_t col = 0; col < width; ++col) {
    bool is_anchor = std::find(anchors.begin(), anchors.end(), col) != anchors.end();
    bool inside = col >= anchors.front() && col <= anchors.back();
    std::string g = " ";
    if (kids.size() == 1) {
      g = col == anchors.front() ? "│" : " ";
    } else if (inside) {
      if (col == center) g = is_anchor ? "┼" : "┴";
      else if (col == anchors.front()) g = "┌";
      else if (col == anchors.back()) g = "┐";
      else if (is_anchor) g = "┬";
      else g = "─";
    }
    conn += g;
  }
  b.lines.push_back(conn);
  std::size_t height = 0;
  for (const auto& k : kids) height = std::max(height, k.lines.size());
  for (std::size_t row = 0; row < height; ++row) {
    std::string line(shift, ' ');
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) line += std::string(gap, ' ');
      line += row < kids[i].lines.size() ? pad_to(kids[i].lines[row], kids[i].width) : std::string(kids[i].width, ' ');
    }
    b.lines.push_back(pad_to(line, width));
  }
  return b;
}

inline std::string rstrip_join(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string l = lines[i];
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l;
    if (i + 1 < lines.size()) out += "\n";
  }
  return out;
}

}  // namespace detail

inline TreeNode expr_tree(const Expr& e, const RenderOptions& opts = {}, const Context& ctx = Context::standard()) {
  std::map<Path, AnnotationKind> marks;
  for (const auto& a : opts.annotations) marks[a.path] = a.kind;
  Path p;
  return detail::build_tree(e, p, opts, ctx.operators, marks);
}

inline std::string render_tree(const TreeNode& t, TreeLayout layout = TreeLayout::children_right) {
  if (layout == TreeLayout::children_right) return detail::rstrip_join(detail::layout_right(t));
  return detail::rstrip_join(detail::layout_top(t).lines);
}

inline std::string ascii_tree(const Expr& e, TreeLayout layout = TreeLayout::children_right,
                              const RenderOptions& opts = {}, const Context& ctx = Context::standard()) {
  return render_tree(expr_tree(e, opts, ctx), layout);
}

/// Boxed rendering of the subterm at `p`, as dpart shows it.
inline RenderOptions boxed_at(const Path& p, RenderOptions opts = {}) {
  opts.annotations.push_back(Annotation{p, AnnotationKind::box, Expr()});
  return opts;
}

}  // namespace mex
