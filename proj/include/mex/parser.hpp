#pragma once

#include "mex/binding.hpp"
#include "mex/context.hpp"
#include "mex/error.hpp"
#include "mex/expr.hpp"
#include "mex/registry.hpp"

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace mex {

namespace detail {

enum class TokenKind { number, identifier, symbol, hole, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  SourceSpan span;
  std::optional<int> hole_label;
};

class Lexer {
 public:
  Lexer(std::string_view src, const OperatorRegistry& ops) : src_(src), symbolic_(ops.symbolic_tokens()) {
    // Punctuation the grammar needs regardless of the registry.
    for (const char* p : {"...", "(", ")", "[", "]", "{", "}", ",", "|", ";", "'"}) symbolic_.push_back(p);
    std::sort(symbolic_.begin(), symbolic_.end(),
              [](const auto& a, const auto& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back(Token{TokenKind::end, "", {pos_, pos_}, std::nullopt});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        auto close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos)
          throw Error(ErrorCode::syntax, "unterminated comment", SourceSpan{pos_, src_.size()});
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  bool digit_at(std::size_t i) const {
    return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
  }

  Token next() {
    std::size_t start = pos_;
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && digit_at(pos_ + 1) && !starts_with_dots())) {
      while (digit_at(pos_)) ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '.' && digit_at(pos_ + 1)) {
        ++pos_;
        while (digit_at(pos_)) ++pos_;
      }
      return Token{TokenKind::number, std::string(src_.substr(start, pos_ - start)), {start, pos_}, std::nullopt};
    }
    if (is_identifier_start(c)) {
      while (pos_ < src_.size() && is_identifier_char(src_[pos_])) ++pos_;
      // Trailing apostrophes belong to the name: f', f''.
      while (pos_ < src_.size() && src_[pos_] == '\'') ++pos_;
      return Token{TokenKind::identifier, std::string(src_.substr(start, pos_ - start)), {start, pos_}, std::nullopt};
    }
    if (c == '%') {
      ++pos_;
      return Token{TokenKind::identifier, "%", {start, pos_}, std::nullopt};
    }
    if (c == '?') {
      ++pos_;
      std::optional<int> label;
      if (digit_at(pos_)) {
        std::size_t s = pos_;
        while (digit_at(pos_)) ++pos_;
        label = std::stoi(std::string(src_.substr(s, pos_ - s)));
      }
      return Token{TokenKind::hole, std::string(src_.substr(start, pos_ - start)), {start, pos_}, label};
    }
    for (const auto& t : symbolic_) {
      if (src_.substr(pos_, t.size()) == t) {
        pos_ += t.size();
        return Token{TokenKind::symbol, t, {start, pos_}, std::nullopt};
      }
    }
    throw Error(ErrorCode::syntax, std::string("unexpected character '") + c + "'", SourceSpan{start, start + 1});
  }

  bool starts_with_dots() const { return src_.substr(pos_, 3) == "..."; }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<std::string> symbolic_;
};

class Parser {
 public:
  Parser(std::string_view src, const OperatorRegistry& ops) : src_(src), ops_(ops) {
    tokens_ = Lexer(src, ops).run();
  }

  Expr parse_all() {
    if (peek().kind == TokenKind::end) throw Error(ErrorCode::syntax, "empty input", SourceSpan{0, 0});
    Expr e = expression(0);
    if (peek().kind != TokenKind::end) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(index_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  Token advance() { return tokens_[std::min(index_++, tokens_.size() - 1)]; }
  bool at_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::symbol && peek(ahead).text == s;
  }
  void expect(std::string_view s) {
    if (!at_symbol(s)) fail("expected '" + std::string(s) + "'" + (peek().kind == TokenKind::end ? " before end of input" : " but found '" + peek().text + "'"));
    advance();
  }
  [[noreturn]] void fail(const std::string& message) const { throw Error(ErrorCode::syntax, message, peek().span); }

  // Binding power of the token at the cursor when it continues `left`.
  const OperatorDef* infix_at() const {
    const Token& t = peek();
    if (t.kind == TokenKind::symbol) return ops_.find_infix(t.text);
    if (t.kind == TokenKind::identifier) {
      if (t.text == "in" && brace_depth_ == 0) return nullptr;
      return ops_.find_infix(t.text);
    }
    return nullptr;
  }

  bool callable(const Expr& e) const { return e.is_sym() || e.is_app() || e.is_lambda() || e.is_hole(); }

  // "-" directly before a number literal (not raised to a power) is a
  // negative literal: -3*x is (-3)*x.
  bool negative_literal_ahead() const {
    if (!at_symbol("-") || peek(1).kind != TokenKind::number) return false;
    const Token& after = peek(2);
    return !(after.kind == TokenKind::symbol && (after.text == "^" || after.text == "^." || after.text == "'" ||
                                                 after.text == "["));
  }

  Expr expression(int rbp) {
    bool literal = peek().kind == TokenKind::number || negative_literal_ahead();
    Expr left = num(0);
    if (negative_literal_ahead()) {
      advance();
      left = num(-parse_rational(advance().text));
    } else {
      left = prefix();
    }
    while (true) {
      const Token& t = peek();
      // Juxtaposition after a number literal: 42x, 2(y + z).
      if (literal && (t.kind == TokenKind::identifier || at_symbol("(")) && !infix_at()) {
        if (prec::juxtapose <= rbp) break;
        Expr factor = expression(prec::juxtapose);
        left = op("*", {left, factor});
        literal = false;
        continue;
      }
      literal = false;
      if (t.kind == TokenKind::symbol && (t.text == "'" || t.text == "[")) {
        if (prec::postfix <= rbp) break;
        left = postfix(left);
        continue;
      }
      if (at_symbol("(") && callable(left)) {
        if (prec::postfix + 10 <= rbp) break;
        advance();
        auto args = comma_list(")");
        left = Expr::apply(left, std::move(args));
        continue;
      }
      const OperatorDef* def = infix_at();
      if (!def) break;
      if (def->precedence <= rbp) break;
      advance();
      if (def->fixity == Fixity::nary) {
        std::vector<Expr> args{left};
        args.push_back(expression(def->precedence));
        while (peek().text == t.text && infix_at() == def) {
          advance();
          args.push_back(expression(def->precedence));
        }
        left = op(def->name, std::move(args));
      } else {
        int next = def->assoc == Assoc::right ? def->precedence - 1 : def->precedence;
        Expr right = expression(next);
        left = make_infix(*def, left, right);
      }
    }
    return left;
  }

  Expr make_infix(const OperatorDef& def, const Expr& left, const Expr& right) {
    if (def.name == ":=" ) {
      if (!binding_lhs(left))
        throw Error(ErrorCode::malformed_binding, "left side of ':=' must be a symbol or a function pattern",
                    last_span());
    }
    return op(def.name, {left, right});
  }

  SourceSpan last_span() const { return tokens_[index_ == 0 ? 0 : index_ - 1].span; }

  Expr postfix(const Expr& left) {
    if (at_symbol("'")) {
      advance();
      return op("prime", {left});
    }
    SourceSpan open = peek().span;
    expect("[");
    auto items = comma_list("]");
    bool any_assign = false, all_bindings = true;
    for (const auto& it : items) {
      if (it.is_op(":=")) any_assign = true;
      if (!((it.is_op(":=") || it.is_op("=")) && binding_lhs(it.arg(0)))) all_bindings = false;
    }
    if (items.empty() || all_bindings) {
      std::vector<Expr> bs;
      for (const auto& it : items) bs.push_back(op(":=", {it.arg(0), it.arg(1)}));
      check_bindings(bs, open);
      return op("_s_", {left, op("list", std::move(bs))});
    }
    if (any_assign)
      throw Error(ErrorCode::malformed_binding, "every entry of a substitution must be lhs := rhs", open);
    if (items.size() != 1) throw Error(ErrorCode::syntax, "index expects exactly one subscript", open);
    return op("index", {left, items.front()});
  }

  void check_bindings(const std::vector<Expr>& bs, SourceSpan where) {
    try {
      substitution_from_expr(op("list", bs));
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), where);
    }
  }

  std::vector<Expr> comma_list(std::string_view close) {
    std::vector<Expr> items;
    if (at_symbol(close)) {
      advance();
      return items;
    }
    int saved = brace_depth_;
    brace_depth_ = 0;
    while (true) {
      items.push_back(expression(0));
      if (at_symbol(",")) {
        advance();
        continue;
      }
      break;
    }
    brace_depth_ = saved;
    expect(close);
    return items;
  }

  Expr prefix() {
    Token t = peek();
    switch (t.kind) {
      case TokenKind::number: {
        advance();
        return num(parse_rational(t.text));
      }
      case TokenKind::hole: advance(); return Expr::hole(t.hole_label);
      case TokenKind::end: fail("unexpected end of input");
      case TokenKind::identifier: return identifier();
      case TokenKind::symbol: break;
    }
    if (t.text == "(") {
      advance();
      int saved = brace_depth_;
      brace_depth_ = 0;
      Expr first = expression(0);
      if (at_symbol(",")) {
        std::vector<Expr> items{first};
        while (at_symbol(",")) {
          advance();
          items.push_back(expression(0));
        }
        brace_depth_ = saved;
        expect(")");
        return op("tuple", std::move(items));
      }
      brace_depth_ = saved;
      expect(")");
      return first;
    }
    if (t.text == "[") {
      advance();
      return op("list", comma_list("]"));
    }
    if (t.text == "{") return braces();
    if (t.text == "'") {
      advance();
      return Expr::quote(expression(prec::postfix - 1));
    }
    if (const OperatorDef* def = ops_.find_prefix(t.text)) {
      advance();
      Expr operand = expression(def->precedence);
      return op(def->name, {operand});
    }
    fail("unexpected '" + t.text + "'");
  }

  Expr identifier() {
    Token t = advance();
    if (t.text == "lambda" && at_symbol("(")) {
      advance();
      expect("[");
      std::vector<std::string> params;
      if (!at_symbol("]")) {
        while (true) {
          if (peek().kind != TokenKind::identifier) fail("lambda parameters must be identifiers");
          params.push_back(advance().text);
          if (at_symbol(",")) {
            advance();
            continue;
          }
          break;
        }
      }
      expect("]");
      expect(",");
      Expr body = expression(0);
      expect(")");
      try {
        return Expr::lambda(std::move(params), body);
      } catch (const Error& e) {
        throw Error(e.code(), e.what(), t.span);
      }
    }
    if (const OperatorDef* def = ops_.find_prefix(t.text)) {
      Expr operand = expression(def->precedence);
      return op(def->name, {operand});
    }
    if (const OperatorDef* def = ops_.find_function(t.text); def && at_symbol("(")) {
      advance();
      auto args = comma_list(")");
      if (def->arity >= 0 && args.size() != static_cast<std::size_t>(def->arity))
        throw Error(ErrorCode::syntax, t.text + " expects " + std::to_string(def->arity) + " arguments", t.span);
      return op(def->name, std::move(args));
    }
    if (ops_.find_infix(t.text) && !(t.text == "in" && brace_depth_ == 0))
      throw Error(ErrorCode::syntax, "operator '" + t.text + "' is missing its left operand", t.span);
    return sym(t.text);
  }

  // { }, {a, b}, {lo, ..., hi}, {e | quals}, {v in S | cond}, {gen; filter; expr}
  Expr braces() {
    SourceSpan open = peek().span;
    expect("{");
    if (at_symbol("}")) {
      advance();
      return op("set", {});
    }
    ++brace_depth_;
    Expr first = expression(0);
    Expr result;
    if (at_symbol("|")) {
      advance();
      std::vector<Expr> quals;
      while (true) {
        quals.push_back(expression(0));
        if (at_symbol(",")) {
          advance();
          continue;
        }
        break;
      }
      if (first.is_op("in")) {
        std::vector<Expr> items{first};
        items.insert(items.end(), quals.begin(), quals.end());
        result = op("setof", std::move(items));
      } else {
        std::vector<Expr> items{first};
        items.insert(items.end(), quals.begin(), quals.end());
        result = op("compre", std::move(items));
      }
    } else if (at_symbol(";")) {
      std::vector<Expr> items{first};
      while (at_symbol(";")) {
        advance();
        items.push_back(expression(0));
      }
      result = op("unified", std::move(items));
    } else if (at_symbol(",") && at_symbol("...", 1)) {
      advance();
      advance();
      expect(",");
      Expr hi = expression(0);
      result = op("range", {first, hi});
    } else {
      std::vector<Expr> items{first};
      while (at_symbol(",")) {
        advance();
        items.push_back(expression(0));
      }
      result = op("set", std::move(items));
    }
    --brace_depth_;
    if (!at_symbol("}"))
      throw Error(ErrorCode::syntax, "expected '}' to close the brace opened here", open);
    advance();
    return result;
  }

  std::string_view src_;
  const OperatorRegistry& ops_;
  std::vector<Token> tokens_;
  std::size_t index_ = 0;
  int brace_depth_ = 0;
};

}  // namespace detail

/// Parses one expression of the surface language.
inline Expr parse(std::string_view src, const Context& ctx = Context::standard()) {
  return detail::Parser(src, ctx.operators).parse_all();
}

/// Parses a bracketed binding list `[a := 2, f(x) := x^2]` (`=` also accepted).
inline Substitution parse_bindings(std::string_view src, const Context& ctx = Context::standard()) {
  Expr e = parse(src, ctx);
  if (!e.is_op("list")) throw Error(ErrorCode::malformed_binding, "bindings must be written as [lhs := rhs, ...]");
  return substitution_from_expr(e);
}

}  // namespace mex
