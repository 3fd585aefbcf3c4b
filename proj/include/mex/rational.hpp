#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mex {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Integer numerator(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Integer denominator(const Rational& r) { return boost::multiprecision::denominator(r); }

inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

// "n/d" form used by the JSON AST.
inline std::string to_fraction_string(const Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

// "n" for integers, "n/d" otherwise.
inline std::string to_display_string(const Rational& r) {
  if (is_integer(r)) return numerator(r).str();
  return to_fraction_string(r);
}

/// Parses "12", "-3", "7/2", "-7/2" or a decimal literal "2.25".
inline Rational parse_rational(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("not a rational literal: " + std::string(text)); };
  if (text.empty()) throw bad();
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  auto digits = [&](std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  };
  std::string_view body = text.substr(i);
  Rational value;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    auto n = body.substr(0, slash), d = body.substr(slash + 1);
    if (!digits(n) || !digits(d)) throw bad();
    Integer den{std::string(d)};
    if (den == 0) throw std::domain_error("zero denominator in rational literal");
    value = Rational(Integer{std::string(n)}, den);
  } else if (auto dot = body.find('.'); dot != std::string_view::npos) {
    auto whole = body.substr(0, dot), frac = body.substr(dot + 1);
    if ((!whole.empty() && !digits(whole)) || (!frac.empty() && !digits(frac)) ||
        (whole.empty() && frac.empty()))
      throw bad();
    Integer scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    Integer w = whole.empty() ? Integer(0) : Integer(std::string(whole));
    Integer f = frac.empty() ? Integer(0) : Integer(std::string(frac));
    value = Rational(w * scale + f, scale);
  } else {
    if (!digits(body)) throw bad();
    value = Rational(Integer(std::string(body)));
  }
  return negative ? Rational(-value) : value;
}

/// Exact k-th root of a non-negative integer, if there is one.
inline std::optional<Integer> exact_root(const Integer& n, unsigned k) {
  if (n < 0 || k == 0) return std::nullopt;
  if (n < 2 || k == 1) return n;
  // Newton iteration for floor(n^(1/k)).
  Integer x = Integer(1) << (static_cast<unsigned>(boost::multiprecision::msb(n)) / k + 1);
  while (true) {
    Integer xk1 = boost::multiprecision::pow(x, k - 1);
    Integer y = ((k - 1) * x + n / xk1) / k;
    if (y >= x) break;
    x = y;
  }
  if (boost::multiprecision::pow(x, k) == n) return x;
  return std::nullopt;
}

/// b^e for an integer exponent; nullopt when b = 0 and e < 0.
inline std::optional<Rational> rational_pow(const Rational& base, const Integer& exponent) {
  if (exponent == 0) return Rational(1);
  if (base == 0) {
    if (exponent < 0) return std::nullopt;
    return Rational(0);
  }
  Integer mag = exponent < 0 ? Integer(-exponent) : exponent;
  if (mag > 100000) throw std::overflow_error("exponent too large for exact evaluation");
  auto e = static_cast<unsigned>(mag);
  Rational r(boost::multiprecision::pow(numerator(base), e), boost::multiprecision::pow(denominator(base), e));
  if (exponent < 0) r = 1 / r;
  return r;
}

/// b^(p/q) when the result is rational.
inline std::optional<Rational> rational_pow(const Rational& base, const Rational& exponent) {
  if (is_integer(exponent)) return rational_pow(base, numerator(exponent));
  if (base < 0) return std::nullopt;
  Integer q = denominator(exponent);
  if (q > 64) return std::nullopt;
  auto k = static_cast<unsigned>(q);
  auto n = exact_root(numerator(base), k);
  auto d = exact_root(denominator(base), k);
  if (!n || !d) return std::nullopt;
  return rational_pow(Rational(*n, *d), numerator(exponent));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace mex
