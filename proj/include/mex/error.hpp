#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mex {

/// Byte range [start, end) into a parsed source string.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const SourceSpan&) const = default;
};

enum class ErrorCode {
  syntax,
  unknown_operator,
  malformed_binding,
  registry,
  arithmetic,
  convergence,
  cannot_differentiate,
  nontermination,
  path,
  overlap,
  foreign_binding,
  nonlinear,
  singular,
  unbound_variable,
  duplicate_generator,
  non_finite,
  non_integer_range,
  unevaluable_filter,
  unknown_rule,
  dangling_reference,
  malformed_step,
  conclusion_mismatch,
  missing_hole,
  wrong_shape,
  io,
  not_found,
  duplicate_name,
  usage,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax: return "syntax";
    case ErrorCode::unknown_operator: return "unknown_operator";
    case ErrorCode::malformed_binding: return "malformed_binding";
    case ErrorCode::registry: return "registry";
    case ErrorCode::arithmetic: return "arithmetic";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::cannot_differentiate: return "cannot_differentiate";
    case ErrorCode::nontermination: return "nontermination";
    case ErrorCode::path: return "path";
    case ErrorCode::overlap: return "overlap";
    case ErrorCode::foreign_binding: return "foreign_binding";
    case ErrorCode::nonlinear: return "nonlinear";
    case ErrorCode::singular: return "singular";
    case ErrorCode::unbound_variable: return "unbound_variable";
    case ErrorCode::duplicate_generator: return "duplicate_generator";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::non_integer_range: return "non_integer_range";
    case ErrorCode::unevaluable_filter: return "unevaluable_filter";
    case ErrorCode::unknown_rule: return "unknown_rule";
    case ErrorCode::dangling_reference: return "dangling_reference";
    case ErrorCode::malformed_step: return "malformed_step";
    case ErrorCode::conclusion_mismatch: return "conclusion_mismatch";
    case ErrorCode::missing_hole: return "missing_hole";
    case ErrorCode::wrong_shape: return "wrong_shape";
    case ErrorCode::io: return "io";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::duplicate_name: return "duplicate_name";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<SourceSpan> span = std::nullopt)
      : std::runtime_error(message), code_(code), span_(span) {}

  ErrorCode code() const noexcept { return code_; }
  const char* code_name() const noexcept { return error_code_name(code_); }
  const std::optional<SourceSpan>& span() const noexcept { return span_; }

 private:
  ErrorCode code_;
  std::optional<SourceSpan> span_;
};

}  // namespace mex
