#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pbs {

// Every failure raised by the library carries one of these codes. The CLI maps
// them onto exit statuses; grid sampling stores them as per-cell mask reasons.
enum class ErrorCode {
  Parse,
  UnknownFunction,
  UnboundVariable,
  Domain,
  JetOrderOverflow,
  ConvergenceFailure,
  SingularJacobian,
  DomainExit,
  DepthExhausted,
  DegenerateCase,
  Singularity,
  FUZero,
  BracketFailure,
  U0Zero,
  Caustic,
  DegenerateSeed,
  UnknownModel,
  InvalidArgument,
  ValidationFailure,
  NonFinite,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t offset, const std::string& message);

  /// Byte offset into the parsed text where the problem was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Raised by adaptive quadrature when subdivision depth runs out; carries the
// interval that failed to converge.
class QuadratureError : public Error {
 public:
  QuadratureError(double lo, double hi, const std::string& message);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace pbs
