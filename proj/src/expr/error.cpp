#include "pbs/error.hpp"

namespace pbs {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parse: return "parse";
    case ErrorCode::UnknownFunction: return "unknown-function";
    case ErrorCode::UnboundVariable: return "unbound-variable";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::JetOrderOverflow: return "jet-order-overflow";
    case ErrorCode::ConvergenceFailure: return "convergence-failure";
    case ErrorCode::SingularJacobian: return "singular-jacobian";
    case ErrorCode::DomainExit: return "domain-exit";
    case ErrorCode::DepthExhausted: return "depth-exhausted";
    case ErrorCode::DegenerateCase: return "degenerate-case";
    case ErrorCode::Singularity: return "singularity";
    case ErrorCode::FUZero: return "fu-zero";
    case ErrorCode::BracketFailure: return "bracket-failure";
    case ErrorCode::U0Zero: return "u0-zero";
    case ErrorCode::Caustic: return "caustic";
    case ErrorCode::DegenerateSeed: return "degenerate-seed";
    case ErrorCode::UnknownModel: return "unknown-model";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::ValidationFailure: return "validation-failure";
    case ErrorCode::NonFinite: return "non-finite";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

ParseError::ParseError(ErrorCode code, std::size_t offset, const std::string& message)
    : Error(code, message + " at offset " + std::to_string(offset)), offset_(offset) {}

QuadratureError::QuadratureError(double lo, double hi, const std::string& message)
    : Error(ErrorCode::DepthExhausted, message), lo_(lo), hi_(hi) {}

}  // namespace pbs
