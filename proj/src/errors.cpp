#include "cdofit/errors.hpp"

namespace cdofit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidRecovery: return "InvalidRecovery";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NonMonotonePath: return "NonMonotonePath";
    case ErrorCode::InvalidQuotes: return "InvalidQuotes";
    case ErrorCode::TooLargeForExact: return "TooLargeForExact";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MalformedSnapshot: return "MalformedSnapshot";
    case ErrorCode::SolverFailure: return "SolverFailure";
  }
  return "Unknown";
}

}  // namespace cdofit
