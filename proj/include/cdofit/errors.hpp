#pragma once

#include <stdexcept>
#include <string>

namespace cdofit {

enum class ErrorCode {
  InvalidInput,
  InvalidRecovery,
  NoRoot,
  NonMonotonePath,
  InvalidQuotes,
  TooLargeForExact,
  ShapeMismatch,
  MalformedSnapshot,
  SolverFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace cdofit
