#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qprobe {

enum class ErrorCode {
  NotHermitian,
  ShapeMismatch,
  BadSubsystem,
  InvalidState,
  TruncationLeak,
  BadParameter,
  BadSpace,
  NotProjector,
  LeakageAlarm,
  NegativeRate,
  StepNotConverged,
  BadProvenance,
  WindowTooSmall,
  IllConditionedFit,
  AsymmetricGrid,
  RequiresEvaluable,
  NonRealResult,
  MissingComponent,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
  bool is_numerical() const noexcept {
    return code_ == ErrorCode::LeakageAlarm || code_ == ErrorCode::StepNotConverged ||
           code_ == ErrorCode::IllConditionedFit || code_ == ErrorCode::NonRealResult;
  }

 private:
  ErrorCode code_;
};

}  // namespace qprobe
