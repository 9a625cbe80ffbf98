#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chiralrot {

enum class ErrorCode {
  DegenerateRotor,
  TruncationInsufficient,
  UnknownTransition,
  EmptyCoupling,
  UnsupportedSetup,
  StepTooLarge,
  DiscontinuousFrame,
  MismatchedGrid,
  Indeterminate,
  ConfigValidation,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateRotor: return "degenerate-rotor";
    case ErrorCode::TruncationInsufficient: return "truncation-insufficient";
    case ErrorCode::UnknownTransition: return "unknown-transition";
    case ErrorCode::EmptyCoupling: return "empty-coupling";
    case ErrorCode::UnsupportedSetup: return "unsupported-setup";
    case ErrorCode::StepTooLarge: return "step-too-large";
    case ErrorCode::DiscontinuousFrame: return "discontinuous-frame";
    case ErrorCode::MismatchedGrid: return "mismatched-grid";
    case ErrorCode::Indeterminate: return "indeterminate";
    case ErrorCode::ConfigValidation: return "config-validation";
    case ErrorCode::InvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

/// Every failure raised by the library carries a stable code so the CLI can
/// print a machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chiralrot
