#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vortrack {

enum class ErrorCode {
  InvalidArgument,
  SingularConfiguration,
  NonFiniteState,
  GridTooShort,
  DegenerateSignal,
  NoDecorrelation,
  IntervalTooShort,
  ShapeMismatch,
  SchemaError,
  EstimationFailed,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularConfiguration: return "SingularConfiguration";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::GridTooShort: return "GridTooShort";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::NoDecorrelation: return "NoDecorrelation";
    case ErrorCode::IntervalTooShort: return "IntervalTooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EstimationFailed: return "EstimationFailed";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the category prefix.
  const std::string& message() const noexcept { return message_; }
  std::string_view category() const noexcept { return to_string(code_); }

  /// Simulation time at which the failure happened, when known.
  std::optional<double> time;

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace vortrack
