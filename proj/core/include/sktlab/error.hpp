#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sktlab {

enum class ErrorCode {
  InvalidArgument,
  SizeMismatch,
  NonFinite,
  NonPositiveDensity,
  AsymmetricSupport,
  CycleInconsistent,
  DetailedBalanceViolated,
  SchemaViolation,
  NewtonDiverged,
  LinearSolveFailed,
  PositivityLost,
  MissingData,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Validation errors are caused by bad inputs; solver errors by a numerical
/// method giving up. The CLI maps them to exit codes 2 and 3.
bool is_validation_error(ErrorCode code) noexcept;

class SktError : public std::runtime_error {
 public:
  SktError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace sktlab
