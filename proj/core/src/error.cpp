#include "sktlab/error.hpp"

namespace sktlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::AsymmetricSupport: return "AsymmetricSupport";
    case ErrorCode::CycleInconsistent: return "CycleInconsistent";
    case ErrorCode::DetailedBalanceViolated: return "DetailedBalanceViolated";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::LinearSolveFailed: return "LinearSolveFailed";
    case ErrorCode::PositivityLost: return "PositivityLost";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NewtonDiverged:
    case ErrorCode::LinearSolveFailed:
    case ErrorCode::PositivityLost:
    case ErrorCode::Io:
      return false;
    default:
      return true;
  }
}

void fail(ErrorCode code, const std::string& message) {
  throw SktError(code, std::string(to_string(code)) + ": " + message);
}

}  // namespace sktlab
