#include "insideout/error.hpp"

namespace insideout {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorCode::SpecGenerationFailed: return "SpecGenerationFailed";
    case ErrorCode::DegenerateGap: return "DegenerateGap";
    case ErrorCode::EmptyColumn: return "EmptyColumn";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
  }
  return "Unknown";
}

}  // namespace insideout
