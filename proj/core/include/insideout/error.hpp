#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace insideout {

enum class ErrorCode {
  InvalidArgument,
  RejectionBudgetExceeded,
  SpecGenerationFailed,
  DegenerateGap,
  EmptyColumn,
  DimensionMismatch,
  LengthMismatch,
  InsufficientData,
  ZeroBaseline,
  EmptyInput,
  ParseError,
  IoError,
  BudgetExhausted,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace insideout
