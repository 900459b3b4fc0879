#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wncs {

enum class ErrorCode {
  kDimensionMismatch,
  kSingularMatrix,
  kNotConverged,
  kUnstabilizable,
  kDegeneratePriority,
  kInvalidAllocation,
  kInvalidArgument,
  kTooLarge,
  kInvalidConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Structured failure raised by every module. `field` names the offending
/// input (a config path such as `subsystems[1].A`, or an argument name) when
/// one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace wncs
