#include "wncs/error.hpp"

namespace wncs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kSingularMatrix: return "singular_matrix";
    case ErrorCode::kNotConverged: return "not_converged";
    case ErrorCode::kUnstabilizable: return "unstabilizable";
    case ErrorCode::kDegeneratePriority: return "degenerate_priority";
    case ErrorCode::kInvalidAllocation: return "invalid_allocation";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kTooLarge: return "too_large";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace wncs
