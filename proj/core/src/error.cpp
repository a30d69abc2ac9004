#include "hsplat/error.hpp"

namespace hsplat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ContractViolation: return "contract_violation";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::UnsupportedDegree: return "unsupported_degree";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::Config: return "config";
    case ErrorCode::UnknownRecipe: return "unknown_recipe";
    case ErrorCode::Locked: return "locked";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace hsplat
