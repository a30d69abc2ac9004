#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hsplat {

enum class ErrorCode {
  ContractViolation,
  OutOfRange,
  UnsupportedDegree,
  ShapeMismatch,
  EmptyInput,
  InvalidArgument,
  NonFinite,
  Io,
  Format,
  VersionMismatch,
  Config,
  UnknownRecipe,
  Locked,
};

/// Stable, machine-parsable name for an error code (used in CLI output).
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

}  // namespace hsplat
