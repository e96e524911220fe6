#pragma once

#include <stdexcept>
#include <string>

namespace pan {

enum class ErrorCode {
  InvalidArgument = 1,
  IndexOutOfRange,
  SelfLoop,
  GuardExceeded,
  NotConverged,
  ShapeMismatch,
  NonFinite,
  EmptyMask,
  StaleCache,
  Io,
  Format,
  VersionMismatch,
  ChecksumMismatch,
  MaskOverlap,
  Divergence,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure in the library surfaces as a pan::Error carrying a stable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace pan
