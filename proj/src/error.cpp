#include "pan/error.hpp"

namespace pan {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::GuardExceeded: return "GuardExceeded";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::MaskOverlap: return "MaskOverlap";
    case ErrorCode::Divergence: return "Divergence";
  }
  return "Unknown";
}

}  // namespace pan
