#pragma once

#include <stdexcept>
#include <string>

namespace anchorpose {

enum class ErrorCode {
  kFrameMismatch,
  kEmptyInput,
  kDomainError,
  kInvalidCrop,
  kEmptyStages,
  kNonContiguousStages,
  kStageCountMismatch,
  kMissingPredictions,
  kMissingPrediction,
  kParseError,
  kInvariantViolation,
  kMissingCalibration,
  kMalformedPoseFile,
  kInsufficientFrames,
  kEmptyRange,
  kInvalidConfig,
  kIoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInvalidCrop: return "InvalidCrop";
    case ErrorCode::kEmptyStages: return "EmptyStages";
    case ErrorCode::kNonContiguousStages: return "NonContiguousStages";
    case ErrorCode::kStageCountMismatch: return "StageCountMismatch";
    case ErrorCode::kMissingPredictions: return "MissingPredictions";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kMissingCalibration: return "MissingCalibration";
    case ErrorCode::kMalformedPoseFile: return "MalformedPoseFile";
    case ErrorCode::kInsufficientFrames: return "InsufficientFrames";
    case ErrorCode::kEmptyRange: return "EmptyRange";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace anchorpose
