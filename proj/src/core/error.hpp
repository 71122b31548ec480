#pragma once

#include <stdexcept>
#include <string>

namespace gsr {

enum class ErrorCode {
  MalformedFile,
  DimensionMismatch,
  NonFinite,
  EmptyDataset,
  FailureTrajectory,
  StructureMismatch,
  IoFailure,
  InvalidConfig,
  NotTabular,
  GenerationTimeout,
  InvariantViolation,
};

const char* error_code_name(ErrorCode code);

// All typed failures raised by the engine. The C API maps `code` onto
// gsr_status; the CLI maps it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::FailureTrajectory: return "FailureTrajectory";
    case ErrorCode::StructureMismatch: return "StructureMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NotTabular: return "NotTabular";
    case ErrorCode::GenerationTimeout: return "GenerationTimeout";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace gsr
