#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace surgplan {

// Every engine failure carries a stable name (e.g. "IndexOutOfRange") that
// the CLI and HTTP layers surface verbatim.
enum class ErrorCode {
  BadMagic,
  UnsupportedDimension,
  UnsupportedType,
  UnsupportedEncoding,
  SizeMismatch,
  MissingField,
  MalformedHeader,
  OutOfBounds,
  BadRange,
  BadParameter,
  BadWindow,
  BadTransferFunction,
  BadCamera,
  BadClip,
  BadStep,
  IndexOutOfRange,
  DegenerateNormal,
  BadFaceIndex,
  MalformedRecord,
  EmptyMesh,
  BadTransform,
  LengthMismatch,
  NotConverged,
  LimitViolation,
  DegenerateTarget,
  BadLeverArm,
  BadRobotConfig,
  UnknownId,
  InfeasiblePlan,
  NoOpenStroke,
  BadAngle,
  UnsupportedVersion,
  MalformedDocument,
  UnresolvableReference,
  IoError,
};

constexpr std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::UnsupportedType: return "UnsupportedType";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::BadTransferFunction: return "BadTransferFunction";
    case ErrorCode::BadCamera: return "BadCamera";
    case ErrorCode::BadClip: return "BadClip";
    case ErrorCode::BadStep: return "BadStep";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::BadFaceIndex: return "BadFaceIndex";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::BadTransform: return "BadTransform";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::LimitViolation: return "LimitViolation";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::BadLeverArm: return "BadLeverArm";
    case ErrorCode::BadRobotConfig: return "BadRobotConfig";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::NoOpenStroke: return "NoOpenStroke";
    case ErrorCode::BadAngle: return "BadAngle";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::UnresolvableReference: return "UnresolvableReference";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace surgplan
