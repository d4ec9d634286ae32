#include "vdfield/error.hpp"

namespace vdfield {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kDepthTooSmall: return "DepthTooSmall";
    case ErrorKind::kOutsideRigMesh: return "OutsideRigMesh";
    case ErrorKind::kDegenerateTriangle: return "DegenerateTriangle";
    case ErrorKind::kEmptyMask: return "EmptyMask";
    case ErrorKind::kRefinementDiverged: return "RefinementDiverged";
    case ErrorKind::kDisconnectedFromHandles: return "DisconnectedFromHandles";
    case ErrorKind::kSolverFailure: return "SolverFailure";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kMissingProperty: return "MissingProperty";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kNonPsdCovariance: return "NonPSDCovariance";
    case ErrorKind::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorKind::kValidationError: return "ValidationError";
    case ErrorKind::kNothingVisible: return "NothingVisible";
    case ErrorKind::kTooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(const std::string& message, std::size_t location, Unit unit)
    : Error(ErrorKind::kParseError,
            message + (unit == Unit::kByte ? " (at byte " : " (at line ") +
                std::to_string(location) + ")"),
      location_(location),
      unit_(unit) {}

ValidationError::ValidationError(const std::string& invariant)
    : Error(ErrorKind::kValidationError, invariant), invariant_(invariant) {}

}  // namespace vdfield
