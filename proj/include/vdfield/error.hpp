#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vdfield {

enum class ErrorKind {
  kInvalidArgument,
  kDepthTooSmall,
  kOutsideRigMesh,
  kDegenerateTriangle,
  kEmptyMask,
  kRefinementDiverged,
  kDisconnectedFromHandles,
  kSolverFailure,
  kParseError,
  kMissingProperty,
  kIoError,
  kNonPsdCovariance,
  kSchemaVersionMismatch,
  kValidationError,
  kNothingVisible,
  kTooManyFailures,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure carrying the byte offset (binary formats) or 1-based line
/// number (text formats) where it was detected.
class ParseError : public Error {
 public:
  enum class Unit { kByte, kLine };

  ParseError(const std::string& message, std::size_t location, Unit unit);

  std::size_t location() const noexcept { return location_; }
  Unit unit() const noexcept { return unit_; }

 private:
  std::size_t location_;
  Unit unit_;
};

/// Invariant violation. `invariant()` names the violated rule so callers
/// (CLI, HTTP service) can surface it verbatim.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& invariant);

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace vdfield
