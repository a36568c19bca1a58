#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace enrollcast {

enum class ErrorCode {
  // ingestion and cleaning
  BadCsv,
  BadSchema,
  MissingColumn,
  BadLevel,
  BadNumber,
  DuplicateKey,
  KeyMissing,
  EmptyAfterClean,
  MissingValue,
  UnknownFeature,
  TooFewRows,
  // fitting and scoring
  DimensionMismatch,
  SingleClass,
  Degenerate,
  LengthMismatch,
  Empty,
  TooFewPerClass,
  EmptySubset,
  BadIndex,
  TooManyFeatures,
  // persistence and serving
  NotFound,
  CorruptModel,
  VersionUnsupported,
  MissingFeature,
  BadRequest,
  Conflict,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `field` names the offending
/// feature/column when there is one, so callers can report it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace enrollcast
