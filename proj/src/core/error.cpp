#include "enrollcast/error.hpp"

namespace enrollcast {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadCsv: return "BadCsv";
    case ErrorCode::BadSchema: return "BadSchema";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadLevel: return "BadLevel";
    case ErrorCode::BadNumber: return "BadNumber";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::KeyMissing: return "KeyMissing";
    case ErrorCode::EmptyAfterClean: return "EmptyAfterClean";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::TooFewPerClass: return "TooFewPerClass";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::TooManyFeatures: return "TooManyFeatures";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace enrollcast
