#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bodycomp {

enum class ErrorCode {
  InvalidArgument,
  InvalidVolume,
  UnitState,
  GeometryMismatch,
  UnknownLabel,
  MissingVocabulary,
  VertebraNotFound,
  EmptyRegion,
  UndefinedRatio,
  DimensionMismatch,
  EmptyInput,
  ZeroGroundTruth,
  ConstantSeries,
  ZeroReference,
  // .bcv container
  BadMagic,
  TruncatedPayload,
  HeaderMismatch,
  UnknownDtype,
  UnknownKind,
  FormatError,
  IoError,
  // cohort CSV
  MissingColumn,
  BadNumber,
  DuplicateSubject,
  UnresolvedSubject,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidVolume: return "invalid-volume";
    case ErrorCode::UnitState: return "unit-state";
    case ErrorCode::GeometryMismatch: return "geometry-mismatch";
    case ErrorCode::UnknownLabel: return "unknown-label";
    case ErrorCode::MissingVocabulary: return "missing-vocabulary";
    case ErrorCode::VertebraNotFound: return "vertebra-not-found";
    case ErrorCode::EmptyRegion: return "empty-region";
    case ErrorCode::UndefinedRatio: return "undefined-ratio";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::ZeroGroundTruth: return "zero-ground-truth";
    case ErrorCode::ConstantSeries: return "constant-series";
    case ErrorCode::ZeroReference: return "zero-reference";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::TruncatedPayload: return "truncated-payload";
    case ErrorCode::HeaderMismatch: return "header-mismatch";
    case ErrorCode::UnknownDtype: return "unknown-dtype";
    case ErrorCode::UnknownKind: return "unknown-kind";
    case ErrorCode::FormatError: return "format-error";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::MissingColumn: return "missing-column";
    case ErrorCode::BadNumber: return "bad-number";
    case ErrorCode::DuplicateSubject: return "duplicate-subject";
    case ErrorCode::UnresolvedSubject: return "unresolved-subject";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI) can branch on the category without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace bodycomp
