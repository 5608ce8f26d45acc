#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recsearch {

enum class ErrorCode {
  // textproc / ingest
  MissingTitle,
  EmptyReview,
  FormatError,
  TooFewPairs,
  // sparse
  EmptyCorpus,
  DuplicateDoc,
  UnknownDoc,
  // encoder / trainer / quant
  EmptySequence,
  AllMasked,
  ZeroVector,
  NotNormalized,
  NonNormalizedRows,
  NonFinite,
  NonFiniteWeights,
  ShapeMismatch,
  DimMismatch,
  // index / store
  EmptyIndex,
  DuplicateKey,
  ChecksumMismatch,
  // retrieval / app
  UnknownField,
  ArtifactsMissing,
  LengthMismatch,
  MissingTruth,
  InvalidArgument,
  // file formats
  IoError,
  BadMagic,
  VersionMismatch,
  Truncated,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingTitle: return "MissingTitle";
    case ErrorCode::EmptyReview: return "EmptyReview";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DuplicateDoc: return "DuplicateDoc";
    case ErrorCode::UnknownDoc: return "UnknownDoc";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NonNormalizedRows: return "NonNormalizedRows";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonFiniteWeights: return "NonFiniteWeights";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::ArtifactsMissing: return "ArtifactsMissing";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Truncated: return "Truncated";
  }
  return "Unknown";
}

}  // namespace recsearch
