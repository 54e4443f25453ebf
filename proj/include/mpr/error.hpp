#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpr {

enum class ErrorCode {
  // embedding store
  ZeroVectorRow,
  InvalidMatrix,
  IoFailure,
  BadMagic,
  UnsupportedVersion,
  ChecksumMismatch,
  TruncatedPayload,
  TrailingData,
  ManifestMissing,
  // similarity
  DimensionMismatch,
  KOutOfRange,
  InvalidTemperature,
  BatchMismatch,
  NonFiniteScore,
  // metrics
  MissingProbe,
  UnknownGalleryId,
  MissingK,
  // efficiency / analysis
  InvalidRecall,
  InvalidParams,
  ZeroBaseline,
  InvalidResolution,
  MissingMetric,
  BackboneMismatch,
  MalformedTable,
  // captioning
  EmptyMetadata,
  EndpointUnreachable,
  MalformedResponse,
  MissingLabelKey,
  VocabularyMissing,
  // cli
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code; what() is "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mpr
