#include "mpr/error.hpp"

namespace mpr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVectorRow: return "ZeroVectorRow";
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::ManifestMissing: return "ManifestMissing";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::BatchMismatch: return "BatchMismatch";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::MissingProbe: return "MissingProbe";
    case ErrorCode::UnknownGalleryId: return "UnknownGalleryId";
    case ErrorCode::MissingK: return "MissingK";
    case ErrorCode::InvalidRecall: return "InvalidRecall";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::InvalidResolution: return "InvalidResolution";
    case ErrorCode::MissingMetric: return "MissingMetric";
    case ErrorCode::BackboneMismatch: return "BackboneMismatch";
    case ErrorCode::MalformedTable: return "MalformedTable";
    case ErrorCode::EmptyMetadata: return "EmptyMetadata";
    case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::MissingLabelKey: return "MissingLabelKey";
    case ErrorCode::VocabularyMissing: return "VocabularyMissing";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace mpr
