#pragma once

// OMPR embedding container: in-memory matrix type, L2 normalization,
// validation, and the bit-exact on-disk format shared with the extraction
// adapter.
//
// File layout (all integers little-endian):
//   "OMPR" | u32 version | u8 side | u32 dim | u64 count
//   count x (u32 byte length, UTF-8 id bytes)
//   count x dim IEEE-754 float32, row-major
// The manifest lives next to the file as "<file>.json".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mpr {

inline constexpr char kOmprMagic[4] = {'O', 'M', 'P', 'R'};
inline constexpr std::uint32_t kOmprVersion = 1;
inline constexpr double kZeroNormThreshold = 1e-12;
inline constexpr double kNormTolerance = 1e-3;

enum class Side : std::uint8_t { Probe = 0, Gallery = 1 };

std::string_view to_string(Side side) noexcept;
Side side_from_string(std::string_view text);

struct ModelCard {
  std::string name;
  std::string family;
  double params_millions = 0.0;
  std::string pretrain_dataset;
  int resolution_px = 0;
  std::string backbone;

  bool operator==(const ModelCard&) const = default;
};

/// Throws InvalidParams when params_millions or resolution_px is not positive.
void check_model_card(const ModelCard& card);

struct Manifest {
  ModelCard model;
  Side side = Side::Gallery;
  std::string created_at;  // ISO-8601 UTC
  std::string checksum;    // "sha256:<hex>" over the whole .ompr file
};

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& doc);

/// Immutable row-major float32 matrix with one identifier per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Throws InvalidMatrix when dim == 0 or values.size() != ids.size() * dim.
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values,
                  Side side);

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return ids_.size(); }
  Side side() const noexcept { return side_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * dim_, dim_);
  }

  /// Bit-exact comparison (floats compared by representation).
  bool operator==(const EmbeddingMatrix& other) const;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 1;
  std::vector<float> values_;
  Side side_ = Side::Gallery;
};

/// Scales every row to unit L2 norm. Norms are accumulated in double.
/// Throws ZeroVectorRow (row index in the message) for rows with norm < 1e-12
/// and InvalidMatrix for rows containing non-finite values.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix);

struct ValidationReport {
  struct Duplicate {
    std::string id;
    std::size_t first_row;
    std::size_t row;
  };
  struct NonFinite {
    std::size_t row;
    std::size_t col;
  };
  struct NormDeviation {
    std::size_t row;
    double norm;
  };

  std::vector<Duplicate> duplicates;
  std::vector<NonFinite> non_finite;
  std::vector<NormDeviation> norm_deviations;

  bool clean() const noexcept {
    return duplicates.empty() && non_finite.empty() && norm_deviations.empty();
  }
  std::string summary() const;
};

/// Reports duplicate ids, non-finite entries and rows whose norm deviates
/// from 1 by more than kNormTolerance. Never throws.
ValidationReport validate(const EmbeddingMatrix& matrix);

std::filesystem::path sidecar_path(const std::filesystem::path& file);

/// Serializes `matrix` to `destination` and the manifest to its sidecar.
/// The returned manifest carries the computed checksum, the matrix side and,
/// when `manifest.created_at` is empty, the current UTC time.
Manifest write_embeddings(const EmbeddingMatrix& matrix, Manifest manifest,
                          const std::filesystem::path& destination);

struct StoredEmbeddings {
  EmbeddingMatrix matrix;
  Manifest manifest;
};

StoredEmbeddings read_embeddings(const std::filesystem::path& source);

/// Hex SHA-256 of a byte range, prefixed with "sha256:".
std::string content_checksum(std::span<const std::uint8_t> bytes);

}  // namespace mpr
