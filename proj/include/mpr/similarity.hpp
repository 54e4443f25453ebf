#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mpr/embedding_store.hpp"

namespace mpr {

/// Dense probe x gallery cosine scores, row-major.
struct ScoreMatrix {
  std::vector<std::string> probe_ids;
  std::vector<std::string> gallery_ids;
  std::vector<double> scores;

  std::size_t probes() const noexcept { return probe_ids.size(); }
  std::size_t gallery() const noexcept { return gallery_ids.size(); }
  double at(std::size_t i, std::size_t j) const noexcept { return scores[i * gallery() + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(scores).subspan(i * gallery(), gallery());
  }
};

/// Dot product with the fixed accumulation order used by every scoring path:
/// eight interleaved double lanes (element k goes to lane k % 8), combined as
/// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)).
double ordered_dot(std::span<const float> a, std::span<const float> b) noexcept;

/// OpenMP kernel, parallel over probe rows. Output is bit-identical for any
/// `workers` value (<= 0 uses the OpenMP default). Inputs are expected to be
/// L2-normalized; throws DimensionMismatch when dims differ.
ScoreMatrix score_matrix(const EmbeddingMatrix& probes, const EmbeddingMatrix& gallery,
                         int workers = 0);

/// Single-threaded plain sequential double loop. Kept as the test reference.
ScoreMatrix score_matrix_reference(const EmbeddingMatrix& probes, const EmbeddingMatrix& gallery);

inline constexpr std::size_t kRankAll = std::numeric_limits<std::size_t>::max();

/// Per-probe gallery orderings, truncated to `depth` entries.
struct RankingResult {
  std::vector<std::string> probe_ids;
  std::vector<std::string> gallery_ids;
  std::size_t depth = 0;
  std::vector<std::uint32_t> indices;  // probes x depth
  std::vector<double> scores;          // probes x depth
  std::string tie_policy = "score-desc/index-asc";

  std::span<const std::uint32_t> order(std::size_t probe) const noexcept {
    return std::span<const std::uint32_t>(indices).subspan(probe * depth, depth);
  }
  std::span<const double> ranked_scores(std::size_t probe) const noexcept {
    return std::span<const double>(scores).subspan(probe * depth, depth);
  }
};

/// Sorts each row by descending score, ties by ascending gallery index, and
/// keeps the first k (kRankAll keeps the whole gallery). Throws KOutOfRange
/// for k == 0 or k > gallery size, NonFiniteScore on NaN/inf scores.
RankingResult rank(const ScoreMatrix& scores, std::size_t k = kRankAll, int workers = 0);

enum class Calibration { Softmax, Sigmoid };

inline constexpr double kDefaultTemperature = 0.07;

/// Row-wise softmax(s / temperature) or elementwise sigmoid(s). Used for
/// reporting only; ranking always consumes raw cosine scores.
/// Throws InvalidTemperature for softmax with temperature <= 0.
ScoreMatrix calibrate_scores(const ScoreMatrix& scores, Calibration mode,
                             double temperature = kDefaultTemperature);

struct LossConfig {
  double temperature = kDefaultTemperature;
  std::size_t batch_size = 2;
};

struct InfoNceLoss {
  double image_to_text = 0.0;
  double text_to_image = 0.0;
  double total = 0.0;
};

/// Forward-only symmetric InfoNCE over a batch of matched pairs: row i of
/// `image` pairs with row i of `text`. Similarities are cosines computed in
/// double. Throws BatchMismatch when either side does not have
/// config.batch_size rows or the dims differ, InvalidTemperature for
/// temperature <= 0 and InvalidArgument for batch_size < 2.
InfoNceLoss info_nce_loss(const EmbeddingMatrix& image, const EmbeddingMatrix& text,
                          const LossConfig& config);

}  // namespace mpr
