#include "mpr/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <omp.h>

#include "mpr/error.hpp"

namespace mpr {

namespace {

constexpr std::size_t kLanes = 8;
// Register tile: kProbeRows x kGalleryRows dot products share every load.
constexpr std::size_t kProbeRows = 2;
constexpr std::size_t kGalleryRows = 4;
// Probe rows widened per cache tile; sized so the tile stays in L2.
constexpr std::size_t kProbeTile = 32;

// One vector holds the eight accumulation lanes of a single dot product.
using Lanes = double __attribute__((vector_size(kLanes * sizeof(double))));

inline Lanes load_lanes(const double* p) noexcept {
  Lanes v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline double combine_lanes(const double* l) noexcept {
  return ((l[0] + l[4]) + (l[2] + l[6])) + ((l[1] + l[5]) + (l[3] + l[7]));
}

// Same accumulation order as ordered_dot, over pre-widened rows. Rows past
// the valid count point at a zero row and their results are discarded.
void dot_tile(const double* const* probes, const double* const* rows, std::size_t n, double* const* out,
              std::size_t n_probes, std::size_t n_rows) noexcept {
  Lanes acc[kProbeRows][kGalleryRows] = {};
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    Lanes g[kGalleryRows];
    for (std::size_t r = 0; r < kGalleryRows; ++r) g[r] = load_lanes(rows[r] + k);
    for (std::size_t p = 0; p < kProbeRows; ++p) {
      const Lanes a = load_lanes(probes[p] + k);
      for (std::size_t r = 0; r < kGalleryRows; ++r) acc[p][r] += a * g[r];
    }
  }
  for (std::size_t p = 0; p < n_probes; ++p) {
    for (std::size_t r = 0; r < n_rows; ++r) {
      double lanes[kLanes];
      std::memcpy(lanes, &acc[p][r], sizeof(lanes));
      for (std::size_t t = k; t < n; ++t) lanes[t % kLanes] += probes[p][t] * rows[r][t];
      out[p][r] = combine_lanes(lanes);
    }
  }
}

void check_dims(const EmbeddingMatrix& probes, const EmbeddingMatrix& gallery) {
  if (probes.dim() != gallery.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "probe dim " + std::to_string(probes.dim()) +
                                                  " vs gallery dim " +
                                                  std::to_string(gallery.dim()));
  }
}

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

}  // namespace

double ordered_dot(std::span<const float> a, std::span<const float> b) noexcept {
  double acc[kLanes] = {};
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    acc[k % kLanes] += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return combine_lanes(acc);
}

ScoreMatrix score_matrix(const EmbeddingMatrix& probes, const EmbeddingMatrix& gallery,
                         int workers) {
  check_dims(probes, gallery);
  const std::size_t P = probes.rows();
  const std::size_t G = gallery.rows();
  const std::size_t d = probes.dim();

  ScoreMatrix out{probes.ids(), gallery.ids(), std::vector<double>(P * G)};
  if (P == 0 || G == 0) return out;

  // float -> double is exact, so widening up front does not change any product.
  std::vector<double> wide_gallery(gallery.values().begin(), gallery.values().end());
  // Padding row of zeros lets partial tiles read full tiles unconditionally.
  std::vector<double> zero_row(d, 0.0);

  const auto n_tiles = static_cast<std::ptrdiff_t>((P + kProbeTile - 1) / kProbeTile);
#pragma omp parallel num_threads(resolve_workers(workers))
  {
    std::vector<double> tile(kProbeTile * d);
#pragma omp for schedule(static)
    for (std::ptrdiff_t t = 0; t < n_tiles; ++t) {
      const std::size_t first = static_cast<std::size_t>(t) * kProbeTile;
      const std::size_t count = std::min(kProbeTile, P - first);
      const auto src = probes.values().subspan(first * d, count * d);
      std::copy(src.begin(), src.end(), tile.begin());

      for (std::size_t j = 0; j < G; j += kGalleryRows) {
        const std::size_t n_rows = std::min(kGalleryRows, G - j);
        const double* rows[kGalleryRows];
        for (std::size_t r = 0; r < kGalleryRows; ++r) {
          rows[r] = r < n_rows ? wide_gallery.data() + (j + r) * d : zero_row.data();
        }
        for (std::size_t i = 0; i < count; i += kProbeRows) {
          const std::size_t n_probes = std::min(kProbeRows, count - i);
          const double* prow[kProbeRows];
          double* dst[kProbeRows];
          for (std::size_t p = 0; p < kProbeRows; ++p) {
            prow[p] = p < n_probes ? tile.data() + (i + p) * d : zero_row.data();
            dst[p] = p < n_probes ? out.scores.data() + (first + i + p) * G + j : nullptr;
          }
          dot_tile(prow, rows, d, dst, n_probes, n_rows);
        }
      }
    }
  }
  return out;
}

ScoreMatrix score_matrix_reference(const EmbeddingMatrix& probes, const EmbeddingMatrix& gallery) {
  check_dims(probes, gallery);
  const std::size_t P = probes.rows();
  const std::size_t G = gallery.rows();
  ScoreMatrix out{probes.ids(), gallery.ids(), std::vector<double>(P * G)};
  for (std::size_t i = 0; i < P; ++i) {
    const auto p = probes.row(i);
    for (std::size_t j = 0; j < G; ++j) {
      const auto g = gallery.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) s += static_cast<double>(p[k]) * g[k];
      out.scores[i * G + j] = s;
    }
  }
  return out;
}

RankingResult rank(const ScoreMatrix& scores, std::size_t k, int workers) {
  const std::size_t G = scores.gallery();
  const std::size_t P = scores.probes();
  if (k == kRankAll) k = G;
  if (k == 0 || k > G) {
    throw Error(ErrorCode::KOutOfRange,
                "k=" + std::to_string(k) + " with gallery size " + std::to_string(G));
  }
  for (double s : scores.scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteScore, "score matrix has NaN/inf");
  }

  RankingResult out;
  out.probe_ids = scores.probe_ids;
  out.gallery_ids = scores.gallery_ids;
  out.depth = k;
  out.indices.resize(P * k);
  out.scores.resize(P * k);

  const auto n_probes = static_cast<std::ptrdiff_t>(P);
#pragma omp parallel num_threads(resolve_workers(workers))
  {
    std::vector<std::pair<double, std::uint32_t>> order(G);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n_probes; ++i) {
      const auto row = scores.row(static_cast<std::size_t>(i));
      for (std::uint32_t j = 0; j < G; ++j) order[j] = {row[j], j};
      // Strict total order, so the sort algorithm cannot change the result.
      const auto before = [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
      };
      const auto mid = order.begin() + static_cast<std::ptrdiff_t>(k);
      if (k * 4 >= G) {
        std::sort(order.begin(), order.end(), before);
      } else {
        std::partial_sort(order.begin(), mid, order.end(), before);
      }
      const std::size_t base = static_cast<std::size_t>(i) * k;
      for (std::size_t r = 0; r < k; ++r) {
        out.indices[base + r] = order[r].second;
        out.scores[base + r] = order[r].first;
      }
    }
  }
  return out;
}

ScoreMatrix calibrate_scores(const ScoreMatrix& scores, Calibration mode, double temperature) {
  ScoreMatrix out = scores;
  if (mode == Calibration::Sigmoid) {
    for (double& s : out.scores) s = 1.0 / (1.0 + std::exp(-s));
    return out;
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidTemperature, std::to_string(temperature));
  }
  const std::size_t G = scores.gallery();
  for (std::size_t i = 0; i < scores.probes(); ++i) {
    double* row = out.scores.data() + i * G;
    const double peak = *std::max_element(row, row + G) / temperature;
    double total = 0.0;
    for (std::size_t j = 0; j < G; ++j) {
      row[j] = std::exp(row[j] / temperature - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < G; ++j) row[j] /= total;
  }
  return out;
}

InfoNceLoss info_nce_loss(const EmbeddingMatrix& image, const EmbeddingMatrix& text,
                          const LossConfig& config) {
  if (!(config.temperature > 0.0) || !std::isfinite(config.temperature)) {
    throw Error(ErrorCode::InvalidTemperature, std::to_string(config.temperature));
  }
  if (config.batch_size < 2) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be at least 2");
  }
  const std::size_t B = config.batch_size;
  if (image.rows() != B || text.rows() != B || image.dim() != text.dim()) {
    throw Error(ErrorCode::BatchMismatch,
                "expected " + std::to_string(B) + " rows per side, got " +
                    std::to_string(image.rows()) + " and " + std::to_string(text.rows()));
  }

  auto norm = [](std::span<const float> v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    return std::sqrt(sq);
  };
  std::vector<double> img_norm(B), txt_norm(B);
  for (std::size_t i = 0; i < B; ++i) {
    img_norm[i] = norm(image.row(i));
    txt_norm[i] = norm(text.row(i));
    if (img_norm[i] < kZeroNormThreshold || txt_norm[i] < kZeroNormThreshold) {
      throw Error(ErrorCode::ZeroVectorRow, "row " + std::to_string(i));
    }
  }

  // logits[i][j] = cos(image_i, text_j) / temperature
  std::vector<double> logits(B * B);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) {
      logits[i * B + j] = ordered_dot(image.row(i), text.row(j)) / (img_norm[i] * txt_norm[j]) /
                          config.temperature;
    }
  }

  // -log softmax of the diagonal entry, along rows (i2t) or columns (t2i).
  auto direction_loss = [&](bool by_row) {
    double sum = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
      auto at = [&](std::size_t j) { return by_row ? logits[i * B + j] : logits[j * B + i]; };
      double peak = at(0);
      for (std::size_t j = 1; j < B; ++j) peak = std::max(peak, at(j));
      double z = 0.0;
      for (std::size_t j = 0; j < B; ++j) z += std::exp(at(j) - peak);
      sum += (peak + std::log(z)) - at(i);
    }
    return sum / static_cast<double>(B);
  };

  InfoNceLoss out;
  out.image_to_text = direction_loss(true);
  out.text_to_image = direction_loss(false);
  out.total = 0.5 * (out.image_to_text + out.text_to_image);
  return out;
}

}  // namespace mpr
