#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mpr/embedding_store.hpp"
#include "mpr/similarity.hpp"

namespace mpr {

/// Single-gallery-shot ground truth: exactly one gallery id per probe.
struct ProbeSet {
  std::vector<std::string> probe_ids;
  std::unordered_map<std::string, std::string> ground_truth;

  /// Builds a probe set; throws InvalidArgument on a repeated probe id.
  static ProbeSet from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);

  /// Two-column CSV with header probe_id,gallery_id.
  static ProbeSet load_csv(const std::filesystem::path& path);
};

/// 1-based rank of each probe's ground truth, in ProbeSet order. Probes
/// whose truth falls outside a truncated ranking get depth + 1.
/// Throws MissingProbe / UnknownGalleryId.
std::vector<std::size_t> truth_ranks(const RankingResult& ranking, const ProbeSet& truth);

/// Fraction of probes whose ground truth ranks <= K.
/// Throws KOutOfRange for K == 0, K > gallery size, or K beyond a truncated
/// ranking's depth.
double recall_at_k(const RankingResult& ranking, const ProbeSet& truth, std::size_t K);

/// Entry k-1 holds Recall@k for k = 1..k_max.
std::vector<double> cmc_curve(const RankingResult& ranking, const ProbeSet& truth,
                              std::size_t k_max);

struct EvalReport {
  ModelCard model;
  std::size_t probes = 0;
  std::size_t gallery = 0;
  std::map<std::size_t, double> recall_at;
  std::vector<double> cmc;
  std::optional<double> gap_delta;
};

/// Recall@5 - Recall@1. Throws MissingK if either is absent.
double discriminative_gap(const EvalReport& report);

/// Full evaluation: CMC over the whole gallery, the requested K values, and
/// the gap when both 1 and 5 are requested. `ranking` must have full depth.
EvalReport evaluate(const RankingResult& ranking, const ProbeSet& truth,
                    const std::vector<std::size_t>& ks, const ModelCard& model);

nlohmann::ordered_json to_json(const EvalReport& report);
std::string csv_header(const EvalReport& report);
std::string csv_row(const EvalReport& report);

}  // namespace mpr
