#include "mpr/retrieval_metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "mpr/error.hpp"
#include "mpr/format.hpp"

namespace mpr {

ProbeSet ProbeSet::from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
  ProbeSet out;
  out.probe_ids.reserve(pairs.size());
  for (const auto& [probe, gallery] : pairs) {
    if (!out.ground_truth.emplace(probe, gallery).second) {
      throw Error(ErrorCode::InvalidArgument, "probe '" + probe + "' has two ground truths");
    }
    out.probe_ids.push_back(probe);
  }
  return out;
}

ProbeSet ProbeSet::load_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"probe_id", "gallery_id"}) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": expected header probe_id,gallery_id");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": line " + std::to_string(i + 1) +
                                                  " needs two fields");
    }
    pairs.emplace_back(rows[i][0], rows[i][1]);
  }
  return from_pairs(pairs);
}

std::vector<std::size_t> truth_ranks(const RankingResult& ranking, const ProbeSet& truth) {
  std::unordered_map<std::string_view, std::size_t> probe_row;
  for (std::size_t i = 0; i < ranking.probe_ids.size(); ++i) probe_row.emplace(ranking.probe_ids[i], i);
  std::unordered_map<std::string_view, std::uint32_t> gallery_index;
  for (std::size_t j = 0; j < ranking.gallery_ids.size(); ++j) {
    gallery_index.emplace(ranking.gallery_ids[j], static_cast<std::uint32_t>(j));
  }

  std::vector<std::size_t> ranks;
  ranks.reserve(truth.probe_ids.size());
  for (const auto& probe : truth.probe_ids) {
    const auto row = probe_row.find(probe);
    if (row == probe_row.end()) throw Error(ErrorCode::MissingProbe, "no ranking for probe " + probe);
    const auto gt = truth.ground_truth.find(probe);
    if (gt == truth.ground_truth.end()) {
      throw Error(ErrorCode::MissingProbe, "no ground truth for probe " + probe);
    }
    const auto target = gallery_index.find(gt->second);
    if (target == gallery_index.end()) {
      throw Error(ErrorCode::UnknownGalleryId, gt->second + " (probe " + probe + ")");
    }
    const auto order = ranking.order(row->second);
    const auto hit = std::find(order.begin(), order.end(), target->second);
    ranks.push_back(static_cast<std::size_t>(hit - order.begin()) + 1);
  }
  return ranks;
}

namespace {

void check_k(const RankingResult& ranking, std::size_t K) {
  const std::size_t G = ranking.gallery_ids.size();
  if (K == 0 || K > G) {
    throw Error(ErrorCode::KOutOfRange, "K=" + std::to_string(K) + " with gallery size " +
                                            std::to_string(G));
  }
  if (K > ranking.depth) {
    throw Error(ErrorCode::KOutOfRange, "K=" + std::to_string(K) + " beyond ranking depth " +
                                            std::to_string(ranking.depth));
  }
}

std::vector<double> cumulative(const std::vector<std::size_t>& ranks, std::size_t k_max) {
  std::vector<std::size_t> hits(k_max + 1, 0);
  for (std::size_t r : ranks) {
    if (r <= k_max) ++hits[r];
  }
  std::vector<double> curve(k_max);
  std::size_t running = 0;
  const auto q = static_cast<double>(ranks.size());
  for (std::size_t k = 1; k <= k_max; ++k) {
    running += hits[k];
    curve[k - 1] = ranks.empty() ? 0.0 : static_cast<double>(running) / q;
  }
  return curve;
}

}  // namespace

double recall_at_k(const RankingResult& ranking, const ProbeSet& truth, std::size_t K) {
  check_k(ranking, K);
  return cumulative(truth_ranks(ranking, truth), K).back();
}

std::vector<double> cmc_curve(const RankingResult& ranking, const ProbeSet& truth,
                              std::size_t k_max) {
  check_k(ranking, k_max);
  return cumulative(truth_ranks(ranking, truth), k_max);
}

double discriminative_gap(const EvalReport& report) {
  const auto r1 = report.recall_at.find(1);
  const auto r5 = report.recall_at.find(5);
  if (r1 == report.recall_at.end() || r5 == report.recall_at.end()) {
    throw Error(ErrorCode::MissingK, "report needs Recall@1 and Recall@5");
  }
  return r5->second - r1->second;
}

EvalReport evaluate(const RankingResult& ranking, const ProbeSet& truth,
                    const std::vector<std::size_t>& ks, const ModelCard& model) {
  const std::size_t G = ranking.gallery_ids.size();
  for (std::size_t k : ks) check_k(ranking, k);
  if (ranking.depth != G) {
    throw Error(ErrorCode::KOutOfRange, "evaluate needs a full-depth ranking");
  }
  EvalReport report;
  report.model = model;
  report.probes = truth.probe_ids.size();
  report.gallery = G;
  report.cmc = cumulative(truth_ranks(ranking, truth), G);
  for (std::size_t k : ks) report.recall_at[k] = report.cmc[k - 1];
  if (report.recall_at.contains(1) && report.recall_at.contains(5)) {
    report.gap_delta = discriminative_gap(report);
  }
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["model"] = report.model.name;
  doc["family"] = report.model.family;
  doc["params_millions"] = report.model.params_millions;
  doc["probes"] = report.probes;
  doc["gallery"] = report.gallery;
  for (const auto& [k, v] : report.recall_at) doc["recall@" + std::to_string(k)] = v;
  doc["gap_delta"] = report.gap_delta ? nlohmann::ordered_json(*report.gap_delta)
                                      : nlohmann::ordered_json(nullptr);
  doc["cmc"] = report.cmc;
  return doc;
}

std::string csv_header(const EvalReport& report) {
  std::string out = "model";
  for (const auto& [k, v] : report.recall_at) out += ",recall@" + std::to_string(k);
  out += ",delta";
  return out;
}

std::string csv_row(const EvalReport& report) {
  std::string out = csv_escape(report.model.name);
  for (const auto& [k, v] : report.recall_at) out += "," + fixed(v, 3);
  out += ",";
  if (report.gap_delta) out += fixed(*report.gap_delta, 3);
  return out;
}

}  // namespace mpr
