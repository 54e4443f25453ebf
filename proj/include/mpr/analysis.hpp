#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpr/efficiency.hpp"
#include "mpr/embedding_store.hpp"

namespace mpr {

struct ResultRow {
  ModelCard model;
  std::optional<double> recall1;
  std::optional<double> recall3;
  std::optional<double> recall5;
};

/// Transcribed per-checkpoint results. Columns: name, family, backbone,
/// params_millions, pretrain_dataset, resolution_px, recall1, recall3,
/// recall5 (recall cells may be empty).
class ResultsTable {
 public:
  ResultsTable() = default;
  /// Throws MalformedTable on duplicate names or recalls outside [0, 1].
  explicit ResultsTable(std::vector<ResultRow> rows);

  static ResultsTable load_csv(const std::filesystem::path& path);

  const std::vector<ResultRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }
  const ResultRow* find(std::string_view name) const noexcept;
  /// First row matching backbone and dataset, lowest resolution first.
  const ResultRow* find(std::string_view backbone, std::string_view dataset) const noexcept;

 private:
  std::vector<ResultRow> rows_;
};

enum class DeltaKind { AbsolutePoints, RelativePercent };

struct DeltaReport {
  std::string label;
  double baseline = 0.0;
  double variant = 0.0;
  double delta = 0.0;
  DeltaKind kind = DeltaKind::AbsolutePoints;
  std::optional<double> compute_ratio;  // raw (high/low)^2, resolution comparisons only
};

/// (variant - baseline) * 100, in percentage points.
double absolute_gain_points(double baseline, double variant);

/// (variant - baseline) / baseline * 100. Throws ZeroBaseline when baseline == 0.
double relative_change_percent(double baseline, double variant);

/// (high / low)^2. Throws InvalidResolution unless 0 < low <= high.
double flops_ratio(double low_px, double high_px);

/// Floors to one decimal ("+1.7x" for 1.777...). A 1e-9 guard keeps exact
/// decimals such as 2.2 from flooring to 2.1.
double floor_one_decimal(double value);

DeltaReport make_delta(std::string label, double baseline, double variant, DeltaKind kind);

struct ResolutionPair {
  ModelCard low;
  ModelCard high;
  double recall_low = 0.0;
  double recall_high = 0.0;
};

/// One relative-percent DeltaReport per pair with its compute ratio.
/// Throws BackboneMismatch when a pair's backbones differ.
std::vector<DeltaReport> resolution_wall(const std::vector<ResolutionPair>& pairs);

enum class Metric { Recall1, Recall3, Recall5, Phi };
enum class Grouping { None, SizeClass, Family, Dataset };

std::string_view to_string(Metric metric) noexcept;

/// nullopt when the row lacks the metric (phi needs recall1).
std::optional<double> metric_value(const ResultRow& row, Metric metric);

struct LeaderboardEntry {
  std::string group;  // empty when ungrouped
  std::size_t position = 0;  // 1-based within the group
  double value = 0.0;
  const ResultRow* row = nullptr;
};

/// Rows ordered by descending metric (ties by ascending name), grouped when
/// requested. Size classes appear Small..VeryLarge, other groups by name.
/// Throws MissingMetric if any row lacks the metric.
std::vector<LeaderboardEntry> leaderboard(const ResultsTable& table, Metric metric,
                                          Grouping group_by = Grouping::None);

/// Restriction of `table` to rows that have `metric`.
ResultsTable rows_with(const ResultsTable& table, Metric metric);

}  // namespace mpr
