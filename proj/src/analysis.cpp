#include "mpr/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_set>

#include "mpr/error.hpp"
#include "mpr/format.hpp"

namespace mpr {

namespace {

const std::vector<std::string> kColumns = {"name",          "family",           "backbone",
                                           "params_millions", "pretrain_dataset", "resolution_px",
                                           "recall1",       "recall3",          "recall5"};

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::MalformedTable, "bad " + what + " '" + text + "'");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& text, const std::string& what) {
  if (text.empty()) return std::nullopt;
  return parse_number(text, what);
}

}  // namespace

ResultsTable::ResultsTable(std::vector<ResultRow> rows) : rows_(std::move(rows)) {
  std::unordered_set<std::string> names;
  for (const auto& row : rows_) {
    if (!names.insert(row.model.name).second) {
      throw Error(ErrorCode::MalformedTable, "duplicate model name " + row.model.name);
    }
    for (const auto& r : {row.recall1, row.recall3, row.recall5}) {
      if (r && !(*r >= 0.0 && *r <= 1.0)) {
        throw Error(ErrorCode::MalformedTable, "recall outside [0,1] for " + row.model.name);
      }
    }
  }
}

ResultsTable ResultsTable::load_csv(const std::filesystem::path& path) {
  const auto raw = read_csv(path);
  if (raw.empty()) return ResultsTable{};
  if (raw.front() != kColumns) {
    throw Error(ErrorCode::MalformedTable, path.string() + ": unexpected header");
  }
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto& f = raw[i];
    if (f.size() != kColumns.size()) {
      throw Error(ErrorCode::MalformedTable,
                  path.string() + ": line " + std::to_string(i + 1) + " has " +
                      std::to_string(f.size()) + " fields");
    }
    ResultRow row;
    row.model.name = f[0];
    row.model.family = f[1];
    row.model.backbone = f[2];
    row.model.params_millions = parse_number(f[3], "params_millions");
    row.model.pretrain_dataset = f[4];
    row.model.resolution_px = static_cast<int>(parse_number(f[5], "resolution_px"));
    row.recall1 = parse_optional(f[6], "recall1");
    row.recall3 = parse_optional(f[7], "recall3");
    row.recall5 = parse_optional(f[8], "recall5");
    try {
      check_model_card(row.model);
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedTable, e.what());
    }
    rows.push_back(std::move(row));
  }
  return ResultsTable(std::move(rows));
}

const ResultRow* ResultsTable::find(std::string_view name) const noexcept {
  for (const auto& row : rows_) {
    if (row.model.name == name) return &row;
  }
  return nullptr;
}

const ResultRow* ResultsTable::find(std::string_view backbone,
                                    std::string_view dataset) const noexcept {
  const ResultRow* best = nullptr;
  for (const auto& row : rows_) {
    if (row.model.backbone != backbone || row.model.pretrain_dataset != dataset) continue;
    if (!best || row.model.resolution_px < best->model.resolution_px) best = &row;
  }
  return best;
}

double absolute_gain_points(double baseline, double variant) { return (variant - baseline) * 100.0; }

double relative_change_percent(double baseline, double variant) {
  if (baseline == 0.0) throw Error(ErrorCode::ZeroBaseline, "relative change from zero");
  return (variant - baseline) / baseline * 100.0;
}

double flops_ratio(double low_px, double high_px) {
  if (!(low_px > 0.0) || !(high_px >= low_px)) {
    throw Error(ErrorCode::InvalidResolution,
                "need 0 < low <= high, got " + fixed(low_px, 0) + " and " + fixed(high_px, 0));
  }
  const double r = high_px / low_px;
  return r * r;
}

double floor_one_decimal(double value) { return std::floor(value * 10.0 + 1e-9) / 10.0; }

DeltaReport make_delta(std::string label, double baseline, double variant, DeltaKind kind) {
  DeltaReport d;
  d.label = std::move(label);
  d.baseline = baseline;
  d.variant = variant;
  d.kind = kind;
  d.delta = kind == DeltaKind::AbsolutePoints ? absolute_gain_points(baseline, variant)
                                              : relative_change_percent(baseline, variant);
  return d;
}

std::vector<DeltaReport> resolution_wall(const std::vector<ResolutionPair>& pairs) {
  std::vector<DeltaReport> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.low.backbone != p.high.backbone) {
      throw Error(ErrorCode::BackboneMismatch, p.low.backbone + " vs " + p.high.backbone);
    }
    auto d = make_delta(p.low.backbone, p.recall_low, p.recall_high, DeltaKind::RelativePercent);
    d.compute_ratio = flops_ratio(p.low.resolution_px, p.high.resolution_px);
    out.push_back(std::move(d));
  }
  return out;
}

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::Recall1: return "Recall@1";
    case Metric::Recall3: return "Recall@3";
    case Metric::Recall5: return "Recall@5";
    case Metric::Phi: return "phi";
  }
  return "?";
}

std::optional<double> metric_value(const ResultRow& row, Metric metric) {
  switch (metric) {
    case Metric::Recall1: return row.recall1;
    case Metric::Recall3: return row.recall3;
    case Metric::Recall5: return row.recall5;
    case Metric::Phi:
      if (!row.recall1) return std::nullopt;
      return semantic_power_density(*row.recall1, row.model.params_millions);
  }
  return std::nullopt;
}

ResultsTable rows_with(const ResultsTable& table, Metric metric) {
  std::vector<ResultRow> kept;
  for (const auto& row : table.rows()) {
    if (metric_value(row, metric)) kept.push_back(row);
  }
  return ResultsTable(std::move(kept));
}

std::vector<LeaderboardEntry> leaderboard(const ResultsTable& table, Metric metric,
                                          Grouping group_by) {
  auto group_of = [group_by](const ResultRow& row) -> std::string {
    switch (group_by) {
      case Grouping::None: return {};
      case Grouping::SizeClass: return std::string(to_string(classify_size(row.model.params_millions)));
      case Grouping::Family: return row.model.family;
      case Grouping::Dataset: return row.model.pretrain_dataset;
    }
    return {};
  };
  // Size classes sort by their natural order, everything else by name.
  auto group_key = [group_by](const ResultRow& row, const std::string& group) -> std::string {
    if (group_by == Grouping::SizeClass) {
      return std::to_string(static_cast<int>(classify_size(row.model.params_millions)));
    }
    return group;
  };

  struct Keyed {
    std::string key;
    LeaderboardEntry entry;
  };
  std::vector<Keyed> items;
  items.reserve(table.rows().size());
  for (const auto& row : table.rows()) {
    const auto value = metric_value(row, metric);
    if (!value) {
      throw Error(ErrorCode::MissingMetric,
                  std::string(to_string(metric)) + " missing for " + row.model.name);
    }
    auto group = group_of(row);
    auto key = group_key(row, group);
    items.push_back({std::move(key), {std::move(group), 0, *value, &row}});
  }
  std::sort(items.begin(), items.end(), [](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.entry.value != b.entry.value) return a.entry.value > b.entry.value;
    return a.entry.row->model.name < b.entry.row->model.name;
  });

  std::vector<LeaderboardEntry> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto e = items[i].entry;
    e.position = (i > 0 && items[i - 1].key == items[i].key) ? out.back().position + 1 : 1;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mpr
