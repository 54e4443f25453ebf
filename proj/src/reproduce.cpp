#include "mpr/reproduce.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mpr/error.hpp"
#include "mpr/format.hpp"
#include "mpr/retrieval_metrics.hpp"

namespace mpr {

namespace {

constexpr const char* kLargeScaleData = "WIT-400M";
constexpr const char* kFilteredData = "DataComp-XL";
constexpr const char* kRawScaleData = "LAION-2B";
constexpr const char* kNoisyData = "CommonPool";
const std::vector<std::string> kSmallScaleData = {"YFCC-15M", "CommonPool-S"};

std::string recall_text(const std::optional<double>& r) { return r ? fixed(*r, 3) : "-"; }

void add_number(ReportTable& t, const std::string& row, const std::string& col, double value,
                int decimals) {
  t.cells[{row, col}] = ReportCell{value, fixed(value, decimals)};
}

void add_text(ReportTable& t, const std::string& row, const std::string& col, std::string text) {
  t.cells[{row, col}] = ReportCell{std::nullopt, std::move(text)};
}

/// Backbones in first-appearance order that have a row on each dataset.
std::vector<std::string> backbones_with(const ResultsTable& table,
                                        const std::vector<std::string>& datasets) {
  std::vector<std::string> out;
  for (const auto& row : table.rows()) {
    const auto& b = row.model.backbone;
    if (std::find(out.begin(), out.end(), b) != out.end()) continue;
    const bool all = std::all_of(datasets.begin(), datasets.end(), [&](const std::string& d) {
      const auto* r = table.find(b, d);
      return r && r->recall1;
    });
    if (all) out.push_back(b);
  }
  return out;
}

std::string backbone_with_size(const ResultRow& row) {
  return row.model.backbone + " (" + fixed(row.model.params_millions, 0) + "M)";
}

std::optional<double> parse_double(const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string ReportTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_escape(columns[i]);
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i]);
    out += "\n";
  }
  return out;
}

std::string ReportTable::to_markdown() const {
  std::string out = "# " + title + "\n\n|";
  for (const auto& c : columns) out += " " + md_escape(c) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : rows) {
    out += "|";
    for (const auto& v : row) out += " " + md_escape(v) + " |";
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json ReportTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["name"] = name;
  doc["title"] = title;
  doc["columns"] = columns;
  doc["rows"] = rows;
  auto& cells_json = doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& [key, cell] : cells) {
    nlohmann::ordered_json c;
    c["row"] = key.first;
    c["column"] = key.second;
    if (cell.number) c["value"] = *cell.number;
    c["text"] = cell.text;
    cells_json.push_back(std::move(c));
  }
  return doc;
}

std::vector<PublishedCell> load_published_cells(const std::filesystem::path& path) {
  const auto raw = read_csv(path);
  std::vector<PublishedCell> out;
  if (raw.empty()) return out;
  const std::vector<std::string> header = {"report", "row", "column", "value", "tolerance"};
  if (raw.front() != header) throw Error(ErrorCode::MalformedTable, path.string() + ": bad header");
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto& f = raw[i];
    if (f.size() != header.size()) {
      throw Error(ErrorCode::MalformedTable, path.string() + ": line " + std::to_string(i + 1));
    }
    PublishedCell cell{f[0], f[1], f[2], f[3], std::nullopt};
    if (!f[4].empty()) {
      cell.tolerance = parse_double(f[4]);
      if (!cell.tolerance) throw Error(ErrorCode::MalformedTable, "bad tolerance '" + f[4] + "'");
    }
    out.push_back(std::move(cell));
  }
  return out;
}

ReportTable efficiency_report(const ResultsTable& table) {
  ReportTable t{"efficiency", "Accuracy-per-parameter metrics", {"Model", "Size", "Recall@1", "M1", "M2", "phi"}, {}, {}};
  std::vector<EfficiencyRecord> records;
  for (const auto& row : table.rows()) {
    if (row.recall1) records.push_back(make_efficiency_record(row.model, *row.recall1));
  }
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.phi != b.phi) return a.phi > b.phi;
    return a.model.name < b.model.name;
  });
  for (const auto& r : records) {
    t.rows.push_back({r.model.name, fixed(r.model.params_millions, 0), fixed(r.recall1, 3),
                      fixed(r.m1, 2), fixed(r.m2, 2), fixed(r.phi, 2)});
    add_number(t, r.model.name, "M1", r.m1, 2);
    add_number(t, r.model.name, "M2", r.m2, 2);
    add_number(t, r.model.name, "phi", r.phi, 2);
    add_text(t, r.model.name, "tier", std::string(to_string(r.tier)));
    add_text(t, r.model.name, "size_class", std::string(to_string(r.size_class)));
  }
  return t;
}

ReportTable family_tier_report(const ResultsTable& table) {
  ReportTable t{"family_tiers",
                "Peak semantic power density per family",
                {"Family", "Max phi", "Backbone", "PT data", "Recall@5", "Recall@1", "Tier"},
                {},
                {}};
  const auto with_r1 = rows_with(table, Metric::Recall1);
  const auto board = leaderboard(with_r1, Metric::Phi, Grouping::Family);
  std::vector<LeaderboardEntry> leaders;
  for (const auto& e : board) {
    if (e.position == 1) leaders.push_back(e);
  }
  std::stable_sort(leaders.begin(), leaders.end(), [](const auto& a, const auto& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.group < b.group;
  });
  for (const auto& e : leaders) {
    const auto tier = std::string(to_string(classify_tier(e.value)));
    const auto& m = e.row->model;
    t.rows.push_back({e.group, fixed(e.value, 2), m.backbone, m.pretrain_dataset,
                      recall_text(e.row->recall5), recall_text(e.row->recall1), tier});
    add_number(t, e.group, "max_phi", e.value, 2);
    add_text(t, e.group, "tier", tier);
    add_text(t, e.group, "leader", m.backbone);
  }
  return t;
}

ReportTable discriminative_gap_report(const ResultsTable& table, std::size_t top) {
  ReportTable t{"discriminative_gap",
                "Recall@5 versus Recall@1 gap",
                {"Model checkpoint", "Size (B)", "Recall@5", "Recall@3", "Recall@1", "Delta"},
                {},
                {}};
  const auto candidates = rows_with(rows_with(table, Metric::Recall5), Metric::Recall1);
  const auto board = leaderboard(candidates, Metric::Recall5);
  for (std::size_t i = 0; i < board.size() && i < top; ++i) {
    const auto& row = *board[i].row;
    EvalReport report;
    report.model = row.model;
    report.recall_at = {{1, *row.recall1}, {5, *row.recall5}};
    if (row.recall3) report.recall_at[3] = *row.recall3;
    const double delta = discriminative_gap(report);
    t.rows.push_back({row.model.name, fixed(row.model.params_millions / 1000.0, 2),
                      recall_text(row.recall5), recall_text(row.recall3),
                      recall_text(row.recall1), fixed(delta, 3)});
    add_number(t, row.model.name, "delta", delta, 3);
  }
  return t;
}

ReportTable data_quality_gain_report(const ResultsTable& table) {
  ReportTable t{"data_quality_gain",
                "Same backbone across pretraining sources (absolute gain, points)",
                {"Backbone", kLargeScaleData, kRawScaleData, kFilteredData, "Curated gain"},
                {},
                {}};
  for (const auto& b : backbones_with(table, {kLargeScaleData, kFilteredData})) {
    const auto* base = table.find(b, kLargeScaleData);
    const auto* filtered = table.find(b, kFilteredData);
    const auto* raw = table.find(b, kRawScaleData);
    const auto d = make_delta(b, *base->recall1, *filtered->recall1, DeltaKind::AbsolutePoints);
    t.rows.push_back({backbone_with_size(*base), fixed(*base->recall1, 3),
                      raw ? recall_text(raw->recall1) : "-", fixed(*filtered->recall1, 3),
                      signed_fixed(d.delta, 1) + "%"});
    add_number(t, b, "gain_points", d.delta, 1);
  }
  return t;
}

ReportTable noise_penalty_report(const ResultsTable& table) {
  ReportTable t{"noise_penalty",
                "Noisy versus web-scale pretraining (relative change, percent)",
                {"Backbone", kLargeScaleData, kNoisyData, kFilteredData, "Noise penalty"},
                {},
                {}};
  for (const auto& b : backbones_with(table, {kLargeScaleData, kNoisyData})) {
    const auto* base = table.find(b, kLargeScaleData);
    const auto* noisy = table.find(b, kNoisyData);
    const auto* filtered = table.find(b, kFilteredData);
    const auto d = make_delta(b, *base->recall1, *noisy->recall1, DeltaKind::RelativePercent);
    t.rows.push_back({backbone_with_size(*base), fixed(*base->recall1, 3),
                      fixed(*noisy->recall1, 3), filtered ? recall_text(filtered->recall1) : "-",
                      signed_fixed(d.delta, 1) + "%"});
    add_number(t, b, "penalty_percent", d.delta, 1);
  }
  return t;
}

ReportTable scale_collapse_report(const ResultsTable& table) {
  ReportTable t{"scale_collapse",
                "Large- versus small-scale pretraining (relative change, percent)",
                {"Backbone", "Large-scale PT", "Small-scale PT", "Recall@1 (Large)",
                 "Recall@1 (Small)", "Collapse ratio"},
                {},
                {}};
  std::vector<std::string> seen;
  for (const auto& row : table.rows()) {
    const auto& b = row.model.backbone;
    if (std::find(seen.begin(), seen.end(), b) != seen.end()) continue;
    const auto* large = table.find(b, kLargeScaleData);
    if (!large || !large->recall1) continue;
    for (const auto& small_set : kSmallScaleData) {
      const auto* small = table.find(b, small_set);
      if (!small || !small->recall1) continue;
      seen.push_back(b);
      const auto d = make_delta(b, *large->recall1, *small->recall1, DeltaKind::RelativePercent);
      t.rows.push_back({b, kLargeScaleData, small_set, fixed(*large->recall1, 3),
                        fixed(*small->recall1, 3), signed_fixed(d.delta, 1) + "%"});
      add_number(t, b, "collapse_percent", d.delta, 1);
      break;
    }
  }
  return t;
}

ReportTable resolution_wall_report(const ResultsTable& table) {
  ReportTable t{"resolution_wall",
                "Input resolution versus accuracy and compute",
                {"Architecture", "Low res. (Recall@1)", "High res. (Recall@1)", "Delta (Accuracy)",
                 "Compute cost (FLOPs)"},
                {},
                {}};
  std::vector<ResolutionPair> pairs;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : table.rows()) {
    const auto key = std::make_pair(row.model.backbone, row.model.pretrain_dataset);
    if (!row.recall1 || !seen.insert(key).second) continue;
    const ResultRow* low = nullptr;
    const ResultRow* high = nullptr;
    for (const auto& other : table.rows()) {
      if (other.model.backbone != key.first || other.model.pretrain_dataset != key.second ||
          !other.recall1) {
        continue;
      }
      if (!low || other.model.resolution_px < low->model.resolution_px) low = &other;
      if (!high || other.model.resolution_px > high->model.resolution_px) high = &other;
    }
    if (low->model.resolution_px == high->model.resolution_px) continue;
    pairs.push_back({low->model, high->model, *low->recall1, *high->recall1});
  }
  const auto deltas = resolution_wall(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto& d = deltas[i];
    const double printed_ratio = floor_one_decimal(*d.compute_ratio);
    t.rows.push_back({d.label,
                      fixed(p.recall_low, 3) + " (" + std::to_string(p.low.resolution_px) + "px)",
                      fixed(p.recall_high, 3) + " (" + std::to_string(p.high.resolution_px) + "px)",
                      signed_fixed(d.delta, 1) + "%", "+" + fixed(printed_ratio, 1) + "x"});
    add_number(t, d.label, "delta_percent", d.delta, 1);
    add_number(t, d.label, "flops_ratio", printed_ratio, 1);
  }
  return t;
}

ReportTable size_leaders_report(const ResultsTable& table) {
  ReportTable t{"size_leaders",
                "Best Recall@1 per parameter class",
                {"Size family", "Checkpoint", "PT data", "Size", "Recall@1"},
                {},
                {}};
  const auto ranked = rows_with(table, Metric::Recall1);
  for (const auto& e : leaderboard(ranked, Metric::Recall1, Grouping::SizeClass)) {
    if (e.position != 1) continue;
    const auto& m = e.row->model;
    t.rows.push_back({e.group, m.name, m.pretrain_dataset, fixed(m.params_millions, 0) + "M",
                      fixed(e.value, 3)});
    add_text(t, e.group, "leader", m.name);
    add_number(t, e.group, "recall1", e.value, 3);
  }
  return t;
}

ReportTable sota_hierarchy_report(const ResultsTable& table, std::size_t top) {
  ReportTable t{"sota_hierarchy",
                "Recall@1 leaderboard",
                {"Rank", "Checkpoint", "Size (M)", "PT data", "Recall@1"},
                {},
                {}};
  const auto ranked = rows_with(table, Metric::Recall1);
  const auto board = leaderboard(ranked, Metric::Recall1);
  for (std::size_t i = 0; i < board.size() && i < top; ++i) {
    const auto& m = board[i].row->model;
    const auto pos = std::to_string(i + 1);
    t.rows.push_back({pos, m.name, fixed(m.params_millions, 0), m.pretrain_dataset,
                      fixed(board[i].value, 3)});
    add_text(t, pos, "leader", m.name);
  }
  return t;
}

ReportTable dataset_leaders_report(const ResultsTable& table) {
  ReportTable t{"dataset_leaders",
                "Best Recall@1 per pretraining dataset",
                {"Data", "Checkpoint", "Recall@1"},
                {},
                {}};
  const auto ranked = rows_with(table, Metric::Recall1);
  auto board = leaderboard(ranked, Metric::Recall1, Grouping::Dataset);
  std::vector<LeaderboardEntry> leaders;
  for (const auto& e : board) {
    if (e.position == 1) leaders.push_back(e);
  }
  std::stable_sort(leaders.begin(), leaders.end(),
                   [](const auto& a, const auto& b) { return a.value > b.value; });
  for (const auto& e : leaders) {
    t.rows.push_back({e.group, e.row->model.name, fixed(e.value, 3)});
    add_text(t, e.group, "leader", e.row->model.name);
  }
  return t;
}

std::vector<CellVerdict> compare(const std::vector<ReportTable>& reports,
                                 const std::vector<PublishedCell>& published) {
  std::vector<CellVerdict> out;
  out.reserve(published.size());
  for (const auto& cell : published) {
    CellVerdict v{cell, "", std::nullopt, false};
    const auto report = std::find_if(reports.begin(), reports.end(),
                                     [&](const ReportTable& r) { return r.name == cell.report; });
    if (report != reports.end()) {
      const auto it = report->cells.find({cell.row, cell.column});
      if (it != report->cells.end()) {
        v.computed = it->second.text;
        if (cell.tolerance) {
          const auto expected = parse_double(cell.value);
          if (expected && it->second.number) {
            v.difference = *it->second.number - *expected;
            v.pass = std::abs(*v.difference) <= *cell.tolerance + 1e-9;
          }
        } else {
          v.pass = it->second.text == cell.value;
        }
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

const ReportTable* ReproductionBundle::report(std::string_view name) const noexcept {
  for (const auto& r : reports) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::size_t ReproductionBundle::failures() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return !v.pass; }));
}

std::string ReproductionBundle::summary_markdown() const {
  std::ostringstream os;
  os << "# Published-value comparison\n\n"
     << verdicts.size() - failures() << "/" << verdicts.size() << " cells within tolerance\n\n";
  for (const auto& w : warnings) os << "> warning: " << w << "\n";
  if (!warnings.empty()) os << "\n";
  os << "| Report | Row | Column | Published | Computed | Diff | Tolerance | Verdict |\n"
     << "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
  for (const auto& v : verdicts) {
    const auto& p = v.published;
    os << "| " << p.report << " | " << md_escape(p.row) << " | " << p.column << " | " << p.value
       << " | " << (v.computed.empty() ? "(missing)" : v.computed) << " | "
       << (v.difference ? signed_fixed(*v.difference, 4) : "") << " | "
       << (p.tolerance ? fixed(*p.tolerance, 3) : "exact") << " | " << (v.pass ? "PASS" : "FAIL")
       << " |\n";
  }
  return os.str();
}

std::string ReproductionBundle::summary_csv() const {
  std::string out = "report,row,column,published,computed,difference,tolerance,verdict\n";
  for (const auto& v : verdicts) {
    const auto& p = v.published;
    out += csv_escape(p.report) + "," + csv_escape(p.row) + "," + csv_escape(p.column) + "," +
           csv_escape(p.value) + "," + csv_escape(v.computed) + "," +
           (v.difference ? signed_fixed(*v.difference, 4) : "") + "," +
           (p.tolerance ? fixed(*p.tolerance, 3) : "exact") + "," + (v.pass ? "PASS" : "FAIL") +
           "\n";
  }
  return out;
}

ReproductionBundle reproduce(const ResultsTable& table, const std::vector<PublishedCell>& published) {
  ReproductionBundle bundle;
  if (table.empty()) {
    bundle.warnings.push_back("reference table is empty; nothing to reproduce");
    return bundle;
  }
  for (const auto& row : table.rows()) {
    if (!row.recall1) bundle.warnings.push_back("MissingMetric: no Recall@1 for " + row.model.name);
  }
  bundle.reports = {efficiency_report(table),        family_tier_report(table),
                    discriminative_gap_report(table), data_quality_gain_report(table),
                    noise_penalty_report(table),      scale_collapse_report(table),
                    resolution_wall_report(table),    size_leaders_report(table),
                    sota_hierarchy_report(table),     dataset_leaders_report(table)};
  bundle.verdicts = compare(bundle.reports, published);
  return bundle;
}

void write_bundle(const ReproductionBundle& bundle, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& r : bundle.reports) {
    write_text(out_dir / (r.name + ".csv"), r.to_csv());
    write_text(out_dir / (r.name + ".md"), r.to_markdown());
    write_text(out_dir / (r.name + ".json"), r.to_json().dump(2) + "\n");
  }
  write_text(out_dir / "diff_summary.md", bundle.summary_markdown());
  write_text(out_dir / "diff_summary.csv", bundle.summary_csv());
}

}  // namespace mpr
