#pragma once

// Rebuilds every derived report from the Recall columns of a ResultsTable and
// compares the computed cells with published values.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mpr/analysis.hpp"

namespace mpr {

struct ReportCell {
  std::optional<double> number;
  std::string text;  // display form
};

struct ReportTable {
  std::string name;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::map<std::pair<std::string, std::string>, ReportCell> cells;  // (row key, column)

  std::string to_csv() const;
  std::string to_markdown() const;
  nlohmann::ordered_json to_json() const;
};

struct PublishedCell {
  std::string report;
  std::string row;
  std::string column;
  std::string value;
  std::optional<double> tolerance;  // absent: exact text match
};

std::vector<PublishedCell> load_published_cells(const std::filesystem::path& path);

struct CellVerdict {
  PublishedCell published;
  std::string computed;  // empty when the cell was not produced
  std::optional<double> difference;
  bool pass = false;
};

struct ReproductionBundle {
  std::vector<ReportTable> reports;
  std::vector<CellVerdict> verdicts;
  std::vector<std::string> warnings;

  const ReportTable* report(std::string_view name) const noexcept;
  std::size_t failures() const noexcept;
  std::string summary_markdown() const;
  std::string summary_csv() const;
};

ReportTable efficiency_report(const ResultsTable& table);
ReportTable family_tier_report(const ResultsTable& table);
ReportTable discriminative_gap_report(const ResultsTable& table, std::size_t top = 5);
ReportTable data_quality_gain_report(const ResultsTable& table);
ReportTable noise_penalty_report(const ResultsTable& table);
ReportTable scale_collapse_report(const ResultsTable& table);
ReportTable resolution_wall_report(const ResultsTable& table);
ReportTable size_leaders_report(const ResultsTable& table);
ReportTable sota_hierarchy_report(const ResultsTable& table, std::size_t top = 10);
ReportTable dataset_leaders_report(const ResultsTable& table);

std::vector<CellVerdict> compare(const std::vector<ReportTable>& reports,
                                 const std::vector<PublishedCell>& published);

ReproductionBundle reproduce(const ResultsTable& table, const std::vector<PublishedCell>& published);

/// Writes <name>.csv/.md/.json per report plus diff_summary.md/.csv.
void write_bundle(const ReproductionBundle& bundle, const std::filesystem::path& out_dir);

}  // namespace mpr
