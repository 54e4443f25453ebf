#pragma once

// Accuracy-per-parameter metrics. All three scale by 100 so that values land
// in the same range as published leaderboards (e.g. 0.432 / 62M -> 0.70).

#include <string_view>

#include "mpr/embedding_store.hpp"

namespace mpr {

inline constexpr double kOddsEpsilon = 1e-6;

/// Semantic power density: squared retrieval odds ratio per million
/// parameters, (r / (1 - r + eps))^2 / N * 100.
/// Throws InvalidRecall unless 0 <= recall1 <= 1, InvalidParams unless N > 0.
double semantic_power_density(double recall1, double params_millions);

/// M1 = r / N * 100.
double linear_density(double recall1, double params_millions);

/// M2 = r^2 / N * 100.
double quadratic_density(double recall1, double params_millions);

enum class Tier { Tier1, Tier2, Tier3, Tier4 };
enum class SizeClass { Small, Medium, Large, VeryLarge };

/// Tier1: phi > 2.0; Tier2: [1.0, 2.0]; Tier3: [0.5, 1.0); Tier4: < 0.5.
/// phi == 2.0 exactly is Tier2.
Tier classify_tier(double phi) noexcept;

/// Small < 200M <= Medium < 400M <= Large < 1000M <= VeryLarge.
SizeClass classify_size(double params_millions) noexcept;

std::string_view to_string(Tier tier) noexcept;
std::string_view to_string(SizeClass size) noexcept;
Tier tier_from_string(std::string_view text);

struct EfficiencyRecord {
  ModelCard model;
  double recall1 = 0.0;
  double phi = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  Tier tier = Tier::Tier4;
  SizeClass size_class = SizeClass::Small;
};

EfficiencyRecord make_efficiency_record(const ModelCard& model, double recall1);

/// "Model,Size,Recall@1,M1,M2,phi"
std::string efficiency_csv_header();
std::string efficiency_csv_row(const EfficiencyRecord& record);

}  // namespace mpr
