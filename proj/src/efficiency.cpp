#include "mpr/efficiency.hpp"

#include <cmath>

#include "mpr/error.hpp"
#include "mpr/format.hpp"

namespace mpr {

namespace {

void check_inputs(double recall1, double params_millions) {
  if (!(recall1 >= 0.0 && recall1 <= 1.0)) {
    throw Error(ErrorCode::InvalidRecall, std::to_string(recall1));
  }
  if (!(params_millions > 0.0) || !std::isfinite(params_millions)) {
    throw Error(ErrorCode::InvalidParams, std::to_string(params_millions));
  }
}

}  // namespace

double semantic_power_density(double recall1, double params_millions) {
  check_inputs(recall1, params_millions);
  const double odds = recall1 / (1.0 - recall1 + kOddsEpsilon);
  return odds * odds / params_millions * 100.0;
}

double linear_density(double recall1, double params_millions) {
  check_inputs(recall1, params_millions);
  return recall1 / params_millions * 100.0;
}

double quadratic_density(double recall1, double params_millions) {
  check_inputs(recall1, params_millions);
  return recall1 * recall1 / params_millions * 100.0;
}

Tier classify_tier(double phi) noexcept {
  if (phi > 2.0) return Tier::Tier1;
  if (phi >= 1.0) return Tier::Tier2;
  if (phi >= 0.5) return Tier::Tier3;
  return Tier::Tier4;
}

SizeClass classify_size(double params_millions) noexcept {
  if (params_millions < 200.0) return SizeClass::Small;
  if (params_millions < 400.0) return SizeClass::Medium;
  if (params_millions < 1000.0) return SizeClass::Large;
  return SizeClass::VeryLarge;
}

std::string_view to_string(Tier tier) noexcept {
  switch (tier) {
    case Tier::Tier1: return "Tier1";
    case Tier::Tier2: return "Tier2";
    case Tier::Tier3: return "Tier3";
    case Tier::Tier4: return "Tier4";
  }
  return "Tier4";
}

std::string_view to_string(SizeClass size) noexcept {
  switch (size) {
    case SizeClass::Small: return "Small";
    case SizeClass::Medium: return "Medium";
    case SizeClass::Large: return "Large";
    case SizeClass::VeryLarge: return "VeryLarge";
  }
  return "Small";
}

Tier tier_from_string(std::string_view text) {
  for (Tier t : {Tier::Tier1, Tier::Tier2, Tier::Tier3, Tier::Tier4}) {
    if (to_string(t) == text) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown tier '" + std::string(text) + "'");
}

EfficiencyRecord make_efficiency_record(const ModelCard& model, double recall1) {
  EfficiencyRecord r;
  r.model = model;
  r.recall1 = recall1;
  r.phi = semantic_power_density(recall1, model.params_millions);
  r.m1 = linear_density(recall1, model.params_millions);
  r.m2 = quadratic_density(recall1, model.params_millions);
  r.tier = classify_tier(r.phi);
  r.size_class = classify_size(model.params_millions);
  return r;
}

std::string efficiency_csv_header() { return "Model,Size,Recall@1,M1,M2,phi"; }

std::string efficiency_csv_row(const EfficiencyRecord& r) {
  return csv_escape(r.model.name) + "," + fixed(r.model.params_millions, 0) + "," +
         fixed(r.recall1, 3) + "," + fixed(r.m1, 2) + "," + fixed(r.m2, 2) + "," + fixed(r.phi, 2);
}

}  // namespace mpr
