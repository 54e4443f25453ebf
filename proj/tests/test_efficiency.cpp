#include <doctest.h>

#include "fixtures.hpp"
#include "mpr/efficiency.hpp"

using namespace mpr;

TEST_SUITE("efficiency_metrics") {

TEST_CASE("metric comparison rows match printed values") {
  struct Row {
    const char* name;
    double n, r1, m1, m2, phi;
  };
  const Row rows[] = {{"ViTamin-S", 62, 0.432, 0.70, 0.30, 0.93},
                      {"ResNet50", 102, 0.405, 0.40, 0.16, 0.45},
                      {"MobileCLIP-B", 150, 0.653, 0.44, 0.28, 2.37},
                      {"ViT-L-14", 428, 0.568, 0.13, 0.08, 0.41},
                      {"PE-Core-L-14", 671, 0.758, 0.11, 0.09, 1.46}};
  for (const auto& r : rows) {
    CAPTURE(r.name);
    CHECK(std::abs(linear_density(r.r1, r.n) - r.m1) <= 0.02);
    CHECK(std::abs(quadratic_density(r.r1, r.n) - r.m2) <= 0.02);
    CHECK(std::abs(semantic_power_density(r.r1, r.n) - r.phi) <= 0.02);
  }
}

TEST_CASE("values agree with the closed form") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> r(0.0, 1.0), n(10.0, 5000.0);
  for (int i = 0; i < 200; ++i) {
    const double rr = r(rng), nn = n(rng);
    CHECK(semantic_power_density(rr, nn) == doctest::Approx(oracle::phi(rr, nn)).epsilon(1e-12));
    CHECK(linear_density(rr, nn) == doctest::Approx(rr / nn * 100).epsilon(1e-12));
    CHECK(quadratic_density(rr, nn) == doctest::Approx(rr * rr / nn * 100).epsilon(1e-12));
  }
}

TEST_CASE("phi ranks MobileCLIP-B first while M1 favours ViTamin-S") {
  CHECK(linear_density(0.432, 62) > linear_density(0.653, 150));
  CHECK(semantic_power_density(0.653, 150) > semantic_power_density(0.432, 62));
  CHECK(semantic_power_density(0.653, 150) > semantic_power_density(0.758, 671));
}

TEST_CASE("phi is monotone in recall and decreasing in size") {
  for (double r = 0.0; r < 0.99; r += 0.01) {
    CHECK(semantic_power_density(r + 0.01, 100) >= semantic_power_density(r, 100));
  }
  CHECK(semantic_power_density(0.6, 100) > semantic_power_density(0.6, 200));
}

TEST_CASE("odds ratio crosses one at fifty percent") {
  CHECK(semantic_power_density(0.5, 100) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(semantic_power_density(0.0, 100) == 0.0);
  CHECK(std::isfinite(semantic_power_density(1.0, 100)));
}

TEST_CASE("domain errors") {
  CHECK(fixture::error_code([] { semantic_power_density(1.01, 100); }) == ErrorCode::InvalidRecall);
  CHECK(fixture::error_code([] { semantic_power_density(-0.1, 100); }) == ErrorCode::InvalidRecall);
  CHECK(fixture::error_code([] { semantic_power_density(0.5, 0); }) == ErrorCode::InvalidParams);
  CHECK(fixture::error_code([] { linear_density(0.5, -3); }) == ErrorCode::InvalidParams);
  CHECK(fixture::error_code([] { quadratic_density(2.0, 3); }) == ErrorCode::InvalidRecall);
}

TEST_CASE("tier boundaries") {
  CHECK(classify_tier(2.83) == Tier::Tier1);
  CHECK(classify_tier(2.0) == Tier::Tier2);
  CHECK(classify_tier(1.0) == Tier::Tier2);
  CHECK(classify_tier(0.999) == Tier::Tier3);
  CHECK(classify_tier(0.5) == Tier::Tier3);
  CHECK(classify_tier(0.4999) == Tier::Tier4);
  CHECK(classify_tier(0.0) == Tier::Tier4);
  CHECK(to_string(Tier::Tier3) == "Tier3");
  CHECK(tier_from_string("Tier1") == Tier::Tier1);
}

TEST_CASE("size class boundaries") {
  CHECK(classify_size(62) == SizeClass::Small);
  CHECK(classify_size(199.9) == SizeClass::Small);
  CHECK(classify_size(200) == SizeClass::Medium);
  CHECK(classify_size(351) == SizeClass::Medium);
  CHECK(classify_size(400) == SizeClass::Large);
  CHECK(classify_size(999) == SizeClass::Large);
  CHECK(classify_size(1000) == SizeClass::VeryLarge);
  CHECK(to_string(SizeClass::VeryLarge) == "VeryLarge");
}

TEST_CASE("efficiency csv formatting") {
  const auto rec = make_efficiency_record({"MobileCLIP-B", "MobileCLIP", 150, "DataCompDR", 224, "MobileCLIP-B"}, 0.653);
  CHECK(rec.tier == Tier::Tier1);
  CHECK(rec.size_class == SizeClass::Small);
  CHECK(efficiency_csv_header() == "Model,Size,Recall@1,M1,M2,phi");
  CHECK(efficiency_csv_row(rec) == "MobileCLIP-B,150,0.653,0.44,0.28,2.36");
}

}  // TEST_SUITE
