#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "mpr/error.hpp"
#include "mpr/similarity.hpp"

using namespace mpr;

namespace {

bool bit_identical(const ScoreMatrix& a, const ScoreMatrix& b) {
  return a.scores.size() == b.scores.size() &&
         std::memcmp(a.scores.data(), b.scores.data(), a.scores.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("similarity") {

TEST_CASE("scores agree with a naive double loop") {
  std::mt19937_64 rng(3);
  for (std::size_t dim : {1u, 7u, 8u, 9u, 64u, 131u}) {
    const auto p = fixture::random_matrix(13, dim, rng, Side::Probe, "p");
    const auto g = fixture::random_matrix(11, dim, rng, Side::Gallery, "g");
    const auto fast = score_matrix(p, g);
    const auto ref = score_matrix_reference(p, g);
    const auto naive = oracle::scores(fixture::dense(p), fixture::dense(g));
    REQUIRE(fast.probes() == 13);
    REQUIRE(fast.gallery() == 11);
    for (std::size_t i = 0; i < 13; ++i) {
      for (std::size_t j = 0; j < 11; ++j) {
        CHECK(std::abs(fast.at(i, j) - naive[i][j]) < 1e-9);
        CHECK(std::abs(ref.at(i, j) - naive[i][j]) < 1e-9);
      }
    }
    CHECK(fast.probe_ids == p.ids());
    CHECK(fast.gallery_ids == g.ids());
  }
}

TEST_CASE("blocked kernel equals ordered_dot bit for bit") {
  std::mt19937_64 rng(5);
  const auto p = fixture::random_matrix(6, 77, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(10, 77, rng, Side::Gallery, "g");  // not a multiple of 4
  const auto s = score_matrix(p, g);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 10; ++j) CHECK(s.at(i, j) == ordered_dot(p.row(i), g.row(j)));
}

TEST_CASE("partial tiles on every edge equal ordered_dot bit for bit") {
  std::mt19937_64 rng(6);
  for (std::size_t probes : {1u, 2u, 3u, 31u, 33u, 65u}) {
    for (std::size_t gallery : {1u, 4u, 5u, 7u}) {
      for (std::size_t dim : {1u, 8u, 15u}) {
        const auto p = fixture::random_matrix(probes, dim, rng, Side::Probe, "p");
        const auto g = fixture::random_matrix(gallery, dim, rng, Side::Gallery, "g");
        const auto s = score_matrix(p, g);
        bool same = true;
        for (std::size_t i = 0; i < probes; ++i)
          for (std::size_t j = 0; j < gallery; ++j) same = same && s.at(i, j) == ordered_dot(p.row(i), g.row(j));
        CHECK_MESSAGE(same, probes, "x", gallery, " dim ", dim);
      }
    }
  }
}

TEST_CASE("worker count does not change a single bit") {
  std::mt19937_64 rng(9);
  const auto p = fixture::random_matrix(37, 96, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(29, 96, rng, Side::Gallery, "g");
  const auto one = score_matrix(p, g, 1);
  CHECK(bit_identical(one, score_matrix(p, g, 2)));
  CHECK(bit_identical(one, score_matrix(p, g, 8)));
  CHECK(bit_identical(one, score_matrix(p, g, 0)));
}

TEST_CASE("cosine scores are invariant to rescaling unit rows") {
  std::mt19937_64 rng(21);
  const auto p = fixture::random_matrix(5, 40, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(9, 40, rng, Side::Gallery, "g");
  std::vector<float> scaled(p.values().begin(), p.values().end());
  for (auto& x : scaled) x *= 3.5f;
  const auto renorm = l2_normalize(EmbeddingMatrix(p.ids(), p.dim(), scaled, Side::Probe));
  const auto a = score_matrix(p, g), b = score_matrix(renorm, g);
  for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(std::abs(a.scores[i] - b.scores[i]) < 1e-6);
}

TEST_CASE("dimension mismatch is rejected") {
  std::mt19937_64 rng(1);
  const auto p = fixture::random_matrix(2, 8, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(2, 9, rng, Side::Gallery, "g");
  CHECK(fixture::error_code([&] { score_matrix(p, g); }) == ErrorCode::DimensionMismatch);
  CHECK(fixture::error_code([&] { score_matrix_reference(p, g); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("ranking sorts by score then gallery index") {
  ScoreMatrix s{{"q0", "q1"}, {"a", "b", "c", "d"}, {0.1, 0.9, 0.9, 0.3, 0.5, 0.5, 0.5, 0.5}};
  const auto r = rank(s);
  CHECK(r.depth == 4);
  CHECK(r.tie_policy == "score-desc/index-asc");
  const auto o0 = r.order(0);
  CHECK(std::vector<std::uint32_t>(o0.begin(), o0.end()) == std::vector<std::uint32_t>{1, 2, 3, 0});
  const auto o1 = r.order(1);
  CHECK(std::vector<std::uint32_t>(o1.begin(), o1.end()) == std::vector<std::uint32_t>{0, 1, 2, 3});
  const auto sc = r.ranked_scores(0);
  CHECK(sc[0] == 0.9);
  CHECK(sc[3] == 0.1);
}

TEST_CASE("top-k ranking is a prefix of the full ranking") {
  std::mt19937_64 rng(17);
  const auto p = fixture::random_matrix(20, 16, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(50, 16, rng, Side::Gallery, "g");
  const auto s = score_matrix(p, g);
  const auto full = rank(s), top = rank(s, 5);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto f = full.order(i), t = top.order(i);
    CHECK(std::equal(t.begin(), t.end(), f.begin()));
    const auto expect = oracle::full_order(std::vector<double>(s.row(i).begin(), s.row(i).end()));
    CHECK(std::equal(f.begin(), f.end(), expect.begin()));
  }
}

TEST_CASE("ranking errors") {
  ScoreMatrix s{{"q"}, {"a", "b"}, {0.1, 0.2}};
  CHECK(fixture::error_code([&] { rank(s, 0); }) == ErrorCode::KOutOfRange);
  CHECK(fixture::error_code([&] { rank(s, 3); }) == ErrorCode::KOutOfRange);
  s.scores[1] = std::nan("");
  CHECK(fixture::error_code([&] { rank(s); }) == ErrorCode::NonFiniteScore);
}

TEST_CASE("ranking is identical across worker counts") {
  std::mt19937_64 rng(23);
  const auto p = fixture::random_matrix(31, 24, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(40, 24, rng, Side::Gallery, "g");
  const auto s = score_matrix(p, g);
  const auto one = rank(s, 10, 1);
  for (int w : {2, 8}) {
    const auto many = rank(s, 10, w);
    CHECK(one.indices == many.indices);
    CHECK(one.scores == many.scores);
  }
}

TEST_CASE("monotone calibration preserves rankings") {
  std::mt19937_64 rng(29);
  const auto p = fixture::random_matrix(15, 32, rng, Side::Probe, "p");
  const auto g = fixture::random_matrix(60, 32, rng, Side::Gallery, "g");
  const auto s = score_matrix(p, g);
  const auto base = rank(s).indices;
  CHECK(rank(calibrate_scores(s, Calibration::Softmax)).indices == base);
  CHECK(rank(calibrate_scores(s, Calibration::Softmax, 1.0)).indices == base);
  CHECK(rank(calibrate_scores(s, Calibration::Sigmoid)).indices == base);
}

TEST_CASE("softmax rows sum to one and honour the temperature") {
  ScoreMatrix s{{"q"}, {"a", "b"}, {0.5, 0.3}};
  const auto c = calibrate_scores(s, Calibration::Softmax, 0.1);
  CHECK(c.at(0, 0) + c.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.at(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  const auto sig = calibrate_scores(s, Calibration::Sigmoid);
  CHECK(sig.at(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))));
  CHECK(fixture::error_code([&] { calibrate_scores(s, Calibration::Softmax, 0.0); }) == ErrorCode::InvalidTemperature);
  CHECK(fixture::error_code([&] { calibrate_scores(s, Calibration::Softmax, -1.0); }) == ErrorCode::InvalidTemperature);
}

TEST_CASE("InfoNCE of a uniform batch is ln B") {
  for (std::size_t B : {2u, 4u, 16u}) {
    std::vector<float> v(B * 3, 0.0f);
    for (std::size_t i = 0; i < B; ++i) v[i * 3] = 1.0f;
    const EmbeddingMatrix img(fixture::ids("i", B), 3, v, Side::Probe);
    const EmbeddingMatrix txt(fixture::ids("t", B), 3, v, Side::Gallery);
    const auto loss = info_nce_loss(img, txt, {0.07, B});
    CHECK(std::abs(loss.total - std::log(double(B))) < 1e-9);
    CHECK(std::abs(loss.image_to_text - std::log(double(B))) < 1e-9);
  }
}

TEST_CASE("InfoNCE matches the explicit double loop") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = fixture::random_matrix(3, 12, rng, Side::Probe, "i");
    const auto txt = fixture::random_matrix(3, 12, rng, Side::Gallery, "t");
    const auto got = info_nce_loss(img, txt, {0.07, 3});
    const auto want = oracle::info_nce(fixture::dense(img), fixture::dense(txt), 0.07);
    CHECK(std::abs(got.image_to_text - want.i2t) < 1e-9);
    CHECK(std::abs(got.text_to_image - want.t2i) < 1e-9);
    CHECK(std::abs(got.total - want.total) < 1e-9);
  }
}

TEST_CASE("InfoNCE argument errors") {
  std::mt19937_64 rng(2);
  const auto a = fixture::random_matrix(3, 4, rng, Side::Probe, "a");
  const auto b = fixture::random_matrix(3, 4, rng, Side::Gallery, "b");
  const auto c = fixture::random_matrix(2, 4, rng, Side::Gallery, "c");
  CHECK(fixture::error_code([&] { info_nce_loss(a, b, {0.0, 3}); }) == ErrorCode::InvalidTemperature);
  CHECK(fixture::error_code([&] { info_nce_loss(a, c, {0.07, 3}); }) == ErrorCode::BatchMismatch);
  CHECK(fixture::error_code([&] { info_nce_loss(a, b, {0.07, 2}); }) == ErrorCode::BatchMismatch);
  CHECK(fixture::error_code([&] { info_nce_loss(a, b, {0.07, 1}); }) == ErrorCode::InvalidArgument);
  const EmbeddingMatrix z({"x", "y", "z"}, 4, std::vector<float>(12, 0.0f), Side::Gallery);
  CHECK(fixture::error_code([&] { info_nce_loss(a, z, {0.07, 3}); }) == ErrorCode::ZeroVectorRow);
}

}  // TEST_SUITE
