#include <benchmark/benchmark.h>

#include <random>

#include "mpr/embedding_store.hpp"
#include "mpr/similarity.hpp"

namespace {

mpr::EmbeddingMatrix random_unit(std::size_t rows, std::size_t dim, mpr::Side side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(rows * dim);
  for (auto& x : v) x = d(rng);
  std::vector<std::string> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = "r" + std::to_string(i);
  return mpr::l2_normalize(mpr::EmbeddingMatrix(std::move(ids), dim, std::move(v), side));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto p = random_unit(state.range(0), 1152, mpr::Side::Probe, 1);
  const auto g = random_unit(409, 1152, mpr::Side::Gallery, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mpr::score_matrix(p, g));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 409);
}

void BM_ScoreReference(benchmark::State& state) {
  const auto p = random_unit(state.range(0), 1152, mpr::Side::Probe, 1);
  const auto g = random_unit(409, 1152, mpr::Side::Gallery, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mpr::score_matrix_reference(p, g));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 409);
}

void BM_ScoreAndRank(benchmark::State& state) {
  const auto p = random_unit(12944, 1152, mpr::Side::Probe, 1);
  const auto g = random_unit(409, 1152, mpr::Side::Gallery, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mpr::rank(mpr::score_matrix(p, g)));
}

}  // namespace

BENCHMARK(BM_ScoreParallel)->Arg(1024)->Arg(12944)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreReference)->Arg(1024)->Arg(12944)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreAndRank)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
