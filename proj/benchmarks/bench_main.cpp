#include <benchmark/benchmark.h>

#include <vector>

#include "insideout/cluster.hpp"
#include "insideout/datagen.hpp"
#include "insideout/detect.hpp"
#include "insideout/random.hpp"
#include "insideout/regress.hpp"

namespace {

using namespace insideout;

std::vector<double> bimodal_column(std::size_t k, std::uint64_t seed) {
  auto rng = RandomStream::derive(seed, {1});
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = (i % 2 ? 10.0 : -10.0) + rng.normal();
  return out;
}

void BM_KnnScore(benchmark::State& state) {
  const auto column = bimodal_column(static_cast<std::size_t>(state.range(0)), 7);
  auto rng = RandomStream::derive(7, {2});
  const auto model = fit_knn(column, kDefaultKNeighbors, rng);
  double x = -15.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_score(model, x));
    x = x > 15.0 ? -15.0 : x + 0.01;
  }
}
BENCHMARK(BM_KnnScore)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_XMeans(benchmark::State& state) {
  const auto column = bimodal_column(static_cast<std::size_t>(state.range(0)), 11);
  const Matrix points = column_matrix(column);
  for (auto _ : state) {
    auto rng = RandomStream::derive(11, {3});
    auto c = xmeans(points, 1, default_k_max(points.rows()), rng);
    benchmark::DoNotOptimize(c.k());
  }
}
BENCHMARK(BM_XMeans)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitKnnDetector(benchmark::State& state) {
  const auto column = bimodal_column(static_cast<std::size_t>(state.range(0)), 13);
  for (auto _ : state) {
    auto rng = RandomStream::derive(13, {4});
    benchmark::DoNotOptimize(fit_knn(column, kDefaultKNeighbors, rng).chi);
  }
}
BENCHMARK(BM_FitKnnDetector)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  auto rng = RandomStream::derive(17, {5});
  Matrix x(rows, 3);
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = rng.uniform(-5.0, 5.0);
    y[r] = x(r, 0) * x(r, 1) - x(r, 2) + rng.normal();
  }
  for (auto _ : state) {
    auto fit_rng = RandomStream::derive(17, {6});
    benchmark::DoNotOptimize(fit_forest(x, y, fit_rng).trees.size());
  }
}
BENCHMARK(BM_ForestFit)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_GenerateDataset(benchmark::State& state) {
  auto rng = RandomStream::derive(19, {7});
  const auto spec = random_dataset_spec(3, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(spec).target.size());
}
BENCHMARK(BM_GenerateDataset)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
