#include <random>

#include <benchmark/benchmark.h>

#include "holokit/field_ops.hpp"
#include "holokit/model_structures.hpp"
#include "holokit/pointwise_maps.hpp"

using namespace holokit;

namespace {

void BM_WedgeCayleySquare(benchmark::State& state) {
  const FormValue psi = model_form(GroupTag::Spin7).form(0);
  for (auto _ : state) benchmark::DoNotOptimize(wedge(psi, psi));
}
BENCHMARK(BM_WedgeCayleySquare);

void BM_StabilizerAlgebra(benchmark::State& state) {
  const GStructureValue chi = model_form(GroupTag::Spin7);
  for (auto _ : state) benchmark::DoNotOptimize(stabilizer_algebra(chi));
}
BENCHMARK(BM_StabilizerAlgebra)->Unit(benchmark::kMillisecond);

void BM_InducedMetric(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix a(7, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) a(i, j) = normal(rng);
  const GStructureValue chi =
      pullback(EndomorphismValue(Matrix::Identity(7, 7) + 0.1 * a / a.norm()), model_form(GroupTag::G2));
  for (auto _ : state) benchmark::DoNotOptimize(induced_metric(chi));
}
BENCHMARK(BM_InducedMetric)->Unit(benchmark::kMicrosecond);

void BM_HodgeLaplacianTwoForms(benchmark::State& state) {
  const int res = int(state.range(0));
  std::mt19937_64 rng(2);
  const BundleField f = random_band_limited(TorusDomain(4, {0, 1, 2, 3}, res), FiberKind::form(2), 1, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(hodge_laplacian(f));
}
BENCHMARK(BM_HodgeLaplacianTwoForms)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Ricci(benchmark::State& state) {
  const int res = int(state.range(0));
  std::mt19937_64 rng(3);
  const BundleField g = random_metric(TorusDomain(4, {0, 1, 2, 3}, res), 1, 0.1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ricci(g));
}
BENCHMARK(BM_Ricci)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
