// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "flowcond/assignment.hpp"
#include "flowcond/rng.hpp"

using namespace flowcond;

static void BM_SolveAssignment(benchmark::State& state) {
  const std::size_t n = state.range(0);
  Rng rng = make_rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cost(n * n);
  for (double& c : cost) c = unit(rng);
  const ot::CostMatrix m(n, std::move(cost));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot::solve_assignment(m));
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SolveAssignment)->Arg(64)->Arg(256)->Arg(512)->Arg(1000)->Complexity();

static void BM_OtPairsTrainingBatch(benchmark::State& state) {
  Rng rng = make_rng(37);
  SampleBatch x0(256, 2), x1(256, 2);
  fill_standard_normal(x0.data, rng);
  fill_standard_normal(x1.data, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot::ot_pairs(x0, x1, ot::CostKind::kSquaredEuclidean));
  }
}
BENCHMARK(BM_OtPairsTrainingBatch);
