// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "flowcond/rng.hpp"
#include "flowcond/source_posterior.hpp"
#include "flowcond/transport.hpp"
#include "flowcond/velocity_model.hpp"

using namespace flowcond;

namespace {

VelocityModel default_model() {
  VelocityModel m = VelocityModel::create(ModelArchitecture{}, 11);
  Rng rng = make_rng(11, 1);
  std::vector<double> w(m.weight_count());
  std::normal_distribution<double> normal(0.0, 0.3);
  for (double& v : w) v = normal(rng);
  m.set_flat_weights(w);
  return m;
}

}  // namespace

static void BM_MidpointTransport(benchmark::State& state) {
  const VelocityModel m = default_model();
  Rng rng = make_rng(13);
  std::vector<double> v(state.range(0) * 2);
  fill_standard_normal(v, rng);
  const ad::Tensor x0(state.range(0), 2, std::move(v));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(m, x0, IntegratorConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MidpointTransport)->Arg(10)->Arg(1000)->Arg(4000);

static void BM_SgldChainStep(benchmark::State& state) {
  const VelocityModel m = default_model();
  const MeasurementModel meas = MeasurementModel::f2(0.2);
  SgldConfig cfg;
  cfg.seed = 3;
  ChainState chain = make_chain(m, meas, cfg, 0);
  std::size_t i = 0;
  for (auto _ : state) {
    sgld_chain_step(m, meas, cfg, chain, i++ % cfg.n_steps);
  }
}
BENCHMARK(BM_SgldChainStep);

static void BM_SourceEnergyGradient(benchmark::State& state) {
  const VelocityModel m = default_model();
  const MeasurementModel meas = MeasurementModel::f2(0.2);
  Rng rng = make_rng(17);
  std::vector<double> v(state.range(0) * 2);
  fill_standard_normal(v, rng);
  const ad::Tensor x0(state.range(0), 2, std::move(v));
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Tensor xw = tape.watch(x0.detached());
    const ad::Tensor e = ad::sum(source_energy(m, meas, xw, 0.1));
    benchmark::DoNotOptimize(tape.backward(e));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SourceEnergyGradient)->Arg(1)->Arg(1000);
