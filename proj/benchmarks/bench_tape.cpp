// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "flowcond/ops.hpp"
#include "flowcond/rng.hpp"
#include "flowcond/tape.hpp"
#include "flowcond/training.hpp"
#include "flowcond/velocity_model.hpp"

using namespace flowcond;

namespace {

VelocityModel default_model() {
  VelocityModel m = VelocityModel::create(ModelArchitecture{}, 7);
  Rng rng = make_rng(7, 1);
  std::vector<double> w(m.weight_count());
  std::normal_distribution<double> normal(0.0, 0.3);
  for (double& v : w) v = normal(rng);
  m.set_flat_weights(w);
  return m;
}

ad::Tensor random_batch(std::size_t rows, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<double> v(rows * 2);
  fill_standard_normal(v, rng);
  return ad::Tensor(rows, 2, std::move(v));
}

}  // namespace

static void BM_VelocityForward(benchmark::State& state) {
  const VelocityModel m = default_model();
  const ad::Tensor x = random_batch(state.range(0), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.evaluate(0.4, x));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VelocityForward)->Arg(1)->Arg(256)->Arg(1000);

static void BM_VelocityBackward(benchmark::State& state) {
  const VelocityModel m = default_model();
  const ad::Tensor x = random_batch(state.range(0), 3);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Tensor xw = tape.watch(x.detached());
    const ad::Tensor root = ad::sum(ad::l2_norm_sq(m.evaluate(0.4, xw)));
    benchmark::DoNotOptimize(tape.backward(root));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VelocityBackward)->Arg(1)->Arg(256)->Arg(1000);

static void BM_TrainingStepGradient(benchmark::State& state) {
  const VelocityModel m = default_model();
  const ad::Tensor x0 = random_batch(256, 5);
  const ad::Tensor x1 = random_batch(256, 6);
  Rng tau_rng = make_rng(8);
  std::vector<double> taus(256);
  fill_uniform(taus, 0.0, 1.0, tau_rng);
  const ad::Tensor tau(256, 1, std::move(taus));

  for (auto _ : state) {
    ad::Tape tape;
    const VelocityModel watched = m.watched(tape);
    Rng rng = make_rng(9);
    const ad::Tensor loss = cfm_loss(watched, x0, x1, tau, 1e-3, rng);
    benchmark::DoNotOptimize(tape.backward(loss));
  }
}
BENCHMARK(BM_TrainingStepGradient);
