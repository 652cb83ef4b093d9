// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "flowcond/source_posterior.hpp"
#include "grad_check.hpp"

using namespace flowcond;

namespace {

ModelArchitecture tiny_arch() {
  ModelArchitecture a;
  a.hidden_dim = 12;
  a.hidden_layers = 2;
  a.time_frequencies = 4;
  return a;
}

VelocityModel zero_model() { return VelocityModel::create(tiny_arch(), 0); }

VelocityModel random_model(std::uint64_t seed, double scale = 0.3) {
  VelocityModel m = VelocityModel::create(tiny_arch(), seed);
  Rng rng = make_rng(seed, 99);
  std::vector<double> w(m.weight_count());
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : w) v = normal(rng);
  m.set_flat_weights(w);
  return m;
}

VelocityModel constant_model(double cx, double cy) {
  VelocityModel m = zero_model();
  auto bias = m.parameters().back().mutable_values();
  bias[0] = cx;
  bias[1] = cy;
  return m;
}

// measurement with identically-zero misfit gradient (constant operator)
MeasurementModel null_measurement() {
  return MeasurementModel::custom_affine({0.0, 0.0}, 0.0, 1.0, 0.0);
}

}  // namespace

TEST_CASE("source_energy values") {
  SUBCASE("exact measurement match with lambda = 0 is zero") {
    const VelocityModel m = zero_model();  // transport is the identity
    const ad::Tensor x0(1, 2, {0.9, 0.6});
    const MeasurementModel meas = MeasurementModel::f2(0.0);  // F2(x0) = 0 at x0+x1 = 1.5
    const ad::Tensor e = source_energy(m, meas, x0, 0.0);
    CHECK(e.scalar() == doctest::Approx(0.0));
  }
  SUBCASE("with a satisfied measurement only the prior term remains") {
    const VelocityModel m = zero_model();
    const MeasurementModel meas = null_measurement();  // F == 0 == y everywhere
    const ad::Tensor e = source_energy(m, meas, ad::Tensor(1, 2, {3.0, 4.0}), 1.0);
    CHECK(e.scalar() == doctest::Approx(25.0));
  }
  SUBCASE("per-row energies for a batch") {
    const VelocityModel m = zero_model();
    const MeasurementModel meas = null_measurement();
    const ad::Tensor e = source_energy(m, meas, ad::Tensor(2, 2, {3, 4, 1, 0}), 1.0);
    CHECK(e.rows() == 2);
    CHECK(e.at(0, 0) == doctest::Approx(25.0));
    CHECK(e.at(1, 0) == doctest::Approx(1.0));
  }
  SUBCASE("regularizer hooks enter with their weights") {
    const VelocityModel m = zero_model();
    const MeasurementModel meas = null_measurement();
    RegularizerHooks hooks;
    hooks.source = [](const ad::Tensor& x) { return ad::l2_norm_sq(x); };
    hooks.state = [](const ad::Tensor& x) { return ad::l2_norm_sq(x); };
    const ad::Tensor e =
        source_energy(m, meas, ad::Tensor(1, 2, {1.0, 2.0}), 0.0, 0.5, 0.25, {}, hooks);
    // T = identity: 0.5 * 5 + 0.25 * 5
    CHECK(e.scalar() == doctest::Approx(3.75));
  }
}

TEST_CASE("source_energy gradient through the 6-step midpoint solve matches FD") {
  const VelocityModel m = random_model(21);
  const MeasurementModel meas = MeasurementModel::f2(0.2);
  Rng rng = make_rng(31);
  for (int i = 0; i < 3; ++i) {
    const ad::Tensor x0 = flowcond::testing::random_tensor(1, 2, rng);
    const double err = flowcond::testing::max_grad_error(
        [&](const std::vector<ad::Tensor>& in) {
          return source_energy(m, meas, in[0], 0.1);
        },
        {x0});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("dflow_map count contract and zero-gradient fixed point") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = null_measurement();  // energy is identically zero
  DFlowConfig cfg;
  cfg.seed = 5;
  cfg.optim_steps = 1;

  const DFlowResult once = dflow_map(m, meas, cfg, 7);
  CHECK(once.pushforward.rows == 7);
  CHECK(once.sources.rows == 7);
  REQUIRE(once.energies.size() == 7);
  for (double e : once.energies) CHECK(e == doctest::Approx(0.0));

  // zero gradient everywhere: more steps change nothing
  cfg.optim_steps = 20;
  const DFlowResult many = dflow_map(m, meas, cfg, 7);
  for (std::size_t i = 0; i < once.sources.data.size(); ++i) {
    CHECK(once.sources.data[i] == many.sources.data[i]);
  }
  // identity transport: pushforward equals the sources
  for (std::size_t i = 0; i < once.sources.data.size(); ++i) {
    CHECK(once.pushforward.data[i] == once.sources.data[i]);
  }
}

TEST_CASE("dflow_map drives a smooth misfit to its optimum") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = MeasurementModel::f2(0.0);  // optimum plane x0 + x1 = 1.5
  DFlowConfig cfg;
  cfg.seed = 11;

  SUBCASE("adam") {
    cfg.optimizer = DFlowConfig::Optimizer::kAdam;
    cfg.optim_steps = 60;
    const DFlowResult r = dflow_map(m, meas, cfg, 6);
    for (double e : r.energies) CHECK(e < 1e-2);
  }
  SUBCASE("lbfgs") {
    cfg.optimizer = DFlowConfig::Optimizer::kLbfgs;
    cfg.optim_steps = 10;
    const DFlowResult r = dflow_map(m, meas, cfg, 6);
    for (double e : r.energies) CHECK(e < 1e-10);
  }
}

TEST_CASE("dflow_map reports a restart that diverges twice") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = MeasurementModel::custom_affine({1e300, 1e300}, 0.0, 1.0, 0.0);
  DFlowConfig cfg;
  cfg.optim_steps = 3;
  CHECK_THROWS_WITH_AS(dflow_map(m, meas, cfg, 2), doctest::Contains("diverged twice"),
                       std::runtime_error);
}

TEST_CASE("sgld first iteration follows the hand-evaluated recurrences") {
  const VelocityModel m = zero_model();  // identity transport
  // F(x) = x[0], y = 0: L1 = x0^2, dL1 = (2 x0, 0)
  const MeasurementModel meas = MeasurementModel::custom_affine({1.0, 0.0}, 0.0, 1.0, 0.0);
  SgldConfig cfg;
  cfg.seed = 313;
  cfg.n_parallel = 1;
  cfg.prior_weight = 0.25;
  cfg.eta = 0.05;
  cfg.noise_scale = 0.01;
  cfg.noise_anneal_start = 0.0;  // constant schedule for the hand oracle
  cfg.preconditioner_decay = 0.9;
  cfg.damping = 1e-3;

  ChainState chain = make_chain(m, meas, cfg, 0);

  // replay the chain's private stream: two init draws, then two step draws
  Rng replay = make_rng(cfg.chain_seed(0));
  double init[2];
  fill_standard_normal(init, replay);
  CHECK(chain.x0.values()[0] == init[0]);
  CHECK(chain.x0.values()[1] == init[1]);
  double xi[2];
  fill_standard_normal(xi, replay);

  sgld_chain_step(m, meas, cfg, chain, 0);

  const double g1[2] = {2.0 * init[0], 0.0};
  const double grad[2] = {g1[0] + 2.0 * cfg.prior_weight * init[0],
                          2.0 * cfg.prior_weight * init[1]};
  double expected[2];
  for (int c = 0; c < 2; ++c) {
    const double v = (1.0 - cfg.preconditioner_decay) * g1[c] * g1[c];
    const double p = 1.0 / (std::sqrt(v) + cfg.damping);
    expected[c] = init[c] - cfg.eta * p * grad[c] +
                  std::sqrt(2.0 * cfg.eta * cfg.noise_scale * p) * xi[c];
    CHECK(chain.second_moment.values()[c] == doctest::Approx(v).epsilon(1e-15));
  }
  CHECK(chain.x0.values()[0] == doctest::Approx(expected[0]).epsilon(1e-15));
  CHECK(chain.x0.values()[1] == doctest::Approx(expected[1]).epsilon(1e-15));
}

TEST_CASE("sgld fixed point: zero gradient and zero noise leave the state put") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = null_measurement();
  SgldConfig cfg;
  cfg.seed = 99;
  cfg.prior_weight = 0.0;
  cfg.noise_scale = 0.0;
  cfg.use_preconditioner = false;

  ChainState chain = make_chain(m, meas, cfg, 0);
  const double before[2] = {chain.x0.values()[0], chain.x0.values()[1]};
  for (int i = 0; i < 5; ++i) sgld_chain_step(m, meas, cfg, chain, i);
  CHECK(chain.x0.values()[0] == before[0]);
  CHECK(chain.x0.values()[1] == before[1]);
}

TEST_CASE("sgld collection count contract and preconditioner positivity") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = MeasurementModel::f2(0.0);
  SgldConfig cfg;
  cfg.seed = 7;
  cfg.n_parallel = 3;
  cfg.n_steps = 50;
  cfg.burn_in = 10;
  cfg.thinning = 2;

  const SgldResult r = dflow_sgld(m, meas, cfg);
  CHECK(r.chains_completed == 3);
  CHECK(r.sources.rows == 3 * ((50 - 10) / 2));
  CHECK(r.pushforward.rows == r.sources.rows);

  // second moments stay nonnegative along a chain
  ChainState chain = make_chain(m, meas, cfg, 0);
  for (int i = 0; i < 25; ++i) {
    sgld_chain_step(m, meas, cfg, chain, i);
    for (double v : chain.second_moment.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("sgld chains are exchangeable under seed permutation") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = MeasurementModel::f2(0.0);
  SgldConfig cfg;
  cfg.n_parallel = 3;
  cfg.n_steps = 30;
  cfg.burn_in = 5;
  cfg.chain_seeds = {11, 22, 33};

  const SgldResult a = dflow_sgld(m, meas, cfg);
  cfg.chain_seeds = {33, 11, 22};
  const SgldResult b = dflow_sgld(m, meas, cfg);

  const std::size_t per_chain = (30 - 5) * 2;  // rows * dim per chain
  auto chain_block = [&](const SampleBatch& s, std::size_t j) {
    return std::vector<double>(s.data.begin() + j * per_chain,
                               s.data.begin() + (j + 1) * per_chain);
  };
  CHECK(chain_block(a.sources, 0) == chain_block(b.sources, 1));
  CHECK(chain_block(a.sources, 1) == chain_block(b.sources, 2));
  CHECK(chain_block(a.sources, 2) == chain_block(b.sources, 0));
}

TEST_CASE("sgld output does not depend on the worker count") {
  const VelocityModel m = random_model(15);
  const MeasurementModel meas = MeasurementModel::f2(0.1);
  SgldConfig cfg;
  cfg.seed = 21;
  cfg.n_parallel = 4;
  cfg.n_steps = 12;
  cfg.burn_in = 2;

  cfg.workers = 1;
  const SgldResult a = dflow_sgld(m, meas, cfg);
  cfg.workers = 3;
  const SgldResult b = dflow_sgld(m, meas, cfg);
  REQUIRE(a.sources.data.size() == b.sources.data.size());
  for (std::size_t i = 0; i < a.sources.data.size(); ++i) {
    CHECK(a.sources.data[i] == b.sources.data[i]);
  }
  for (std::size_t i = 0; i < a.pushforward.data.size(); ++i) {
    CHECK(a.pushforward.data[i] == b.pushforward.data[i]);
  }
}

TEST_CASE("warm start") {
  const VelocityModel m = zero_model();
  const MeasurementModel meas = MeasurementModel::f2(0.0);
  SgldConfig cfg;
  cfg.seed = 5;
  cfg.n_parallel = 8;
  cfg.prior_weight = 0.1;

  SUBCASE("zero MAP steps degenerate to the gaussian init") {
    cfg.warm_start = SgldConfig::WarmStart::kMapEnsemble;
    cfg.warm_start_steps = 0;
    const SampleBatch warm = warm_start_ensemble(m, meas, cfg);
    cfg.warm_start = SgldConfig::WarmStart::kGaussian;
    const SampleBatch plain = warm_start_ensemble(m, meas, cfg);
    CHECK(warm.data == plain.data);
    CHECK(warm.rows == 8);
  }
  SUBCASE("a few MAP steps lower the median chain energy") {
    auto median_energy = [&](const SampleBatch& pts) {
      std::vector<double> e;
      for (std::size_t i = 0; i < pts.rows; ++i) {
        const ad::Tensor x(1, 2, {pts.at(i, 0), pts.at(i, 1)});
        e.push_back(source_energy(m, meas, x, cfg.prior_weight).scalar());
      }
      std::sort(e.begin(), e.end());
      return e[e.size() / 2];
    };
    cfg.warm_start = SgldConfig::WarmStart::kGaussian;
    const double before = median_energy(warm_start_ensemble(m, meas, cfg));
    cfg.warm_start = SgldConfig::WarmStart::kMapEnsemble;
    cfg.warm_start_steps = 3;
    const double after = median_energy(warm_start_ensemble(m, meas, cfg));
    CHECK(after <= before);
  }
  SUBCASE("distinct chains start at distinct points") {
    const SampleBatch pts = warm_start_ensemble(m, meas, cfg);
    for (std::size_t i = 1; i < pts.rows; ++i) {
      CHECK((pts.at(i, 0) != pts.at(0, 0) || pts.at(i, 1) != pts.at(0, 1)));
    }
  }
}

TEST_CASE("sgld config validation") {
  SgldConfig cfg;
  cfg.burn_in = cfg.n_steps;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SgldConfig{};
  cfg.preconditioner_decay = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SgldConfig{};
  cfg.eta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SgldConfig{};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("quadratic-target langevin smoke: variance near one") {
  // L = 0.5 ||x||^2 via lambda = 0.5 and a zero-weight misfit; identity
  // preconditioner; the stationary law is N(0, I) up to O(eta)
  const VelocityModel m = zero_model();
  const MeasurementModel meas = null_measurement();
  SgldConfig cfg;
  cfg.seed = 404;
  cfg.n_parallel = 4;
  cfg.n_steps = 1500;
  cfg.burn_in = 250;
  cfg.prior_weight = 0.5;
  cfg.noise_scale = 1.0;
  cfg.noise_anneal_start = 0.0;
  cfg.eta = 1e-2;
  cfg.use_preconditioner = false;

  const SgldResult r = dflow_sgld(m, meas, cfg);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < r.sources.rows; ++i) {
      mean += r.sources.at(i, c);
      sq += r.sources.at(i, c) * r.sources.at(i, c);
    }
    mean /= static_cast<double>(r.sources.rows);
    const double var = sq / static_cast<double>(r.sources.rows) - mean * mean;
    CHECK(var > 0.85);
    CHECK(var < 1.15);
  }
}

TEST_CASE("invert_to_source undoes a constant field exactly") {
  const VelocityModel m = constant_model(0.3, -0.8);
  SampleBatch x1(2, 2);
  x1.at(0, 0) = 1.0;
  x1.at(0, 1) = 1.0;
  x1.at(1, 0) = -2.0;
  x1.at(1, 1) = 0.5;
  const SampleBatch x0 = invert_to_source(m, x1);
  CHECK(x0.at(0, 0) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(x0.at(0, 1) == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(x0.at(1, 0) == doctest::Approx(-2.3).epsilon(1e-12));
}

TEST_CASE("forward then invert round-trips a smooth random field") {
  const VelocityModel m = random_model(33, 0.25);
  Rng rng = make_rng(71);
  SampleBatch x0(200, 2);
  fill_standard_normal(x0.data, rng);

  IntegratorConfig fwd;  // midpoint, 6 steps
  const ad::Tensor x1 = integrate(m, x0.tensor(), fwd);
  const SampleBatch back = invert_to_source(m, SampleBatch::from_tensor(x1));

  std::vector<double> errs;
  for (std::size_t i = 0; i < x0.rows; ++i) {
    errs.push_back(std::hypot(back.at(i, 0) - x0.at(i, 0), back.at(i, 1) - x0.at(i, 1)));
  }
  std::sort(errs.begin(), errs.end());
  CHECK(errs[errs.size() / 2] < 1e-2);
}
