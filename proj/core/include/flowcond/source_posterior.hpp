// SPDX-License-Identifier: Apache-2.0
//
// Source-space conditioning with the learned transport held fixed:
// deterministic MAP optimization of the source point (D-Flow) and
// preconditioned stochastic gradient Langevin dynamics over the source
// posterior (D-Flow SGLD), both differentiating through the unrolled ODE
// solve.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flowcond/rng.hpp"
#include "flowcond/sample_batch.hpp"
#include "flowcond/toy_data.hpp"
#include "flowcond/transport.hpp"
#include "flowcond/velocity_model.hpp"

namespace flowcond {

struct RegularizerHooks {
  // Optional per-row penalties [B,D] -> [B,1] on the source point and on
  // the transported state; both default to zero.
  std::function<ad::Tensor(const ad::Tensor&)> source;
  std::function<ad::Tensor(const ad::Tensor&)> state;
};

/// Per-row energy ||y - F(T(x0))||^2 + lambda ||x0||^2
/// + alpha R0(x0) + beta R1(T(x0)), with T the configured forward solve.
/// Returns [B,1]; differentiable w.r.t. x0 through the unrolled solve.
ad::Tensor source_energy(const VelocityModel& model, const MeasurementModel& measurement,
                         const ad::Tensor& x0, double lambda, double alpha = 0.0,
                         double beta = 0.0,
                         const IntegratorConfig& integrator = IntegratorConfig{},
                         const RegularizerHooks& hooks = {});

struct DFlowConfig {
  enum class Optimizer { kAdam, kLbfgs };

  std::size_t optim_steps = 10;  // 10 for the S-curve, 20 for two-moons
  Optimizer optimizer = Optimizer::kLbfgs;
  double learning_rate = 0.1;  // Adam path only
  std::size_t lbfgs_history = 10;
  double alpha = 0.0;
  double beta = 0.0;
  IntegratorConfig integrator{};
  std::uint64_t seed = 0;
};

struct DFlowResult {
  SampleBatch pushforward;       // T(x0*) per restart
  SampleBatch sources;           // optimized x0*
  std::vector<double> energies;  // final per-restart energy
};

/// Independent MAP optimizations from x0 ~ N(0, I). The explicit source
/// prior is dropped (lambda = 0): the data misfit alone regularizes the
/// source point. A restart whose energy goes non-finite is redrawn once,
/// then reported as an error.
DFlowResult dflow_map(const VelocityModel& model, const MeasurementModel& measurement,
                      const DFlowConfig& cfg, std::size_t n_restarts);

struct SgldConfig {
  std::size_t n_parallel = 10;   // chains M
  std::size_t n_steps = 500;
  std::size_t burn_in = 100;
  double eta = 5e-2;             // step size
  double noise_scale = 1e-2;     // s; final value when annealing
  // Noise anneals geometrically from this value down to noise_scale over
  // the run; chains explore broad posteriors before sharpening. Set <= 0
  // (or equal to noise_scale) for a constant schedule.
  double noise_anneal_start = 0.3;
  double prior_weight = 0.1;     // lambda: 0.1 S-curve, 0.05 two-moons
  double preconditioner_decay = 0.99;  // omega
  double damping = 1e-3;         // delta
  std::size_t thinning = 1;
  bool use_preconditioner = true;

  enum class WarmStart { kGaussian, kMapEnsemble };
  WarmStart warm_start = WarmStart::kGaussian;
  std::size_t warm_start_steps = 3;  // partial MAP iterations per chain

  IntegratorConfig integrator{};
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> chain_seeds;  // explicit per-chain seeds; empty = derived
  std::size_t workers = 1;

  // Optional annealing hooks, step index -> value; null = constant.
  std::function<double(std::size_t)> eta_schedule;
  std::function<double(std::size_t)> noise_schedule;
  std::function<double(std::size_t)> damping_schedule;

  std::uint64_t chain_seed(std::size_t chain_index) const;
  void validate() const;
};

/// One SGLD chain: current source point, preconditioner second-moment
/// accumulator, the chain's private RNG stream, and post-burn-in draws.
struct ChainState {
  ad::Tensor x0;             // [1,D]
  ad::Tensor second_moment;  // V, elementwise >= 0
  Rng rng;
  std::vector<double> collected;  // flattened rows
  bool alive = true;
};

/// Fresh chain: x0 drawn from N(0, I) on the chain's stream, optionally
/// pushed through a few MAP warm-start steps.
ChainState make_chain(const VelocityModel& model, const MeasurementModel& measurement,
                      const SgldConfig& cfg, std::size_t chain_index);

/// One iteration of the preconditioned Langevin update (0-based
/// step_index; draws are collected once step_index >= burn_in):
///   V   <- omega V + (1 - omega) grad_misfit^2
///   P   <- 1 / (sqrt(V) + delta)        (identity when disabled)
///   x0  <- x0 - eta P grad_energy + N(0, 2 eta s P)
/// where grad_misfit drives the preconditioner and grad_energy includes
/// the lambda ||x0||^2 prior term.
void sgld_chain_step(const VelocityModel& model, const MeasurementModel& measurement,
                     const SgldConfig& cfg, ChainState& chain, std::size_t step_index);

struct SgldResult {
  SampleBatch pushforward;
  SampleBatch sources;
  std::size_t chains_completed = 0;
};

/// Runs n_parallel independent chains (sharded over `workers` threads;
/// outputs do not depend on the worker count) and pushes every collected
/// source draw through the fixed transport. Chains that go non-finite are
/// dropped with a warning; all chains dead is an error.
SgldResult dflow_sgld(const VelocityModel& model, const MeasurementModel& measurement,
                      const SgldConfig& cfg);

/// The M chain initial points (after any warm start), for inspection.
SampleBatch warm_start_ensemble(const VelocityModel& model, const MeasurementModel& measurement,
                                const SgldConfig& cfg);

/// Map state-space samples back to the source by reverse integration of
/// the negated field.
SampleBatch invert_to_source(const VelocityModel& model, const SampleBatch& x1,
                             const IntegratorConfig& integrator = IntegratorConfig{});

}  // namespace flowcond
