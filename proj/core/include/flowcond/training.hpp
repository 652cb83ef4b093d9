// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowcond/rng.hpp"
#include "flowcond/sample_batch.hpp"
#include "flowcond/tensor.hpp"
#include "flowcond/velocity_model.hpp"

namespace flowcond {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t steps = 15000;
  double learning_rate = 1e-4;
  double bridge_sigma = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool ot_pairing = true;  // off = independent endpoint pairing
  ModelArchitecture arch{};
};

/// Bias-corrected Adam over a parameter list; state is keyed by position.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps);

  void step(std::span<ad::Tensor> params, const std::vector<ad::Tensor>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Conditional flow-matching regression loss for one batch of coupled
/// endpoints (same row = coupled pair): draws the bridge sample
/// x_tau ~ N((1-tau) x0 + tau x1, sigma^2 I) per row and returns the batch
/// mean of ||v(tau, x_tau) - (x1 - x0)||^2. Differentiable w.r.t. whatever
/// the model's parameters are watched on.
ad::Tensor cfm_loss(const VelocityModel& model, const ad::Tensor& x0, const ad::Tensor& x1,
                    const ad::Tensor& tau, double sigma, Rng& rng);

struct TrainResult {
  VelocityModel model;
  std::vector<double> loss_history;
};

/// OT-CFM training: per step draws batch_size sources from N(0, I) and the
/// same number of data rows without replacement (reshuffled per epoch),
/// couples them with a squared-Euclidean assignment, and takes one Adam
/// step on cfm_loss. Aborts with a diagnostic if the loss goes non-finite.
TrainResult train_prior(const SampleBatch& dataset, const TrainConfig& cfg);

}  // namespace flowcond
