// SPDX-License-Identifier: Apache-2.0
#include "flowcond/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flowcond/assignment.hpp"
#include "flowcond/ops.hpp"
#include "flowcond/tape.hpp"

namespace flowcond {

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
}

void AdamOptimizer::step(std::span<ad::Tensor> params, const std::vector<ad::Tensor>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam: parameter/gradient count mismatch");
  }
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].size(), 0.0);
      v_[i].assign(params[i].size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_values();
    const auto g = grads[i].values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

ad::Tensor cfm_loss(const VelocityModel& model, const ad::Tensor& x0, const ad::Tensor& x1,
                    const ad::Tensor& tau, double sigma, Rng& rng) {
  if (x0.rows() != x1.rows() || x0.cols() != x1.cols()) {
    throw std::invalid_argument("cfm_loss: endpoint batches differ, " + ad::shape_str(x0) +
                                " vs " + ad::shape_str(x1));
  }
  const std::size_t rows = x0.rows();
  if (tau.cols() != 1 || (tau.rows() != rows && tau.rows() != 1)) {
    throw std::invalid_argument("cfm_loss: tau must be [B,1] or [1,1], got " +
                                ad::shape_str(tau));
  }
  if (sigma < 0.0) throw std::invalid_argument("cfm_loss: sigma must be nonnegative");

  const auto a = x0.values();
  const auto b = x1.values();
  const auto tv = tau.values();
  std::normal_distribution<double> normal(0.0, 1.0);

  // Bridge sample and conditional target are plain inputs; only the model
  // evaluation participates in the gradient.
  std::vector<double> bridge(rows * x0.cols());
  std::vector<double> target(rows * x0.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    const double t = tv[tau.rows() == 1 ? 0 : r];
    for (std::size_t c = 0; c < x0.cols(); ++c) {
      const std::size_t idx = r * x0.cols() + c;
      bridge[idx] = (1.0 - t) * a[idx] + t * b[idx] + sigma * normal(rng);
      target[idx] = b[idx] - a[idx];
    }
  }
  ad::Tensor x_tau(rows, x0.cols(), std::move(bridge));
  ad::Tensor u(rows, x0.cols(), std::move(target));

  ad::Tensor velocity = model.evaluate(tau.detached(), x_tau);
  return ad::mean(ad::l2_norm_sq(ad::sub(velocity, u)));
}

TrainResult train_prior(const SampleBatch& dataset, const TrainConfig& cfg) {
  if (dataset.rows == 0) throw std::invalid_argument("train_prior: dataset is empty");
  if (cfg.batch_size == 0) throw std::invalid_argument("train_prior: batch size must be >= 1");
  if (cfg.batch_size > dataset.rows) {
    throw std::invalid_argument("train_prior: batch size " + std::to_string(cfg.batch_size) +
                                " exceeds dataset size " + std::to_string(dataset.rows));
  }
  if (cfg.arch.input_dim != dataset.cols) {
    throw std::invalid_argument("train_prior: dataset has " + std::to_string(dataset.cols) +
                                " columns, model expects " + std::to_string(cfg.arch.input_dim));
  }

  VelocityModel model = VelocityModel::create(cfg.arch, mix_seed(cfg.seed, 0x1717ULL));
  AdamOptimizer adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng rng = make_rng(cfg.seed, 0x7261696eULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> order(dataset.rows);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = dataset.rows;  // forces a shuffle on first use

  const std::size_t B = cfg.batch_size;
  const std::size_t D = dataset.cols;
  TrainResult result;
  result.loss_history.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cursor + B > dataset.rows) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }

    std::vector<double> src(B * D);
    fill_standard_normal(src, rng);
    SampleBatch x0(B, D);
    x0.data = src;

    SampleBatch x1(B, D);
    for (std::size_t r = 0; r < B; ++r) {
      const std::size_t row = order[cursor + r];
      for (std::size_t c = 0; c < D; ++c) x1.at(r, c) = dataset.at(row, c);
    }
    cursor += B;

    if (cfg.ot_pairing) {
      const ot::CouplingPlan plan = ot_pairs(x0, x1, ot::CostKind::kSquaredEuclidean);
      SampleBatch paired(B, D);
      for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t c = 0; c < D; ++c) paired.at(r, c) = x1.at(plan.permutation[r], c);
      }
      x1 = std::move(paired);
    }

    std::vector<double> taus(B);
    for (double& t : taus) t = unit(rng);

    ad::Tape tape;
    VelocityModel watched = model.watched(tape);
    ad::Tensor loss = cfm_loss(watched, x0.tensor(), x1.tensor(),
                               ad::Tensor(B, 1, std::move(taus)), cfg.bridge_sigma, rng);

    const double loss_value = loss.scalar();
    if (!std::isfinite(loss_value)) {
      throw std::runtime_error("train_prior: loss diverged (non-finite) at step " +
                               std::to_string(step));
    }
    result.loss_history.push_back(loss_value);

    const ad::GradientMap grads = tape.backward(loss);
    std::vector<ad::Tensor> grad_list;
    grad_list.reserve(watched.parameters().size());
    for (const auto& p : watched.parameters()) grad_list.push_back(grads.at(p));
    adam.step(model.parameters(), grad_list);
  }

  result.model = std::move(model);
  return result;
}

}  // namespace flowcond
