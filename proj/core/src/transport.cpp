// SPDX-License-Identifier: Apache-2.0
#include "flowcond/transport.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flowcond/ops.hpp"
#include "flowcond/tape.hpp"

namespace flowcond {

namespace {

// Total drift at (tau, x): learned velocity plus the optional correction.
// With a modifier present the stage runs on a local tape so the modifier
// can differentiate its correction; the result is detached either way.
ad::Tensor stage_drift(const VelocityModel& model, double tau, const ad::Tensor& x,
                       const DriftModifier& modifier) {
  if (!modifier) {
    return model.evaluate(tau, x);
  }
  ad::Tape stage;
  ad::Tensor xw = stage.watch(x.detached());
  ad::Tensor velocity = model.evaluate(tau, xw);
  ad::Tensor extra = modifier(tau, xw, velocity);
  if (extra.rows() != x.rows() || extra.cols() != x.cols()) {
    throw std::invalid_argument("integrate: drift modifier returned shape " +
                                ad::shape_str(extra) + ", expected " + ad::shape_str(x));
  }
  return ad::add(velocity.detached(), extra.detached());
}

}  // namespace

ad::Tensor integrate(const VelocityModel& model, const ad::Tensor& start,
                     const IntegratorConfig& cfg, const DriftModifier& modifier,
                     std::vector<ad::Tensor>* trajectory) {
  if (cfg.steps == 0) throw std::invalid_argument("integrate: steps must be >= 1");
  if (modifier && start.on_tape()) {
    throw std::invalid_argument("integrate: drift modifiers are not differentiable; "
                                "pass a detached start batch");
  }

  const bool forward = cfg.direction == IntegratorConfig::Direction::kForward;
  const double h = 1.0 / static_cast<double>(cfg.steps);
  const double sign = forward ? 1.0 : -1.0;

  ad::Tensor x = start;
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(x.detached());
  }

  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const double tau = forward ? h * static_cast<double>(k)
                               : 1.0 - h * static_cast<double>(k);
    ad::Tensor drift;
    if (cfg.scheme == IntegratorConfig::Scheme::kEuler) {
      drift = stage_drift(model, tau, x, modifier);
    } else {
      ad::Tensor k1 = stage_drift(model, tau, x, modifier);
      ad::Tensor x_mid = ad::add(x, ad::scalar_mul(k1, sign * 0.5 * h));
      drift = stage_drift(model, tau + sign * 0.5 * h, x_mid, modifier);
    }
    x = ad::add(x, ad::scalar_mul(drift, sign * h));
    if (!x.all_finite()) {
      throw std::runtime_error("integrate: non-finite state at step " + std::to_string(k));
    }
    if (trajectory) trajectory->push_back(x.detached());
  }
  return x;
}

ad::Tensor predict_x1(const VelocityModel& model, double tau, const ad::Tensor& x_tau,
                      bool differentiate_through_model) {
  if (tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("predict_x1: tau must be in [0,1], got " + std::to_string(tau));
  }
  ad::Tensor velocity = model.evaluate(tau, x_tau);
  if (!differentiate_through_model) velocity = ad::stop_gradient(velocity);
  return ad::add(x_tau, ad::scalar_mul(velocity, 1.0 - tau));
}

double path_curvature(std::span<const ad::Tensor> trajectory) {
  if (trajectory.size() < 3) {
    throw std::invalid_argument("path_curvature: need at least 3 trajectory points, got " +
                                std::to_string(trajectory.size()));
  }
  const std::size_t rows = trajectory[0].rows();
  const std::size_t cols = trajectory[0].cols();
  const std::size_t segments = trajectory.size() - 1;

  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double bend = 0.0;
    double length = 0.0;
    for (std::size_t k = 0; k < segments; ++k) {
      const auto a = trajectory[k].values();
      const auto b = trajectory[k + 1].values();
      double seg = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double d = b[r * cols + c] - a[r * cols + c];
        seg += d * d;
      }
      length += std::sqrt(seg);
    }
    for (std::size_t k = 1; k < segments; ++k) {
      const auto prev = trajectory[k - 1].values();
      const auto mid = trajectory[k].values();
      const auto next = trajectory[k + 1].values();
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double d = next[r * cols + c] - 2.0 * mid[r * cols + c] + prev[r * cols + c];
        acc += d * d;
      }
      bend += std::sqrt(acc);
    }
    bend /= static_cast<double>(segments - 1);
    total += (length > 0.0) ? bend / length : 0.0;
  }
  return total / static_cast<double>(rows);
}

}  // namespace flowcond
