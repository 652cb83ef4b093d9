// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "flowcond/tensor.hpp"
#include "flowcond/velocity_model.hpp"

namespace flowcond {

struct IntegratorConfig {
  enum class Scheme { kEuler, kMidpoint };
  enum class Direction { kForward, kReverse };

  Scheme scheme = Scheme::kMidpoint;
  std::size_t steps = 6;
  Direction direction = Direction::kForward;
};

/// Extra drift added to the learned velocity at every integrator stage.
/// `x` and `velocity` live on a stage-local tape, so the modifier may run
/// a backward pass through them; only the returned values are consumed.
using DriftModifier =
    std::function<ad::Tensor(double tau, const ad::Tensor& x, const ad::Tensor& velocity)>;

/// Fixed-step explicit integration of dx/dtau = velocity(tau, x), forward
/// (tau 0 -> 1) or reverse (tau 1 -> 0, negated field). Without a modifier
/// the solve runs on whatever tape `start` lives on, so the whole unrolled
/// map is differentiable w.r.t. the start batch and the weights.
ad::Tensor integrate(const VelocityModel& model, const ad::Tensor& start,
                     const IntegratorConfig& cfg, const DriftModifier& modifier = {},
                     std::vector<ad::Tensor>* trajectory = nullptr);

/// Straight-path one-step predictor of the clean state from an interior
/// transport state: x + (1 - tau) * velocity. With
/// differentiate_through_model = false the velocity term is frozen under
/// stop_gradient, so only the identity path carries gradient.
ad::Tensor predict_x1(const VelocityModel& model, double tau, const ad::Tensor& x_tau,
                      bool differentiate_through_model);

/// Mean second-difference magnitude over interior trajectory points,
/// normalized by total path length; averaged over batch rows. Zero for
/// collinear equispaced points.
double path_curvature(std::span<const ad::Tensor> trajectory);

}  // namespace flowcond
