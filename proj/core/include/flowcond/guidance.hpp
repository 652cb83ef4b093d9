// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "flowcond/rng.hpp"
#include "flowcond/sample_batch.hpp"
#include "flowcond/toy_data.hpp"
#include "flowcond/transport.hpp"
#include "flowcond/velocity_model.hpp"

namespace flowcond {

struct GuidanceConfig {
  enum class Variant { kGrad, kGradFree };

  double strength = 3.0;  // b
  Variant variant = Variant::kGrad;
  double epsilon = 1e-8;
  std::function<double(double)> schedule;  // lambda(tau); null = constant 1
  IntegratorConfig integrator{IntegratorConfig::Scheme::kEuler, 300,
                              IntegratorConfig::Direction::kForward};
};

const char* guidance_variant_name(GuidanceConfig::Variant variant);

struct GuidanceDiagnostics {
  // max over steps and rows of ||g|| / (b * lambda * ||v||); bounded by 1
  // by construction of the normalized correction.
  double max_correction_ratio = 0.0;
  std::size_t stage_evaluations = 0;
};

/// Training-free conditional sampling: integrates
/// dx/dtau = v(tau, x) + lambda(tau) g with the normalized misfit-descent
/// correction g = -b ||v|| grad_m / (||grad_m|| + eps), where
/// m(x) = ||y - F(x_hat)||^2 is evaluated at the one-step predictor. The
/// Grad variant differentiates through the model inside the predictor;
/// Grad-Free freezes it. Norms are taken per sample row.
SampleBatch guided_sample(const VelocityModel& model, const MeasurementModel& measurement,
                          const GuidanceConfig& cfg, std::size_t n, Rng& rng,
                          GuidanceDiagnostics* diagnostics = nullptr);

}  // namespace flowcond
