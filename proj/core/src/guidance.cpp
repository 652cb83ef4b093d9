// SPDX-License-Identifier: Apache-2.0
#include "flowcond/guidance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flowcond/ops.hpp"
#include "flowcond/tape.hpp"

namespace flowcond {

const char* guidance_variant_name(GuidanceConfig::Variant variant) {
  return variant == GuidanceConfig::Variant::kGrad ? "grad" : "grad-free";
}

SampleBatch guided_sample(const VelocityModel& model, const MeasurementModel& measurement,
                          const GuidanceConfig& cfg, std::size_t n, Rng& rng,
                          GuidanceDiagnostics* diagnostics) {
  if (n == 0) throw std::invalid_argument("guided_sample: n must be >= 1");
  if (cfg.strength < 0.0) throw std::invalid_argument("guided_sample: strength b must be >= 0");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("guided_sample: epsilon must be > 0");
  measurement.validate();

  const std::size_t dim = model.architecture().input_dim;
  std::vector<double> start(n * dim);
  fill_standard_normal(start, rng);

  const ad::Tensor y = ad::Tensor::from_row(measurement.observed);

  DriftModifier modifier = [&](double tau, const ad::Tensor& x,
                               const ad::Tensor& velocity) -> ad::Tensor {
    const double lambda = cfg.schedule ? cfg.schedule(tau) : 1.0;

    ad::Tensor predictor_velocity =
        cfg.variant == GuidanceConfig::Variant::kGrad ? velocity : ad::stop_gradient(velocity);
    ad::Tensor x_hat = ad::add(x, ad::scalar_mul(predictor_velocity, 1.0 - tau));
    ad::Tensor residual = ad::sub(ad::broadcast(y, x.rows()), measure(measurement, x_hat));
    ad::Tensor misfit = ad::l2_norm_sq(residual);
    const ad::GradientMap grads = x.tape()->backward(ad::sum(misfit));
    const ad::Tensor& misfit_grad = grads.at(x);
    if (!misfit_grad.all_finite()) {
      throw std::runtime_error("guided_sample: non-finite guidance gradient at tau=" +
                               std::to_string(tau));
    }

    const auto gm = misfit_grad.values();
    const auto vv = velocity.values();
    const std::size_t cols = x.cols();
    std::vector<double> correction(x.rows() * cols);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double vnorm = 0.0, gnorm = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        vnorm += vv[r * cols + c] * vv[r * cols + c];
        gnorm += gm[r * cols + c] * gm[r * cols + c];
      }
      vnorm = std::sqrt(vnorm);
      gnorm = std::sqrt(gnorm);
      const double scale = -cfg.strength * vnorm / (gnorm + cfg.epsilon);
      double corr_norm = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double g = lambda * scale * gm[r * cols + c];
        correction[r * cols + c] = g;
        corr_norm += g * g;
      }
      if (diagnostics) {
        const double bound = cfg.strength * std::fabs(lambda) * vnorm;
        if (bound > 0.0) {
          diagnostics->max_correction_ratio =
              std::max(diagnostics->max_correction_ratio, std::sqrt(corr_norm) / bound);
        }
      }
    }
    if (diagnostics) ++diagnostics->stage_evaluations;
    return ad::Tensor(x.rows(), cols, std::move(correction));
  };

  ad::Tensor out = integrate(model, ad::Tensor(n, dim, std::move(start)), cfg.integrator, modifier);
  SampleBatch batch = SampleBatch::from_tensor(
      out, std::string(guidance_variant_name(cfg.variant)) + " b=" + std::to_string(cfg.strength));
  return batch;
}

}  // namespace flowcond
