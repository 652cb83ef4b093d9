// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowcond/sample_batch.hpp"
#include "flowcond/tensor.hpp"

namespace flowcond {

enum class DatasetKind { kSCurve, kTwoMoons };

const char* dataset_kind_name(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSCurve;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

/// Draws n points. S-curve: latent t ~ Unif(-3pi/2, 3pi/2),
/// x = [sin t, 0.5 sgn(t)(cos t - 1)] + noise. Two-moons: floor(n/2) outer
/// semicircle points [cos phi, sin phi] followed by the inner ones
/// [1 - cos phi, 0.5 - sin phi], phi ~ Unif(0, pi), then
/// x = (base + noise + [-0.5, -0.25]) / 1.5.
SampleBatch sample_dataset(const DatasetSpec& spec, std::size_t n);

enum class OperatorKind { kF1, kF2, kCustomAffine };

const char* operator_kind_name(OperatorKind kind);
std::optional<OperatorKind> parse_operator_kind(std::string_view name);

/// Forward operator plus Gaussian noise scale sigma_y and an observed
/// value y; the likelihood is N(F(x), sigma_y^2).
///   F1(x) = 5|x0 - x1|        (sigma_y^2 = 0.01 by default)
///   F2(x) = x0 + x1 - 1.5     (sigma_y^2 = 0.1 by default)
///   custom affine: w . x + offset
struct MeasurementModel {
  OperatorKind op = OperatorKind::kF2;
  double sigma_y = 0.0;
  std::vector<double> observed;
  std::vector<double> affine_weights;
  double affine_offset = 0.0;

  static MeasurementModel f1(double y);
  static MeasurementModel f2(double y);
  static MeasurementModel custom_affine(std::vector<double> weights, double offset,
                                        double sigma_y, double y);

  std::size_t output_dim() const { return 1; }
  void validate() const;
};

/// Noiseless forward values, one per row.
std::vector<double> measure(const MeasurementModel& m, const SampleBatch& x);

/// Differentiable forward values [B,1]; |.| uses the sign subgradient
/// (0 at the kink).
ad::Tensor measure(const MeasurementModel& m, const ad::Tensor& x);

/// Per-sample -(2 sigma_y^2)^-1 ||y - F(x)||^2, additive constant dropped.
ad::Tensor log_likelihood(const MeasurementModel& m, const ad::Tensor& x);

}  // namespace flowcond
