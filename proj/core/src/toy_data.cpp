// SPDX-License-Identifier: Apache-2.0
#include "flowcond/toy_data.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "flowcond/ops.hpp"
#include "flowcond/rng.hpp"

namespace flowcond {

const char* dataset_kind_name(DatasetKind kind) {
  return kind == DatasetKind::kSCurve ? "s-curve" : "two-moons";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view name) {
  if (name == "s-curve" || name == "scurve") return DatasetKind::kSCurve;
  if (name == "two-moons" || name == "two-moon" || name == "moons") return DatasetKind::kTwoMoons;
  return std::nullopt;
}

const char* operator_kind_name(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kF1: return "f1";
    case OperatorKind::kF2: return "f2";
    case OperatorKind::kCustomAffine: return "custom-affine";
  }
  return "?";
}

std::optional<OperatorKind> parse_operator_kind(std::string_view name) {
  if (name == "f1") return OperatorKind::kF1;
  if (name == "f2") return OperatorKind::kF2;
  if (name == "custom-affine" || name == "affine") return OperatorKind::kCustomAffine;
  return std::nullopt;
}

SampleBatch sample_dataset(const DatasetSpec& spec, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_dataset: n must be >= 1");
  if (spec.noise_sigma < 0.0) {
    throw std::invalid_argument("sample_dataset: noise sigma must be nonnegative");
  }
  Rng rng = make_rng(spec.seed, 0xda7aULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SampleBatch batch(n, 2,
                    std::string(dataset_kind_name(spec.kind)) + " sigma=" +
                        std::to_string(spec.noise_sigma) + " seed=" + std::to_string(spec.seed));

  if (spec.kind == DatasetKind::kSCurve) {
    constexpr double half_range = 1.5 * std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (2.0 * unit(rng) - 1.0) * half_range;
      const double sgn = (t > 0.0) ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
      batch.at(i, 0) = std::sin(t) + spec.noise_sigma * normal(rng);
      batch.at(i, 1) = 0.5 * sgn * (std::cos(t) - 1.0) + spec.noise_sigma * normal(rng);
    }
    return batch;
  }

  const std::size_t n_outer = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = unit(rng) * std::numbers::pi;
    double bx, by;
    if (i < n_outer) {
      bx = std::cos(phi);
      by = std::sin(phi);
    } else {
      bx = 1.0 - std::cos(phi);
      by = 0.5 - std::sin(phi);
    }
    bx += spec.noise_sigma * normal(rng);
    by += spec.noise_sigma * normal(rng);
    batch.at(i, 0) = (bx - 0.5) / 1.5;
    batch.at(i, 1) = (by - 0.25) / 1.5;
  }
  return batch;
}

MeasurementModel MeasurementModel::f1(double y) {
  MeasurementModel m;
  m.op = OperatorKind::kF1;
  m.sigma_y = 0.1;  // variance 0.01
  m.observed = {y};
  return m;
}

MeasurementModel MeasurementModel::f2(double y) {
  MeasurementModel m;
  m.op = OperatorKind::kF2;
  m.sigma_y = std::sqrt(0.1);  // variance 0.1
  m.observed = {y};
  return m;
}

MeasurementModel MeasurementModel::custom_affine(std::vector<double> weights, double offset,
                                                 double sigma_y, double y) {
  MeasurementModel m;
  m.op = OperatorKind::kCustomAffine;
  m.sigma_y = sigma_y;
  m.observed = {y};
  m.affine_weights = std::move(weights);
  m.affine_offset = offset;
  m.validate();
  return m;
}

void MeasurementModel::validate() const {
  if (!(sigma_y > 0.0)) {
    throw std::invalid_argument("measurement model: sigma_y must be positive");
  }
  if (observed.size() != output_dim()) {
    throw std::invalid_argument("measurement model: observed value has dimension " +
                                std::to_string(observed.size()) + ", operator produces " +
                                std::to_string(output_dim()));
  }
}

std::vector<double> measure(const MeasurementModel& m, const SampleBatch& x) {
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    switch (m.op) {
      case OperatorKind::kF1:
        out[i] = 5.0 * std::fabs(x.at(i, 0) - x.at(i, 1));
        break;
      case OperatorKind::kF2:
        out[i] = x.at(i, 0) + x.at(i, 1) - 1.5;
        break;
      case OperatorKind::kCustomAffine: {
        double acc = m.affine_offset;
        for (std::size_t c = 0; c < x.cols; ++c) acc += m.affine_weights.at(c) * x.at(i, c);
        out[i] = acc;
        break;
      }
    }
  }
  return out;
}

ad::Tensor measure(const MeasurementModel& m, const ad::Tensor& x) {
  if (x.cols() < 2 && m.op != OperatorKind::kCustomAffine) {
    throw std::invalid_argument("measure: expected 2D points, got " + ad::shape_str(x));
  }
  switch (m.op) {
    case OperatorKind::kF1: {
      ad::Tensor diff = ad::sub(ad::slice(x, 1, 0, 1), ad::slice(x, 1, 1, 1));
      return ad::scalar_mul(ad::abs(diff), 5.0);
    }
    case OperatorKind::kF2: {
      ad::Tensor s = ad::add(ad::slice(x, 1, 0, 1), ad::slice(x, 1, 1, 1));
      return ad::sub(s, ad::Tensor::full(x.rows(), 1, 1.5));
    }
    case OperatorKind::kCustomAffine: {
      if (m.affine_weights.size() != x.cols()) {
        throw std::invalid_argument("measure: affine weights have dimension " +
                                    std::to_string(m.affine_weights.size()) + ", points are " +
                                    ad::shape_str(x));
      }
      ad::Tensor acc = ad::Tensor::full(x.rows(), 1, m.affine_offset);
      for (std::size_t c = 0; c < x.cols(); ++c) {
        acc = ad::add(acc, ad::scalar_mul(ad::slice(x, 1, c, 1), m.affine_weights[c]));
      }
      return acc;
    }
  }
  throw std::logic_error("measure: unknown operator kind");
}

ad::Tensor log_likelihood(const MeasurementModel& m, const ad::Tensor& x) {
  m.validate();
  ad::Tensor f = measure(m, x);
  ad::Tensor y = ad::Tensor::from_row(m.observed);
  ad::Tensor residual = ad::sub(y.rows() == f.rows() ? y : ad::broadcast(y, f.rows()), f);
  const double scale = -1.0 / (2.0 * m.sigma_y * m.sigma_y);
  return ad::scalar_mul(ad::l2_norm_sq(residual), scale);
}

}  // namespace flowcond
