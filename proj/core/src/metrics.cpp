// SPDX-License-Identifier: Apache-2.0
#include "flowcond/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flowcond/assignment.hpp"

namespace flowcond::metrics {

SampleBatch reference_posterior(const DatasetSpec& spec, const MeasurementModel& measurement,
                                std::size_t pool_size, std::size_t n_out, Rng& rng) {
  measurement.validate();
  if (n_out == 0 || pool_size < n_out) {
    throw std::invalid_argument("reference_posterior: need pool_size >= n_out >= 1");
  }

  DatasetSpec pool_spec = spec;
  pool_spec.seed = rng();
  const SampleBatch pool = sample_dataset(pool_spec, pool_size);
  const std::vector<double> forward = measure(measurement, pool);

  // log-weights up to a constant; stabilized by the max
  const double y = measurement.observed[0];
  const double inv_two_var = 1.0 / (2.0 * measurement.sigma_y * measurement.sigma_y);
  std::vector<double> logw(pool_size);
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool_size; ++i) {
    const double r = y - forward[i];
    logw[i] = -r * r * inv_two_var;
    max_logw = std::max(max_logw, logw[i]);
  }
  std::vector<double> w(pool_size);
  double total = 0.0;
  for (std::size_t i = 0; i < pool_size; ++i) {
    w[i] = std::exp(logw[i] - max_logw);
    total += w[i];
  }
  double sum_sq = 0.0;
  for (double& wi : w) {
    wi /= total;
    sum_sq += wi * wi;
  }
  const double ess = 1.0 / sum_sq;
  if (ess < 50.0) {
    throw std::runtime_error("reference_posterior: effective sample size " +
                             std::to_string(ess) + " < 50; increase the pool size");
  }

  // systematic resampling
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u0 = unit(rng) / static_cast<double>(n_out);
  SampleBatch out(n_out, pool.cols, "reference posterior (" + pool.tag + ")");
  double cumulative = w[0];
  std::size_t idx = 0;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double target = u0 + static_cast<double>(k) / static_cast<double>(n_out);
    while (cumulative < target && idx + 1 < pool_size) cumulative += w[++idx];
    for (std::size_t c = 0; c < pool.cols; ++c) out.at(k, c) = pool.at(idx, c);
  }
  return out;
}

double w1_distance(const SampleBatch& a, const SampleBatch& b, std::uint64_t subsample_seed) {
  if (a.rows == 0 || b.rows == 0) throw std::invalid_argument("w1_distance: empty sample set");
  if (a.cols != b.cols) {
    throw std::invalid_argument("w1_distance: dimension mismatch, " + std::to_string(a.cols) +
                                " vs " + std::to_string(b.cols));
  }

  auto subsample = [&](const SampleBatch& big, std::size_t n, std::uint64_t stream) {
    std::vector<std::size_t> order(big.rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(subsample_seed, stream);
    std::shuffle(order.begin(), order.end(), rng);
    SampleBatch out(n, big.cols, big.tag);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < big.cols; ++c) out.at(r, c) = big.at(order[r], c);
    return out;
  };

  const std::size_t n = std::min(a.rows, b.rows);
  const SampleBatch a_cut = (a.rows == n) ? a : subsample(a, n, 1);
  const SampleBatch b_cut = (b.rows == n) ? b : subsample(b, n, 2);

  const ot::CouplingPlan plan = ot_pairs(a_cut, b_cut, ot::CostKind::kEuclidean);
  return plan.total_cost / static_cast<double>(n);
}

double measurement_mae(const SampleBatch& samples, const MeasurementModel& measurement) {
  measurement.validate();
  if (samples.rows == 0) throw std::invalid_argument("measurement_mae: empty sample set");
  const std::vector<double> forward = measure(measurement, samples);
  const double y = measurement.observed[0];
  double acc = 0.0;
  for (double f : forward) acc += std::fabs(f - y);
  return acc / static_cast<double>(samples.rows);
}

}  // namespace flowcond::metrics
