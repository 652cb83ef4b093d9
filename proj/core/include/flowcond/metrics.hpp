// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "flowcond/rng.hpp"
#include "flowcond/sample_batch.hpp"
#include "flowcond/toy_data.hpp"

namespace flowcond::metrics {

/// High-quality reference posterior by importance resampling: draws a pool
/// from the analytic data generator, weights each point by the Gaussian
/// likelihood of the observation, and systematically resamples n_out
/// points. Errors out when the effective sample size drops below 50.
SampleBatch reference_posterior(const DatasetSpec& spec, const MeasurementModel& measurement,
                                std::size_t pool_size, std::size_t n_out, Rng& rng);

/// Exact empirical 1-Wasserstein distance (mean Euclidean ground cost)
/// between equal-size point sets via optimal assignment. Unequal sizes are
/// resolved by seeded uniform subsampling of the larger set.
double w1_distance(const SampleBatch& a, const SampleBatch& b,
                   std::uint64_t subsample_seed = 0);

/// Mean absolute measurement error: (1/N) sum_i (1/m) ||F(x_i) - y||_1.
double measurement_mae(const SampleBatch& samples, const MeasurementModel& measurement);

}  // namespace flowcond::metrics
