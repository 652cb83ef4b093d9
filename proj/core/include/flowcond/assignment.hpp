// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "flowcond/sample_batch.hpp"

namespace flowcond::ot {

struct CostMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n

  CostMatrix() = default;
  CostMatrix(std::size_t size, std::vector<double> v);
  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Minimum-cost perfect matching: source row i is paired with data row
/// permutation[i]; total_cost is the sum of matched entries and is optimal.
/// Equal-cost optima are tie-broken toward the lexicographically smallest
/// permutation.
struct CouplingPlan {
  std::vector<std::size_t> permutation;
  double total_cost = 0.0;
};

/// Exact solve by shortest augmenting paths (Jonker-Volgenant class),
/// O(n^3). Costs must be square, finite and nonnegative.
CouplingPlan solve_assignment(const CostMatrix& cost);

enum class CostKind { kSquaredEuclidean, kEuclidean };

/// Optimal coupling between two equal-size point sets under the stated
/// ground cost. Squared Euclidean is the training coupling; plain
/// Euclidean backs the empirical W1 metric.
CouplingPlan ot_pairs(const SampleBatch& x0, const SampleBatch& x1, CostKind kind);

}  // namespace flowcond::ot
