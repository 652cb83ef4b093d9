// SPDX-License-Identifier: Apache-2.0
#include "flowcond/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flowcond::ot {

CostMatrix::CostMatrix(std::size_t size, std::vector<double> v) : n(size), values(std::move(v)) {
  if (values.size() != n * n) {
    throw std::invalid_argument("cost matrix: expected " + std::to_string(n * n) +
                                " entries, got " + std::to_string(values.size()));
  }
}

namespace {

void validate(const CostMatrix& cost) {
  if (cost.n == 0) throw std::invalid_argument("solve_assignment: empty cost matrix");
  if (cost.values.size() != cost.n * cost.n) {
    throw std::invalid_argument("solve_assignment: cost matrix is not square");
  }
  for (double v : cost.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("solve_assignment: non-finite cost entry");
    if (v < 0.0) throw std::invalid_argument("solve_assignment: negative cost entry");
  }
}

// Among equal-cost optima, bubble pairwise swaps toward the
// lexicographically smallest permutation.
void lexicographic_cleanup(const CostMatrix& cost, std::vector<std::size_t>& perm) {
  const std::size_t n = perm.size();
  bool changed = true;
  std::size_t passes = 0;
  while (changed && passes++ < n) {
    changed = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (perm[j] >= perm[i]) continue;
        const double before = cost.at(i, perm[i]) + cost.at(j, perm[j]);
        const double after = cost.at(i, perm[j]) + cost.at(j, perm[i]);
        if (after == before) {
          std::swap(perm[i], perm[j]);
          changed = true;
        }
      }
    }
  }
}

}  // namespace

CouplingPlan solve_assignment(const CostMatrix& cost) {
  validate(cost);
  const std::size_t n = cost.n;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting path with dual potentials; index 0 is a virtual
  // column. p[j] = row currently matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  CouplingPlan plan;
  plan.permutation.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) plan.permutation[p[j] - 1] = j - 1;
  lexicographic_cleanup(cost, plan.permutation);
  for (std::size_t i = 0; i < n; ++i) plan.total_cost += cost.at(i, plan.permutation[i]);
  return plan;
}

CouplingPlan ot_pairs(const SampleBatch& x0, const SampleBatch& x1, CostKind kind) {
  if (x0.rows != x1.rows) {
    throw std::invalid_argument("ot_pairs: batch sizes differ, " + std::to_string(x0.rows) +
                                " vs " + std::to_string(x1.rows));
  }
  if (x0.cols != x1.cols) {
    throw std::invalid_argument("ot_pairs: point dimensions differ, " + std::to_string(x0.cols) +
                                " vs " + std::to_string(x1.cols));
  }
  const std::size_t n = x0.rows;
  const std::size_t d = x0.cols;
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = x0.at(i, c) - x1.at(j, c);
        acc += diff * diff;
      }
      cost[i * n + j] = (kind == CostKind::kSquaredEuclidean) ? acc : std::sqrt(acc);
    }
  }
  return solve_assignment(CostMatrix(n, std::move(cost)));
}

}  // namespace flowcond::ot
