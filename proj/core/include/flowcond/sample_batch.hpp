// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flowcond/tensor.hpp"

namespace flowcond {

/// N points in state space, one row per sample, with a provenance tag
/// ("s-curve seed=1", "dflow-sgld pushforward", ...).
struct SampleBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major
  std::string tag;

  SampleBatch() = default;
  SampleBatch(std::size_t n, std::size_t dim, std::string tag_ = {})
      : rows(n), cols(dim), data(n * dim, 0.0), tag(std::move(tag_)) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  ad::Tensor tensor() const { return ad::Tensor(rows, cols, data); }
  static SampleBatch from_tensor(const ad::Tensor& t, std::string tag = {});

  /// Euclidean norm of row r.
  double row_norm(std::size_t r) const;
};

}  // namespace flowcond
