// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace flowcond::ad {

class Tape;

/// Dense row-major float64 matrix that may participate in a reverse-mode
/// tape. Rank is fixed at 2; scalars are 1x1, row vectors 1xN. A tensor
/// detached from any tape has node() < 0 and never receives a gradient.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
  explicit Tensor(double scalar_value);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor from_row(std::span<const double> row);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  std::array<std::size_t, 2> shape() const { return {rows_, cols_}; }
  bool empty() const { return data_ == nullptr; }

  std::span<const double> values() const;
  /// Mutable access to the underlying buffer. Only valid for tensors that
  /// have not been consumed by a recorded op; the tape stores saved values
  /// by reference to this buffer.
  std::span<double> mutable_values();

  double at(std::size_t r, std::size_t c) const;
  /// Scalar value; throws unless size() == 1.
  double scalar() const;

  bool on_tape() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  /// Same buffer, no tape association.
  Tensor detached() const;

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::shared_ptr<std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;

  friend class Tape;
};

std::string shape_str(const Tensor& t);
std::string shape_str(std::size_t rows, std::size_t cols);

}  // namespace flowcond::ad
