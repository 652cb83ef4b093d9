// SPDX-License-Identifier: Apache-2.0
#include "flowcond/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace flowcond::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Tensor: extents must be positive, got " + shape_str(rows, cols));
  }
  if (values.size() != rows * cols) {
    throw std::invalid_argument("Tensor: " + shape_str(rows, cols) + " needs " +
                                std::to_string(rows * cols) + " values, got " +
                                std::to_string(values.size()));
  }
  data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor::Tensor(double scalar_value) : Tensor(1, 1, {scalar_value}) {}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return full(rows, cols, 0.0);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::from_row(std::span<const double> row) {
  return Tensor(1, row.size(), std::vector<double>(row.begin(), row.end()));
}

std::span<const double> Tensor::values() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

std::span<double> Tensor::mutable_values() {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    throw std::out_of_range("Tensor::at(" + std::to_string(r) + "," + std::to_string(c) +
                            ") out of " + shape_str(*this));
  }
  return (*data_)[r * cols_ + c];
}

double Tensor::scalar() const {
  if (size() != 1) {
    throw std::invalid_argument("Tensor::scalar: tensor has shape " + shape_str(*this));
  }
  return (*data_)[0];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  return t;
}

bool Tensor::all_finite() const {
  if (!data_) return true;
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_str(const Tensor& t) {
  return shape_str(t.rows(), t.cols());
}

std::string shape_str(std::size_t rows, std::size_t cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

}  // namespace flowcond::ad
