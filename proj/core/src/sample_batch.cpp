// SPDX-License-Identifier: Apache-2.0
#include "flowcond/sample_batch.hpp"

#include <cmath>

namespace flowcond {

SampleBatch SampleBatch::from_tensor(const ad::Tensor& t, std::string tag) {
  SampleBatch b(t.rows(), t.cols(), std::move(tag));
  const auto v = t.values();
  b.data.assign(v.begin(), v.end());
  return b;
}

double SampleBatch::row_norm(std::size_t r) const {
  double acc = 0.0;
  for (std::size_t c = 0; c < cols; ++c) acc += at(r, c) * at(r, c);
  return std::sqrt(acc);
}

}  // namespace flowcond
