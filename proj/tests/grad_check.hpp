// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle for reverse-mode gradients. The builder
// is re-run eagerly on perturbed detached inputs, so the check stays
// independent of the tape path it verifies.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "flowcond/ops.hpp"
#include "flowcond/rng.hpp"
#include "flowcond/tape.hpp"
#include "flowcond/tensor.hpp"

namespace flowcond::testing {

using GraphBuilder = std::function<ad::Tensor(const std::vector<ad::Tensor>&)>;

/// Max relative error between tape gradients and central finite
/// differences of sum(builder(inputs)) over every input coordinate.
inline double max_grad_error(const GraphBuilder& build, std::vector<ad::Tensor> inputs,
                             double step = 1e-5) {
  ad::Tape tape;
  std::vector<ad::Tensor> watched;
  watched.reserve(inputs.size());
  for (const auto& in : inputs) watched.push_back(tape.watch(in.detached()));
  const ad::Tensor root = ad::sum(build(watched));
  const ad::GradientMap grads = tape.backward(root);

  auto eval = [&](const std::vector<ad::Tensor>& plain) {
    return ad::sum(build(plain)).scalar();
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto analytic = grads.at(watched[i]).values();
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      std::vector<ad::Tensor> plain = inputs;
      std::vector<double> bumped(inputs[i].values().begin(), inputs[i].values().end());
      const double h = step * std::max(1.0, std::fabs(bumped[k]));

      bumped[k] += h;
      plain[i] = ad::Tensor(inputs[i].rows(), inputs[i].cols(), bumped);
      const double fp = eval(plain);
      bumped[k] -= 2.0 * h;
      plain[i] = ad::Tensor(inputs[i].rows(), inputs[i].cols(), bumped);
      const double fm = eval(plain);

      const double fd = (fp - fm) / (2.0 * h);
      const double denom = std::max({1e-6, std::fabs(fd), std::fabs(analytic[k])});
      worst = std::max(worst, std::fabs(fd - analytic[k]) / denom);
    }
  }
  return worst;
}

inline ad::Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(rng);
  return ad::Tensor(rows, cols, std::move(v));
}

}  // namespace flowcond::testing
