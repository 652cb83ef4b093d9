// SPDX-License-Identifier: Apache-2.0
//
// Recorded tensor operations. Each op computes its forward value eagerly;
// when any input lives on a tape the result is registered there as well,
// so the same call sites serve both plain evaluation and gradient passes.
#pragma once

#include <span>

#include "flowcond/tape.hpp"
#include "flowcond/tensor.hpp"

namespace flowcond::ad {

// Elementwise binary ops. Shapes must match, or one operand may be a
// single row that is batch-broadcast against the other (leading dim only).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scalar_mul(const Tensor& x, double factor);

// [m,k] x [k,n] -> [m,n]; inner dimensions must match.
Tensor matmul(const Tensor& a, const Tensor& b);

// Full reductions to a 1x1 scalar.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Elementwise unaries.
Tensor tanh(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor abs(const Tensor& x);  // subgradient at 0 is 0
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);

// Concatenate along `axis` (0 = stack rows, 1 = stack columns).
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);

// Contiguous slab [begin, begin+extent) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t extent);

// Tile a single row into `rows` identical rows.
Tensor broadcast(const Tensor& row, std::size_t rows);

// Per-row squared L2 norm: [B,D] -> [B,1].
Tensor l2_norm_sq(const Tensor& x);

// Value passthrough that blocks gradient flow.
Tensor stop_gradient(const Tensor& x);

}  // namespace flowcond::ad
