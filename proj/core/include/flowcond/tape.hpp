// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "flowcond/tensor.hpp"

namespace flowcond::ad {

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScalarMul,
  kMatmul,
  kSum,
  kMean,
  kTanh,
  kSilu,
  kSin,
  kCos,
  kAbs,
  kSquare,
  kSqrt,
  kConcat,
  kSlice,
  kBroadcast,
  kL2NormSq,
  kStopGradient,
};

const char* op_name(Op op);

/// Gradients of a scalar root with respect to every watched leaf,
/// keyed by the leaf's node id. Leaves the backward sweep never
/// reached map to zero tensors. All entries are detached.
class GradientMap {
 public:
  const Tensor& at(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<int, Tensor> grads_;
  friend class Tape;
};

/// Append-only record of operations for one forward pass (define-by-run).
/// Inputs of a node always precede it, so a single reverse sweep visits
/// each node exactly once. Tapes are confined to one worker; gradients
/// come back detached, so there is no backward-through-backward.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `t` as a differentiable leaf and returns the taped handle.
  Tensor watch(Tensor t);

  /// Reverse sweep from a scalar root living on this tape.
  GradientMap backward(const Tensor& root) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> inputs;    // node ids; -1 marks a detached operand
    std::vector<Tensor> saved;  // forward values the backward pass needs
    std::size_t out_rows = 0;
    std::size_t out_cols = 0;
    double factor = 0.0;              // kScalarMul
    std::size_t axis = 0;             // kConcat / kSlice
    std::size_t begin = 0;            // kSlice
    std::vector<std::size_t> splits;  // kConcat: extent of each input
  };

  Tensor emit(Node node, Tensor value);

  std::vector<Node> nodes_;
  std::vector<bool> watched_;

  friend struct OpRecorder;
};

}  // namespace flowcond::ad
