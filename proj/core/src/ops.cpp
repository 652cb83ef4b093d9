// SPDX-License-Identifier: Apache-2.0
#include "flowcond/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "kernels.hpp"

namespace flowcond::ad {

struct OpRecorder {
  using Node = Tape::Node;
  static Tensor emit(Tape* tape, Node node, Tensor value) {
    if (tape == nullptr) return value;
    return tape->emit(std::move(node), std::move(value));
  }
};

namespace {

using Node = OpRecorder::Node;

int node_id(const Tensor& t) { return t.on_tape() ? t.node() : -1; }

Tape* merge_tapes(Tape* a, Tape* b) {
  if (a && b && a != b) {
    throw std::invalid_argument("ops: operands live on different tapes");
  }
  return a ? a : b;
}

// Leading-dimension broadcast: a 1xC operand is tiled against an RxC one.
void align_batch(const char* op, Tensor& a, Tensor& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return;
  if (a.cols() == b.cols()) {
    if (a.rows() == 1 && b.rows() > 1) {
      a = broadcast(a, b.rows());
      return;
    }
    if (b.rows() == 1 && a.rows() > 1) {
      b = broadcast(b, a.rows());
      return;
    }
  }
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                              shape_str(b));
}

template <typename F>
Tensor binary_elementwise(Op op, Tensor a, Tensor b, bool save_inputs, F&& f) {
  align_batch(op_name(op), a, b);
  Tape* tape = merge_tapes(a.tape(), b.tape());
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);

  Node node;
  node.op = op;
  node.inputs = {node_id(a), node_id(b)};
  if (save_inputs) node.saved = {a.detached(), b.detached()};
  return OpRecorder::emit(tape, std::move(node), Tensor(a.rows(), a.cols(), std::move(out)));
}

enum class Save { kInput, kOutput, kNone };

template <typename F>
Tensor unary_elementwise(Op op, const Tensor& x, Save save, F&& f) {
  const auto xv = x.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);

  Tensor result(x.rows(), x.cols(), std::move(out));
  Node node;
  node.op = op;
  node.inputs = {node_id(x)};
  if (save == Save::kInput) {
    node.saved = {x.detached()};
  } else if (save == Save::kOutput) {
    node.saved = {result.detached()};
  }
  return OpRecorder::emit(x.tape(), std::move(node), std::move(result));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(Op::kAdd, a, b, false, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(Op::kSub, a, b, false, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(Op::kMul, a, b, true, [](double x, double y) { return x * y; });
}

Tensor scalar_mul(const Tensor& x, double factor) {
  const auto xv = x.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * xv[i];
  Node node;
  node.op = Op::kScalarMul;
  node.inputs = {node_id(x)};
  node.factor = factor;
  return OpRecorder::emit(x.tape(), std::move(node), Tensor(x.rows(), x.cols(), std::move(out)));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_str(a) + " vs " +
                                shape_str(b));
  }
  Tape* tape = merge_tapes(a.tape(), b.tape());
  std::vector<double> out(a.rows() * b.cols());
  detail::matmul_kernel(a.values().data(), a.rows(), a.cols(), b.values().data(), b.cols(),
                        out.data());
  Node node;
  node.op = Op::kMatmul;
  node.inputs = {node_id(a), node_id(b)};
  node.saved = {a.detached(), b.detached()};
  return OpRecorder::emit(tape, std::move(node), Tensor(a.rows(), b.cols(), std::move(out)));
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Node node;
  node.op = Op::kSum;
  node.inputs = {node_id(x)};
  node.saved = {x.detached()};
  return OpRecorder::emit(x.tape(), std::move(node), Tensor(acc));
}

Tensor mean(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Node node;
  node.op = Op::kMean;
  node.inputs = {node_id(x)};
  node.saved = {x.detached()};
  return OpRecorder::emit(x.tape(), std::move(node),
                          Tensor(acc / static_cast<double>(x.size())));
}

Tensor tanh(const Tensor& x) {
  return unary_elementwise(Op::kTanh, x, Save::kOutput, [](double v) { return std::tanh(v); });
}

Tensor silu(const Tensor& x) {
  return unary_elementwise(Op::kSilu, x, Save::kInput,
                           [](double v) { return v / (1.0 + std::exp(-v)); });
}

Tensor sin(const Tensor& x) {
  return unary_elementwise(Op::kSin, x, Save::kInput, [](double v) { return std::sin(v); });
}

Tensor cos(const Tensor& x) {
  return unary_elementwise(Op::kCos, x, Save::kInput, [](double v) { return std::cos(v); });
}

Tensor abs(const Tensor& x) {
  return unary_elementwise(Op::kAbs, x, Save::kInput, [](double v) { return std::fabs(v); });
}

Tensor square(const Tensor& x) {
  return unary_elementwise(Op::kSquare, x, Save::kInput, [](double v) { return v * v; });
}

Tensor sqrt(const Tensor& x) {
  return unary_elementwise(Op::kSqrt, x, Save::kOutput, [](double v) { return std::sqrt(v); });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis > 1) throw std::invalid_argument("concat: axis must be 0 or 1");

  Tape* tape = nullptr;
  std::size_t rows = parts[0].rows(), cols = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    tape = merge_tapes(tape, p.tape());
    if (axis == 0) {
      if (p.cols() != cols) {
        throw std::invalid_argument("concat: shape mismatch " + shape_str(p) + " vs " +
                                    shape_str(rows, cols));
      }
      total += p.rows();
    } else {
      if (p.rows() != rows) {
        throw std::invalid_argument("concat: shape mismatch " + shape_str(p) + " vs " +
                                    shape_str(rows, cols));
      }
      total += p.cols();
    }
  }

  const std::size_t out_rows = (axis == 0) ? total : rows;
  const std::size_t out_cols = (axis == 0) ? cols : total;
  std::vector<double> out(out_rows * out_cols);

  Node node;
  node.op = Op::kConcat;
  node.axis = axis;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const auto pv = p.values();
    if (axis == 0) {
      std::copy(pv.begin(), pv.end(), out.begin() + static_cast<std::ptrdiff_t>(offset * out_cols));
      node.splits.push_back(p.rows());
      offset += p.rows();
    } else {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < p.cols(); ++c)
          out[r * out_cols + offset + c] = pv[r * p.cols() + c];
      node.splits.push_back(p.cols());
      offset += p.cols();
    }
    node.inputs.push_back(node_id(p));
  }
  return OpRecorder::emit(tape, std::move(node), Tensor(out_rows, out_cols, std::move(out)));
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  const Tensor parts[] = {a, b};
  return concat(std::span<const Tensor>(parts, 2), axis);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t extent) {
  if (axis > 1) throw std::invalid_argument("slice: axis must be 0 or 1");
  const std::size_t dim = (axis == 0) ? x.rows() : x.cols();
  if (extent == 0 || begin + extent > dim) {
    throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," +
                                std::to_string(begin + extent) + ") out of " + shape_str(x));
  }
  const std::size_t out_rows = (axis == 0) ? extent : x.rows();
  const std::size_t out_cols = (axis == 0) ? x.cols() : extent;
  const auto xv = x.values();
  std::vector<double> out(out_rows * out_cols);
  if (axis == 0) {
    std::copy(xv.begin() + static_cast<std::ptrdiff_t>(begin * x.cols()),
              xv.begin() + static_cast<std::ptrdiff_t>((begin + extent) * x.cols()), out.begin());
  } else {
    for (std::size_t r = 0; r < out_rows; ++r)
      for (std::size_t c = 0; c < extent; ++c) out[r * extent + c] = xv[r * x.cols() + begin + c];
  }
  Node node;
  node.op = Op::kSlice;
  node.inputs = {node_id(x)};
  node.saved = {x.detached()};
  node.axis = axis;
  node.begin = begin;
  return OpRecorder::emit(x.tape(), std::move(node), Tensor(out_rows, out_cols, std::move(out)));
}

Tensor broadcast(const Tensor& row, std::size_t rows) {
  if (row.rows() != 1) {
    throw std::invalid_argument("broadcast: expected a single row, got " + shape_str(row));
  }
  if (rows == 0) throw std::invalid_argument("broadcast: row count must be positive");
  const auto rv = row.values();
  std::vector<double> out(rows * row.cols());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(rv.begin(), rv.end(), out.begin() + static_cast<std::ptrdiff_t>(r * row.cols()));
  Node node;
  node.op = Op::kBroadcast;
  node.inputs = {node_id(row)};
  return OpRecorder::emit(row.tape(), std::move(node), Tensor(rows, row.cols(), std::move(out)));
}

Tensor l2_norm_sq(const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double v = xv[r * x.cols() + c];
      acc += v * v;
    }
    out[r] = acc;
  }
  Node node;
  node.op = Op::kL2NormSq;
  node.inputs = {node_id(x)};
  node.saved = {x.detached()};
  return OpRecorder::emit(x.tape(), std::move(node), Tensor(x.rows(), 1, std::move(out)));
}

Tensor stop_gradient(const Tensor& x) {
  if (!x.on_tape()) return x;
  Node node;
  node.op = Op::kStopGradient;
  node.inputs = {x.node()};
  return OpRecorder::emit(x.tape(), std::move(node), x.detached());
}

}  // namespace flowcond::ad
