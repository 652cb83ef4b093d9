// SPDX-License-Identifier: Apache-2.0
#include "flowcond/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "kernels.hpp"

namespace flowcond::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScalarMul: return "scalar-mul";
    case Op::kMatmul: return "matmul";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kTanh: return "tanh";
    case Op::kSilu: return "silu";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kAbs: return "abs";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kBroadcast: return "broadcast";
    case Op::kL2NormSq: return "l2-norm-squared";
    case Op::kStopGradient: return "stop-gradient";
  }
  return "?";
}

const Tensor& GradientMap::at(const Tensor& leaf) const {
  auto it = grads_.find(leaf.node());
  if (leaf.node() < 0 || it == grads_.end()) {
    throw std::invalid_argument("GradientMap::at: tensor is not a watched leaf of this backward pass");
  }
  return it->second;
}

bool GradientMap::contains(const Tensor& leaf) const {
  return leaf.node() >= 0 && grads_.count(leaf.node()) > 0;
}

Tensor Tape::watch(Tensor t) {
  if (t.on_tape()) {
    throw std::invalid_argument("Tape::watch: tensor is already on a tape; watch detached values only");
  }
  if (t.empty()) {
    throw std::invalid_argument("Tape::watch: empty tensor");
  }
  Node node;
  node.op = Op::kLeaf;
  Tensor out = emit(std::move(node), std::move(t));
  watched_.back() = true;
  return out;
}

Tensor Tape::emit(Node node, Tensor value) {
  node.out_rows = value.rows();
  node.out_cols = value.cols();
  nodes_.push_back(std::move(node));
  watched_.push_back(false);
  value.tape_ = this;
  value.node_ = static_cast<int>(nodes_.size()) - 1;
  return value;
}

namespace {

// adjoint buffers, lazily allocated; empty vector = node unreached
using Adjoints = std::vector<std::vector<double>>;

std::vector<double>& adj_of(Adjoints& adj, int id, std::size_t n) {
  auto& buf = adj[static_cast<std::size_t>(id)];
  if (buf.empty()) buf.assign(n, 0.0);
  return buf;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

GradientMap Tape::backward(const Tensor& root) const {
  if (root.tape() != this || root.node() < 0) {
    throw std::invalid_argument("Tape::backward: root does not live on this tape");
  }
  if (root.size() != 1) {
    throw std::invalid_argument("Tape::backward: root must be scalar, got shape " + shape_str(root));
  }

  Adjoints adj(nodes_.size());
  adj[static_cast<std::size_t>(root.node())] = {1.0};

  for (int id = root.node(); id >= 0; --id) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    const auto& g = adj[static_cast<std::size_t>(id)];
    if (g.empty()) continue;
    const std::size_t n = node.out_rows * node.out_cols;

    switch (node.op) {
      case Op::kLeaf:
      case Op::kStopGradient:
        break;

      case Op::kAdd: {
        for (int side = 0; side < 2; ++side) {
          int in = node.inputs[static_cast<std::size_t>(side)];
          if (in < 0) continue;
          auto& d = adj_of(adj, in, n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
        }
        if (node.inputs[1] >= 0) {
          auto& d = adj_of(adj, node.inputs[1], n);
          for (std::size_t i = 0; i < n; ++i) d[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        const auto a = node.saved[0].values();
        const auto b = node.saved[1].values();
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * b[i];
        }
        if (node.inputs[1] >= 0) {
          auto& d = adj_of(adj, node.inputs[1], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * a[i];
        }
        break;
      }
      case Op::kScalarMul: {
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += node.factor * g[i];
        }
        break;
      }
      case Op::kMatmul: {
        const Tensor& a = node.saved[0];
        const Tensor& b = node.saved[1];
        const std::size_t m = a.rows(), k = a.cols(), cols = b.cols();
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], m * k);
          detail::matmul_acc_grad_lhs(g.data(), m, cols, b.values().data(), k, d.data());
        }
        if (node.inputs[1] >= 0) {
          auto& d = adj_of(adj, node.inputs[1], k * cols);
          detail::matmul_acc_grad_rhs(a.values().data(), m, k, g.data(), cols, d.data());
        }
        break;
      }
      case Op::kSum: {
        const Tensor& x = node.saved[0];
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], x.size());
          for (std::size_t i = 0; i < x.size(); ++i) d[i] += g[0];
        }
        break;
      }
      case Op::kMean: {
        const Tensor& x = node.saved[0];
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], x.size());
          const double w = g[0] / static_cast<double>(x.size());
          for (std::size_t i = 0; i < x.size(); ++i) d[i] += w;
        }
        break;
      }
      case Op::kTanh: {
        const auto y = node.saved[0].values();  // saved output
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
        }
        break;
      }
      case Op::kSilu: {
        const auto x = node.saved[0].values();  // saved input
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) {
            const double s = sigmoid(x[i]);
            d[i] += g[i] * s * (1.0 + x[i] * (1.0 - s));
          }
        }
        break;
      }
      case Op::kSin: {
        const auto x = node.saved[0].values();
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * std::cos(x[i]);
        }
        break;
      }
      case Op::kCos: {
        const auto x = node.saved[0].values();
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] -= g[i] * std::sin(x[i]);
        }
        break;
      }
      case Op::kAbs: {
        const auto x = node.saved[0].values();
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) {
            const double s = (x[i] > 0.0) ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
            d[i] += g[i] * s;
          }
        }
        break;
      }
      case Op::kSquare: {
        const auto x = node.saved[0].values();
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * 2.0 * x[i];
        }
        break;
      }
      case Op::kSqrt: {
        const auto y = node.saved[0].values();  // saved output
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], n);
          for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * 0.5 / y[i];
        }
        break;
      }
      case Op::kConcat: {
        const std::size_t rows = node.out_rows, cols = node.out_cols;
        std::size_t offset = 0;
        for (std::size_t part = 0; part < node.inputs.size(); ++part) {
          const std::size_t extent = node.splits[part];
          const int in = node.inputs[part];
          if (in >= 0) {
            if (node.axis == 0) {
              auto& d = adj_of(adj, in, extent * cols);
              for (std::size_t i = 0; i < extent * cols; ++i) d[i] += g[offset * cols + i];
            } else {
              auto& d = adj_of(adj, in, rows * extent);
              for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < extent; ++c)
                  d[r * extent + c] += g[r * cols + offset + c];
            }
          }
          offset += extent;
        }
        break;
      }
      case Op::kSlice: {
        const Tensor& x = node.saved[0];
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], x.size());
          const std::size_t xcols = x.cols();
          if (node.axis == 0) {
            for (std::size_t r = 0; r < node.out_rows; ++r)
              for (std::size_t c = 0; c < xcols; ++c)
                d[(node.begin + r) * xcols + c] += g[r * xcols + c];
          } else {
            for (std::size_t r = 0; r < node.out_rows; ++r)
              for (std::size_t c = 0; c < node.out_cols; ++c)
                d[r * xcols + node.begin + c] += g[r * node.out_cols + c];
          }
        }
        break;
      }
      case Op::kBroadcast: {
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], node.out_cols);
          for (std::size_t r = 0; r < node.out_rows; ++r)
            for (std::size_t c = 0; c < node.out_cols; ++c)
              d[c] += g[r * node.out_cols + c];
        }
        break;
      }
      case Op::kL2NormSq: {
        const Tensor& x = node.saved[0];
        if (node.inputs[0] >= 0) {
          auto& d = adj_of(adj, node.inputs[0], x.size());
          const auto xv = x.values();
          for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t c = 0; c < x.cols(); ++c)
              d[r * x.cols() + c] += g[r] * 2.0 * xv[r * x.cols() + c];
        }
        break;
      }
    }
  }

  GradientMap out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!watched_[id]) continue;
    const Node& node = nodes_[id];
    auto& buf = adj[id];
    Tensor grad = buf.empty() ? Tensor::zeros(node.out_rows, node.out_cols)
                              : Tensor(node.out_rows, node.out_cols, std::move(buf));
    out.grads_.emplace(static_cast<int>(id), std::move(grad));
  }
  return out;
}

}  // namespace flowcond::ad
