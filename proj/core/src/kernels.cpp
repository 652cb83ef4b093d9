// SPDX-License-Identifier: Apache-2.0
#include "kernels.hpp"

#include <Eigen/Core>

namespace flowcond::ad::detail {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using Index = Eigen::Index;
}  // namespace

void matmul_kernel(const double* a, std::size_t m, std::size_t k,
                   const double* b, std::size_t n, double* out) {
  ConstMap am(a, Index(m), Index(k));
  ConstMap bm(b, Index(k), Index(n));
  MutMap om(out, Index(m), Index(n));
  om.noalias() = am * bm;
}

void matmul_acc_grad_lhs(const double* g, std::size_t m, std::size_t n,
                         const double* b, std::size_t k, double* da) {
  ConstMap gm(g, Index(m), Index(n));
  ConstMap bm(b, Index(k), Index(n));
  MutMap dam(da, Index(m), Index(k));
  dam.noalias() += gm * bm.transpose();
}

void matmul_acc_grad_rhs(const double* a, std::size_t m, std::size_t k,
                         const double* g, std::size_t n, double* db) {
  ConstMap am(a, Index(m), Index(k));
  ConstMap gm(g, Index(m), Index(n));
  MutMap dbm(db, Index(k), Index(n));
  dbm.noalias() += am.transpose() * gm;
}

}  // namespace flowcond::ad::detail
