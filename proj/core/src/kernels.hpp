// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace flowcond::ad::detail {

// out = a[m,k] * b[k,n]
void matmul_kernel(const double* a, std::size_t m, std::size_t k,
                   const double* b, std::size_t n, double* out);

// da[m,k] += g[m,n] * b[k,n]^T
void matmul_acc_grad_lhs(const double* g, std::size_t m, std::size_t n,
                         const double* b, std::size_t k, double* da);

// db[k,n] += a[m,k]^T * g[m,n]
void matmul_acc_grad_rhs(const double* a, std::size_t m, std::size_t k,
                         const double* g, std::size_t n, double* db);

}  // namespace flowcond::ad::detail
