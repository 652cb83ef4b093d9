// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace flowcond::metrics {

/// Uniform space-time (or space-space) grid, row-major [nt, nx] with
/// periodic boundary along the second axis. Extents below the residual
/// stencil width are rejected.
struct Field2D {
  std::size_t nt = 0;
  std::size_t nx = 0;
  double dt = 0.0;
  double dx = 0.0;
  std::vector<double> values;

  Field2D() = default;
  Field2D(std::size_t nt_, std::size_t nx_, double dt_, double dx_,
          std::vector<double> values_ = {});

  double& at(std::size_t n, std::size_t j) { return values[n * nx + j]; }
  double at(std::size_t n, std::size_t j) const { return values[n * nx + j]; }
};

struct KsResidualResult {
  std::size_t nt = 0;  // interior time rows: field nt - 2
  std::size_t nx = 0;
  std::vector<double> values;
  double mean_abs = 0.0;
};

/// Finite-difference Kuramoto-Sivashinsky residual
///   R = u_t + u u_x + u_xx + u_xxxx
/// with centered time and space stencils; spatial indices wrap
/// periodically, the first and last time rows are skipped.
KsResidualResult ks_residual(const Field2D& field);

struct SpectraResult {
  std::vector<double> wavenumbers;  // 2 pi j / (N d), one-sided
  std::vector<double> power;       // |u_hat|^2 / N, folded one-sided, line-averaged
  std::vector<double> energy;      // premultiplied: k * power
};

enum class FieldAxis { kRows = 0, kCols = 1 };

/// One-dimensional energy spectrum: DFT along `transform_axis`, one-sided
/// 1/N-normalized power averaged over `average_axis`, premultiplied by the
/// wavenumber. The two axes must differ.
SpectraResult energy_spectrum_1d(const Field2D& field, FieldAxis transform_axis,
                                 FieldAxis average_axis);

}  // namespace flowcond::metrics
