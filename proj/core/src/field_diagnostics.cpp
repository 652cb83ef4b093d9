// SPDX-License-Identifier: Apache-2.0
#include "flowcond/field_diagnostics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace flowcond::metrics {

Field2D::Field2D(std::size_t nt_, std::size_t nx_, double dt_, double dx_,
                 std::vector<double> values_)
    : nt(nt_), nx(nx_), dt(dt_), dx(dx_), values(std::move(values_)) {
  if (nt < 5 || nx < 5) {
    throw std::invalid_argument("Field2D: extents must be >= 5, got " + std::to_string(nt) +
                                "x" + std::to_string(nx));
  }
  if (!(dt > 0.0) || !(dx > 0.0)) {
    throw std::invalid_argument("Field2D: spacings must be positive");
  }
  if (values.empty()) {
    values.assign(nt * nx, 0.0);
  } else if (values.size() != nt * nx) {
    throw std::invalid_argument("Field2D: expected " + std::to_string(nt * nx) +
                                " values, got " + std::to_string(values.size()));
  }
}

KsResidualResult ks_residual(const Field2D& field) {
  if (field.nt < 3 || field.nx < 5) {
    throw std::invalid_argument("ks_residual: grid too small for the stencils");
  }
  const std::size_t nt = field.nt, nx = field.nx;
  const double inv_2dt = 1.0 / (2.0 * field.dt);
  const double inv_2dx = 1.0 / (2.0 * field.dx);
  const double inv_dx2 = 1.0 / (field.dx * field.dx);
  const double inv_dx4 = inv_dx2 * inv_dx2;

  KsResidualResult out;
  out.nt = nt - 2;
  out.nx = nx;
  out.values.resize(out.nt * nx);

  double acc = 0.0;
  for (std::size_t n = 1; n + 1 < nt; ++n) {
    for (std::size_t j = 0; j < nx; ++j) {
      const std::size_t jm1 = (j + nx - 1) % nx;
      const std::size_t jp1 = (j + 1) % nx;
      const std::size_t jm2 = (j + nx - 2) % nx;
      const std::size_t jp2 = (j + 2) % nx;
      const double u = field.at(n, j);
      const double r =
          (field.at(n + 1, j) - field.at(n - 1, j)) * inv_2dt +
          u * (field.at(n, jp1) - field.at(n, jm1)) * inv_2dx +
          (field.at(n, jp1) - 2.0 * u + field.at(n, jm1)) * inv_dx2 +
          (field.at(n, jp2) - 4.0 * field.at(n, jp1) + 6.0 * u - 4.0 * field.at(n, jm1) +
           field.at(n, jm2)) *
              inv_dx4;
      out.values[(n - 1) * nx + j] = r;
      acc += std::fabs(r);
    }
  }
  out.mean_abs = acc / static_cast<double>(out.values.size());
  return out;
}

SpectraResult energy_spectrum_1d(const Field2D& field, FieldAxis transform_axis,
                                 FieldAxis average_axis) {
  if (transform_axis == average_axis) {
    throw std::invalid_argument("energy_spectrum_1d: transform and average axes must differ");
  }
  const bool along_cols = transform_axis == FieldAxis::kCols;
  const std::size_t n = along_cols ? field.nx : field.nt;
  const std::size_t lines = along_cols ? field.nt : field.nx;
  const double spacing = along_cols ? field.dx : field.dt;
  const std::size_t half = n / 2;

  SpectraResult out;
  out.power.assign(half + 1, 0.0);

  // O(n^2) DFT per line; grids here are small and no radix constraint applies
  std::vector<double> full_power(n);
  for (std::size_t line = 0; line < lines; ++line) {
    for (std::size_t k = 0; k < n; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        const double u = along_cols ? field.at(line, m) : field.at(m, line);
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                             static_cast<double>(m) / static_cast<double>(n);
        re += u * std::cos(angle);
        im += u * std::sin(angle);
      }
      full_power[k] = (re * re + im * im) / static_cast<double>(n);
    }
    for (std::size_t k = 0; k <= half; ++k) {
      double p = full_power[k];
      if (k != 0 && 2 * k != n) p += full_power[n - k];
      out.power[k] += p;
    }
  }
  for (double& p : out.power) p /= static_cast<double>(lines);

  out.wavenumbers.resize(half + 1);
  out.energy.resize(half + 1);
  const double k_scale = 2.0 * std::numbers::pi / (static_cast<double>(n) * spacing);
  for (std::size_t k = 0; k <= half; ++k) {
    out.wavenumbers[k] = k_scale * static_cast<double>(k);
    out.energy[k] = out.wavenumbers[k] * out.power[k];
  }
  return out;
}

}  // namespace flowcond::metrics
