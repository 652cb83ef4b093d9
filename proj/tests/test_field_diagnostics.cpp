// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>

#include "flowcond/field_diagnostics.hpp"
#include "flowcond/rng.hpp"

using namespace flowcond;
using namespace flowcond::metrics;

namespace {

// independent straightforward-loop stencil oracle, kept deliberately
// separate from the library implementation
std::vector<double> ks_residual_oracle(const Field2D& f) {
  std::vector<double> r((f.nt - 2) * f.nx);
  for (std::size_t n = 1; n + 1 < f.nt; ++n) {
    for (std::size_t j = 0; j < f.nx; ++j) {
      auto u = [&](std::size_t time, long space) {
        long w = space % static_cast<long>(f.nx);
        if (w < 0) w += static_cast<long>(f.nx);
        return f.at(time, static_cast<std::size_t>(w));
      };
      const long js = static_cast<long>(j);
      const double ut = (u(n + 1, js) - u(n - 1, js)) / (2.0 * f.dt);
      const double ux = (u(n, js + 1) - u(n, js - 1)) / (2.0 * f.dx);
      const double uxx = (u(n, js + 1) - 2.0 * u(n, js) + u(n, js - 1)) / (f.dx * f.dx);
      const double uxxxx = (u(n, js + 2) - 4.0 * u(n, js + 1) + 6.0 * u(n, js) -
                            4.0 * u(n, js - 1) + u(n, js - 2)) /
                           (f.dx * f.dx * f.dx * f.dx);
      r[(n - 1) * f.nx + j] = ut + u(n, js) * ux + uxx + uxxxx;
    }
  }
  return r;
}

Field2D random_field(std::size_t nt, std::size_t nx, Rng& rng) {
  Field2D f(nt, nx, 0.2, 0.35);
  fill_standard_normal(f.values, rng);
  return f;
}

}  // namespace

TEST_CASE("field construction guards") {
  CHECK_THROWS_AS(Field2D(4, 8, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Field2D(8, 4, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Field2D(8, 8, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Field2D(8, 8, 0.1, 0.1, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("ks residual vanishes on zero and constant fields") {
  Field2D zero(6, 8, 0.1, 0.2);
  const KsResidualResult rz = ks_residual(zero);
  for (double v : rz.values) CHECK(v == 0.0);
  CHECK(rz.mean_abs == 0.0);

  Field2D constant(6, 8, 0.1, 0.2, std::vector<double>(48, 3.7));
  const KsResidualResult rc = ks_residual(constant);
  for (double v : rc.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ks residual matches the independent stencil oracle on random fields") {
  Rng rng = make_rng(7);
  for (int instance = 0; instance < 10; ++instance) {
    const Field2D f = random_field(6 + rng() % 6, 5 + rng() % 9, rng);
    const KsResidualResult got = ks_residual(f);
    const std::vector<double> want = ks_residual_oracle(f);
    REQUIRE(got.values.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(got.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    double acc = 0.0;
    for (double v : want) acc += std::fabs(v);
    CHECK(got.mean_abs == doctest::Approx(acc / want.size()).epsilon(1e-12));
  }
}

TEST_CASE("ks residual of a stationary sine equals the analytic spatial part") {
  // u(x, t) = sin(2 pi x / L): the time derivative vanishes, so
  // R = u u_x + u_xx + u_xxxx under the same stencils
  const std::size_t nt = 7, nx = 32;
  const double dx = 0.5, dt = 0.1;
  Field2D f(nt, nx, dt, dx);
  for (std::size_t n = 0; n < nt; ++n)
    for (std::size_t j = 0; j < nx; ++j)
      f.at(n, j) = std::sin(2.0 * std::numbers::pi * static_cast<double>(j) /
                            static_cast<double>(nx));

  const KsResidualResult r = ks_residual(f);
  const std::vector<double> oracle = ks_residual_oracle(f);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    CHECK(r.values[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  }
  // stationary: every interior time row is identical
  for (std::size_t n = 1; n < r.nt; ++n)
    for (std::size_t j = 0; j < nx; ++j)
      CHECK(r.values[n * nx + j] == doctest::Approx(r.values[j]).epsilon(1e-12));
}

TEST_CASE("ks residual is translation-equivariant in x") {
  Rng rng = make_rng(11);
  const Field2D f = random_field(6, 12, rng);
  const std::size_t shift = 5;
  Field2D shifted(f.nt, f.nx, f.dt, f.dx);
  for (std::size_t n = 0; n < f.nt; ++n)
    for (std::size_t j = 0; j < f.nx; ++j) shifted.at(n, (j + shift) % f.nx) = f.at(n, j);

  const KsResidualResult a = ks_residual(f);
  const KsResidualResult b = ks_residual(shifted);
  for (std::size_t n = 0; n < a.nt; ++n)
    for (std::size_t j = 0; j < f.nx; ++j)
      CHECK(b.values[n * f.nx + (j + shift) % f.nx] ==
            doctest::Approx(a.values[n * f.nx + j]).epsilon(1e-12));
}

TEST_CASE("spectrum of the zero field is zero") {
  Field2D zero(5, 16, 0.1, 0.25);
  const SpectraResult s = energy_spectrum_1d(zero, FieldAxis::kCols, FieldAxis::kRows);
  for (double e : s.energy) CHECK(e == 0.0);
  CHECK(s.energy.size() == 16 / 2 + 1);
}

TEST_CASE("pure tone concentrates its power at mode 3") {
  const std::size_t nx = 64;
  Field2D f(5, nx, 0.1, 0.25);
  for (std::size_t n = 0; n < f.nt; ++n)
    for (std::size_t j = 0; j < nx; ++j)
      f.at(n, j) = 2.5 * std::sin(2.0 * std::numbers::pi * 3.0 * static_cast<double>(j) /
                                  static_cast<double>(nx));

  const SpectraResult s = energy_spectrum_1d(f, FieldAxis::kCols, FieldAxis::kRows);
  double total = 0.0;
  for (double p : s.power) total += p;
  CHECK(s.power[3] / total > 0.999);
  // premultiplication keeps the concentration and scales by k
  CHECK(s.energy[3] == doctest::Approx(s.wavenumbers[3] * s.power[3]));
}

TEST_CASE("one-sided power satisfies Parseval") {
  Rng rng = make_rng(13);
  const std::size_t nx = 48;
  Field2D f(5, nx, 0.1, 0.2);
  // identical rows so the line average equals a single-row transform
  std::vector<double> row(nx);
  fill_standard_normal(row, rng);
  for (std::size_t n = 0; n < f.nt; ++n)
    for (std::size_t j = 0; j < nx; ++j) f.at(n, j) = row[j];

  const SpectraResult s = energy_spectrum_1d(f, FieldAxis::kCols, FieldAxis::kRows);
  double sum_power = 0.0;
  for (double p : s.power) sum_power += p;
  double sum_sq = 0.0;
  for (double u : row) sum_sq += u * u;
  CHECK(sum_power == doctest::Approx(sum_sq).epsilon(1e-10));
}

TEST_CASE("transform along rows mirrors the column path") {
  Rng rng = make_rng(17);
  Field2D f = random_field(8, 8, rng);
  // transpose manually and compare the two axis choices
  Field2D ft(8, 8, f.dx, f.dt);
  for (std::size_t n = 0; n < 8; ++n)
    for (std::size_t j = 0; j < 8; ++j) ft.at(j, n) = f.at(n, j);

  const SpectraResult a = energy_spectrum_1d(f, FieldAxis::kRows, FieldAxis::kCols);
  const SpectraResult b = energy_spectrum_1d(ft, FieldAxis::kCols, FieldAxis::kRows);
  REQUIRE(a.power.size() == b.power.size());
  for (std::size_t k = 0; k < a.power.size(); ++k) {
    CHECK(a.power[k] == doctest::Approx(b.power[k]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(energy_spectrum_1d(f, FieldAxis::kRows, FieldAxis::kRows),
                  std::invalid_argument);
}
