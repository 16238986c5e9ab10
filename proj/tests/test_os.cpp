#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "collocation_oracle.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/orr_sommerfeld.hpp"

using namespace shearstab;
using cplx = std::complex<double>;

namespace {

struct Case {
  const char* name;
  ShearProfile profile;
  double alpha, reynolds;
  cplx guess;
  double map;
};

std::vector<Case> cases() {
  return {
      {"exponential a=0.15 R=1e5", ShearProfile::exponential(), 0.15, 1e5, {0.133, 0.0026}, 1.5},
      {"exponential a=0.25 R=1e4", ShearProfile::exponential(), 0.25, 1e4, {0.218, -0.012}, 1.5},
      {"tanh a=0.4 R=1e4", ShearProfile::tanh_inflection(1.0), 0.4, 1e4, {0.357, 0.079}, 3.0},
      {"tanh a=0.4 R=1e5", ShearProfile::tanh_inflection(1.0), 0.4, 1e5, {0.355, 0.081}, 3.0},
  };
}

}  // namespace

TEST_SUITE("orr_sommerfeld") {
  TEST_CASE("eigenpair residuals") {
    for (const auto& k : cases()) {
      CAPTURE(k.name);
      const Eigenpair e = solve_os(k.profile, SpectralParams::fixed(k.alpha, k.reynolds), k.guess);
      CHECK(e.residual < 1e-8);
      CHECK(e.bc_residual < 1e-10);
      CHECK(e.continuity < 1e-8);
      REQUIRE(!e.phi.empty());
      CHECK(std::abs(e.phi.front()) < 1e-10 * std::abs(e.phi[e.phi.size() / 3]) + 1e-300);
    }
  }

  TEST_CASE("tolerance halving leaves the eigenvalue in place") {
    for (const auto& k : cases()) {
      CAPTURE(k.name);
      OSOptions a;
      a.reconstruct = false;
      OSOptions b = a;
      b.rtol /= 2;
      b.atol /= 2;
      const auto p = SpectralParams::fixed(k.alpha, k.reynolds);
      const cplx c1 = solve_os(k.profile, p, k.guess, a).c, c2 = solve_os(k.profile, p, k.guess, b).c;
      CHECK(std::abs(c1 - c2) < 1e-8 * std::abs(c1));
    }
  }

  TEST_CASE("shooting agrees with Chebyshev collocation") {
    for (const auto& k : cases()) {
      CAPTURE(k.name);
      OSOptions o;
      o.reconstruct = false;
      const cplx c = solve_os(k.profile, SpectralParams::fixed(k.alpha, k.reynolds), k.guess, o).c;
      const auto r = oracle::half_line_eigenvalue(k.profile, k.alpha, k.reynolds, k.guess, 160, k.map);
      CHECK(r.separation > 10.0 * std::abs(r.c - c));
      CHECK(std::abs(r.c - c) < 1e-4 * std::abs(c));
    }
  }

  TEST_CASE("channel shooting agrees with Chebyshev collocation") {
    const auto p = ShearProfile::channel_parabolic();
    OSOptions o;
    o.reconstruct = false;
    struct Point {
      double alpha, reynolds;
      cplx guess;
    };
    for (const auto& k : {Point{1.0, 1e4, {0.2375, 0.0037}}, Point{0.5838, 1e6, {0.0801, 0.0052}}}) {
      CAPTURE(k.reynolds);
      const cplx c = solve_os_channel(p, SpectralParams::fixed(k.alpha, k.reynolds), k.guess, Parity::Even, o).c;
      const auto r = oracle::channel_eigenvalue(p, k.alpha, k.reynolds, c, 200);
      CHECK(r.separation > 10.0 * std::abs(r.c - c));
      CHECK(std::abs(r.c - c) < 1e-6 * std::abs(c));
    }
  }

  TEST_CASE("derivative of the dispersion function") {
    const auto p = ShearProfile::exponential();
    const auto prm = SpectralParams::fixed(0.15, 1e5);
    const cplx c0{0.13, 0.004};
    const auto m0 = miss_distance(p, prm, c0);
    // Cauchy integral of the full determinant around c0.
    const double r = 1e-4;
    const int n = 32;
    cplx sum = 0;
    for (int j = 0; j < n; ++j) {
      const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * j / n);
      const auto m = miss_distance(p, prm, c0 + r * e);
      sum += m.value * std::exp(m.log_scale - m0.log_scale) / e;
    }
    const cplx fd = sum / (r * double(n));
    CHECK(std::abs(fd - m0.derivative_c) < 1e-6 * std::abs(m0.derivative_c));
  }

  TEST_CASE("channel dispersion functions are holomorphic") {
    const auto p = ShearProfile::channel_parabolic();
    const auto prm = SpectralParams::fixed(1.0, 1e4);
    const cplx c0{0.24, 0.01};
    for (Parity parity : {Parity::Even, Parity::Odd, Parity::None}) {
      const auto m0 = miss_distance_channel(p, prm, c0, parity);
      const double r = 1e-4;
      const int n = 32;
      cplx sum = 0;
      for (int j = 0; j < n; ++j) {
        const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * j / n);
        const auto m = miss_distance_channel(p, prm, c0 + r * e, parity);
        sum += m.value * std::exp(m.log_scale - m0.log_scale) / e;
      }
      const cplx fd = sum / (r * double(n));
      CHECK(std::abs(fd - m0.derivative_c) < 1e-6 * std::abs(m0.derivative_c));
    }
  }

  TEST_CASE("one zero inside a box around a computed mode") {
    const auto p = ShearProfile::exponential();
    const auto prm = SpectralParams::fixed(0.15, 1e5);
    OSOptions o;
    o.reconstruct = false;
    const cplx c = solve_os(p, prm, {0.133, 0.0026}, o).c;
    const CRect box{c.real() - 0.01, c.real() + 0.01, c.imag() - 0.005, c.imag() + 0.005};
    CHECK(winding_number(p, prm, box, 400, Parity::None, o) == 1);
    const CRect away{c.real() + 0.02, c.real() + 0.04, c.imag() - 0.005, c.imag() + 0.005};
    CHECK(winding_number(p, prm, away, 400, Parity::None, o) == 0);
    const auto zeros = scan_zeros(p, prm, box, 4, Parity::None, o);
    REQUIRE(zeros.size() == 1);
    CHECK(std::abs(zeros[0] - c) < 1e-8);
  }

  TEST_CASE("velocity field of a half-line mode") {
    const auto p = ShearProfile::exponential();
    const auto prm = SpectralParams::fixed(0.15, 1e5);
    const Eigenpair e = solve_os(p, prm, {0.133, 0.0026});
    std::vector<double> xs;
    const double lx = 2.0 * std::numbers::pi / prm.alpha;
    for (int i = 0; i < 64; ++i) xs.push_back(lx * i / 64.0);
    const auto f = reconstruct_velocity(e, prm, 0.0, xs);
    double umax = 0.0;
    for (const auto& row : f.u)
      for (double v : row) umax = std::max(umax, std::abs(v));
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      CHECK(std::abs(f.u[0][ix]) < 1e-8 * umax);
      CHECK(std::abs(f.w[0][ix]) < 1e-8 * umax);
    }
    // du/dx from the normal-mode factor i alpha, dw/dz by central differences.
    double worst = 0.0;
    for (std::size_t iz = 1; iz + 1 < f.z.size(); ++iz) {
      const double h0 = f.z[iz] - f.z[iz - 1], h1 = f.z[iz + 1] - f.z[iz];
      for (std::size_t ix = 0; ix < xs.size(); ix += 8) {
        const std::size_t xp = (ix + 1) % xs.size(), xm = (ix + xs.size() - 1) % xs.size();
        const double dudx = (f.u[iz][xp] - f.u[iz][xm]) / (2.0 * lx / 64.0);
        const double dwdz = (f.w[iz + 1][ix] * h0 * h0 - f.w[iz - 1][ix] * h1 * h1 -
                             f.w[iz][ix] * (h0 * h0 - h1 * h1)) /
                            (h0 * h1 * (h0 + h1));
        worst = std::max(worst, std::abs(dudx + dwdz));
      }
    }
    // Second-order differences in x over 64 samples per wavelength.
    CHECK(worst < 5e-3 * umax * prm.alpha);
  }

  TEST_CASE("channel mode parity") {
    const auto p = ShearProfile::channel_parabolic();
    const auto prm = SpectralParams::fixed(1.0, 1e4);
    const Eigenpair e = solve_os_channel(p, prm, {0.2375, 0.0037}, Parity::Even);
    // Reference value for plane Poiseuille flow at alpha = 1, R = 1e4.
    CHECK(std::abs(e.c - cplx(0.23752649, 0.00373967)) < 1e-7);
    CHECK(e.symmetry_residual < 1e-6);
    CHECK(e.residual < 1e-8);
    CHECK(e.bc_residual < 1e-10);

    std::vector<double> xs{0.0, 0.7, 1.9, 3.1};
    const auto f = reconstruct_velocity(e, prm, 0.0, xs);
    const std::size_t n = f.z.size();
    double scale = 0.0, odd = 0.0, even = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(f.z[i] + f.z[n - 1 - i] - 2.0) < 1e-12);
      for (std::size_t ix = 0; ix < xs.size(); ++ix) {
        scale = std::max({scale, std::abs(f.u[i][ix]), std::abs(f.w[i][ix])});
        odd = std::max(odd, std::abs(f.u[i][ix] + f.u[n - 1 - i][ix]));
        even = std::max(even, std::abs(f.w[i][ix] - f.w[n - 1 - i][ix]));
      }
    }
    CHECK(odd < 1e-6 * scale);
    CHECK(even < 1e-6 * scale);

    // Without the symmetry reduction the same mode comes out of the full problem.
    OSOptions o;
    o.reconstruct = false;
    const cplx full = solve_os_channel(p, prm, {0.2375, 0.0037}, Parity::None, o).c;
    CHECK(std::abs(full - e.c) < 1e-8);
  }

  TEST_CASE("invalid input") {
    const auto p = ShearProfile::exponential();
    CHECK_THROWS_AS(solve_os(p, SpectralParams::fixed(-0.1, 1e5), {0.1, 0.0}), Error);
    CHECK_THROWS_AS(solve_os(p, SpectralParams::fixed(0.1, 0.0), {0.1, 0.0}), Error);
    CHECK_THROWS_AS(solve_os(ShearProfile::channel_parabolic(), SpectralParams::fixed(1.0, 1e4), {0.2, 0.0}), Error);
  }
}
