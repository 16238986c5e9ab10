#include <doctest.h>

#include <cmath>
#include <array>
#include <complex>
#include <numbers>

#include "shearstab/criteria.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/rayleigh.hpp"

using namespace shearstab;
using cplx = std::complex<double>;

namespace {

// Rayleigh equation phi'' = (alpha^2 + U''/(U - c)) phi as a first-order
// system, advanced by classical RK4 along a complex path z(s).
template <class Path, class DPath>
std::array<cplx, 2> rk4_rayleigh(const ShearProfile& p, double alpha, cplx c, std::array<cplx, 2> y, Path z,
                                 DPath dz, double s0, double s1, int steps) {
  auto f = [&](double s, const std::array<cplx, 2>& v) {
    const cplx zz = z(s);
    const cplx q = alpha * alpha + p.eval(zz, 2) / (p.eval(zz, 0) - c);
    const cplx d = dz(s);
    return std::array<cplx, 2>{d * v[1], d * q * v[0]};
  };
  const double h = (s1 - s0) / steps;
  double s = s0;
  for (int k = 0; k < steps; ++k, s += h) {
    const auto k1 = f(s, y);
    const auto k2 = f(s + h / 2, {y[0] + h / 2 * k1[0], y[1] + h / 2 * k1[1]});
    const auto k3 = f(s + h / 2, {y[0] + h / 2 * k2[0], y[1] + h / 2 * k2[1]});
    const auto k4 = f(s + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
    for (int i = 0; i < 2; ++i) y[i] += h / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

}  // namespace

TEST_SUITE("rayleigh") {
  TEST_CASE("critical points") {
    const auto e = ShearProfile::exponential();
    CHECK(std::abs(find_critical_point(e, 0.5) - std::log(2.0)) < 1e-12);
    try {
      find_critical_point(e, 1.5);
      FAIL("no error");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::NoCriticalPoint);
    }
    // Bisection oracle on the monotone erf profile.
    const auto h = ShearProfile::erf_heat(1.0);
    double lo = 0.0, hi = 20.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (h.eval(mid) < 0.5 ? lo : hi) = mid;
    }
    CHECK(std::abs(find_critical_point(h, 0.5) - 0.5 * (lo + hi)) < 1e-12);
  }

  TEST_CASE("unstable inviscid mode of the tanh profile") {
    const auto p = ShearProfile::tanh_inflection(1.0);
    const Eigenpair e = solve_rayleigh(p, 0.4, {0.35, 0.08});
    CHECK(e.c.imag() > 0.0);
    CHECK(check_rayleigh(p).rayleigh_passed);
    const auto [r1, r2] = verify_energy_identities(p, e, 0.4);
    CHECK(r1 < 1e-6);
    CHECK(r2 < 1e-6);
    CHECK(std::abs(e.phi.front()) < 1e-10 * std::abs(e.phi_prime.front()));
  }

  TEST_CASE("energy identities across the unstable band") {
    const auto p = ShearProfile::tanh_inflection(1.0);
    cplx guess{0.35, 0.08};
    for (double alpha : {0.3, 0.4, 0.5, 0.6}) {
      const Eigenpair e = solve_rayleigh(p, alpha, guess);
      guess = e.c;
      if (e.c.imag() <= 1e-4) continue;
      const auto [r1, r2] = verify_energy_identities(p, e, alpha);
      CAPTURE(alpha);
      CHECK(r1 < 1e-6);
      CHECK(r2 < 1e-6);
    }
  }

  TEST_CASE("no unstable inviscid mode without an inflection point") {
    const auto p = ShearProfile::exponential();
    for (double alpha : {0.2, 0.5, 0.8})
      for (cplx g : {cplx(0.3, 0.05), cplx(0.6, 0.2)}) {
        try {
          solve_rayleigh(p, alpha, g);
          FAIL("converged to an unstable mode");
        } catch (const Error& err) {
          CHECK((err.kind() == ErrorKind::NoConvergence || err.kind() == ErrorKind::SpectralCollision));
        }
      }
  }

  TEST_CASE("decaying solution at alpha = 0 is U - c") {
    const auto p = ShearProfile::exponential();
    const cplx c{0.4, 0.1};
    const auto [phi, dphi] = decaying_solution_phi1alpha(p, 0.0, c);
    CHECK(std::abs(phi - (p.wall_value() - c)) < 1e-14);
    CHECK(std::abs(dphi - p.wall_shear()) < 1e-14);
  }

  TEST_CASE("first-order correction of the wall ratio") {
    // phi/phi' at the wall = (U0 - c)/U0' + alpha (u_plus - c)^2 / U0'^2 + O(alpha^2)
    const auto p = ShearProfile::exponential();
    const cplx c{0.3, 0.05};
    const double u0 = p.wall_value(), up = p.u_plus(), s0 = p.wall_shear();
    const cplx target = (up - c) * (up - c) / (s0 * s0);
    auto g = [&](double a) {
      const auto [phi, dphi] = decaying_solution_phi1alpha(p, a, c);
      return (phi / dphi - (u0 - c) / s0) / a;
    };
    const cplx g1 = g(0.002), g2 = g(0.001);
    const cplx rich = 2.0 * g2 - g1;
    CHECK(std::abs(g2 - target) < std::abs(g1 - target));
    CHECK(std::abs(rich - target) < 0.05 * std::abs(g2 - target));
  }

  TEST_CASE("decaying solution agrees with an independent re-integration") {
    const auto p = ShearProfile::exponential();
    const double alpha = 0.3;
    const cplx c{0.4, 0.1};
    const double z0 = 30.0;
    const cplx a = (p.u_plus() - c) * std::exp(-alpha * z0);
    const auto y = rk4_rayleigh(
        p, alpha, c, {a, -alpha * a}, [&](double s) { return cplx(s); }, [](double) { return cplx(1.0); }, z0, 0.0,
        30000);
    const auto [phi, dphi] = decaying_solution_phi1alpha(p, alpha, c);
    CHECK(std::abs(y[0] / y[1] - phi / dphi) < 1e-8 * std::abs(phi / dphi));
  }

  TEST_CASE("Frobenius pair") {
    const auto p = ShearProfile::exponential();
    const cplx c{0.5, 1e-3};
    const double alpha = 0.3;
    const auto f = frobenius_pair(p, c, alpha, 30);
    const cplx zc = f.z_c;
    const cplx k = p.eval(zc, 2) / p.eval(zc, 1);
    CHECK(std::abs(f.P2_coeffs.at(0)) > 0.0);
    CHECK(std::abs(f.P2_coeffs.at(0) - k) < 1e-10 * std::abs(k));

    // Series residual on the annulus.
    double worst = 0.0;
    for (double r = 1e-3; r <= 0.5 * f.radius; r *= 1.7)
      for (double th = -3.0; th <= 3.0; th += 0.5) {
        const cplx z = zc + std::polar(r, th);
        const auto s = f.singular(z);
        const cplx q = alpha * alpha + p.eval(z, 2) / (p.eval(z, 0) - c);
        worst = std::max(worst, std::abs(s[2] - q * s[0]) / (std::abs(s[2]) + std::abs(q * s[0])));
      }
    CHECK(worst < 1e-8);

    // phi_2'' grows like K / (Z - z_c).
    const cplx z2 = zc + cplx(0.0, -1e-6);
    CHECK(std::abs(f.singular(z2)[2] * (z2 - zc) - k) < 1e-3 * std::abs(k));
  }

  TEST_CASE("Frobenius series agrees with direct integration below the critical point") {
    const auto p = ShearProfile::exponential();
    const cplx c{0.5, 1e-3};
    const double alpha = 0.3;
    const auto f = frobenius_pair(p, c, alpha, 30);
    const double r = 0.4 * f.radius;
    // Arc through the lower half plane, away from the cut above z_c.
    const double t0 = -std::numbers::pi + 0.3, t1 = -0.3;
    auto z = [&](double t) { return f.z_c + std::polar(r, t); };
    auto dz = [&](double t) { return cplx(0.0, 1.0) * std::polar(r, t); };
    for (int which = 0; which < 2; ++which) {
      const auto s0 = which ? f.singular(z(t0)) : f.regular(z(t0));
      const auto s1 = which ? f.singular(z(t1)) : f.regular(z(t1));
      const auto y = rk4_rayleigh(p, alpha, c, {s0[0], s0[1]}, z, dz, t0, t1, 4000);
      CHECK(std::abs(y[0] - s1[0]) < 1e-6 * (std::abs(s1[0]) + std::abs(s1[1]) * r));
      CHECK(std::abs(y[1] - s1[1]) < 1e-6 * (std::abs(s1[1]) + std::abs(s1[0]) / r));
    }
  }

  TEST_CASE("inflection at the critical point removes the log term") {
    const auto p = ShearProfile::tanh_inflection(1.0);
    const auto f = frobenius_pair(p, cplx(p.eval(1.0), 0.0), 0.4, 20);
    CHECK(std::abs(f.P2_coeffs.at(0)) < 1e-10);
  }

  TEST_CASE("Frobenius errors") {
    try {
      frobenius_pair(ShearProfile::exponential(), cplx(1.5, 0.0), 0.3);
      FAIL("no error");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::NoCriticalPoint);
    }
    try {
      frobenius_pair(ShearProfile::exponential(), cplx(-0.2, 0.0), 0.3);
      FAIL("no error");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::NoCriticalPoint);
    }
  }
}
