#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/airy.hpp>
#include <cmath>
#include <complex>
#include <numbers>

#include "shearstab/airy.hpp"
#include "shearstab/asymptotics.hpp"
#include "shearstab/profiles.hpp"

using namespace shearstab;
using cplx = std::complex<double>;

namespace {

// f'(y) from the Cauchy integral over a circle of radius r; the trapezoid
// rule converges geometrically for analytic f.
template <class F>
cplx cauchy_derivative(F f, cplx y, double r = 0.5, int n = 96) {
  cplx sum = 0;
  for (int k = 0; k < n; ++k) {
    const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
    sum += f(y + r * e) / e;
  }
  return sum / (r * double(n));
}

double ai_real(double t) { return boost::math::airy_ai(t); }

}  // namespace

TEST_SUITE("airy") {
  TEST_CASE("values at the origin") {
    const double ai0 = 1.0 / (std::pow(3.0, 2.0 / 3.0) * std::tgamma(2.0 / 3.0));
    const double aip0 = -1.0 / (std::pow(3.0, 1.0 / 3.0) * std::tgamma(1.0 / 3.0));
    CHECK(std::abs(airy(0.0, AiryKind::Ai) - ai0) < 1e-12);
    CHECK(std::abs(airy(0.0, AiryKind::AiPrime) - aip0) < 1e-12);
    // int_0^inf Ai = 1/3 and int_0^inf t Ai(t) dt = -Ai'(0).
    CHECK(std::abs(airy(0.0, AiryKind::Ai1) + 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(airy(0.0, AiryKind::Ai2) + aip0) < 1e-12);
    CHECK(std::abs(tietjens(0.0) - (-aip0) / (-1.0 / 3.0)) < 1e-12);
  }

  TEST_CASE("real axis against an independent implementation") {
    boost::math::quadrature::exp_sinh<double> tail;
    for (double y = -12.0; y <= 12.0; y += 0.75) {
      const double ai = ai_real(y);
      CAPTURE(y);
      CHECK(std::abs(airy(y, AiryKind::Ai).real() - ai) < 1e-11 * std::max(1.0, std::abs(ai)));
      CHECK(std::abs(airy(y, AiryKind::AiPrime).real() - boost::math::airy_ai_prime(y)) <
            1e-11 * std::max(1.0, std::abs(y)));
      if (y < -4.0) continue;  // oscillatory tail integrals lose accuracy in exp_sinh
      const double i1 = -tail.integrate([&](double s) { return ai_real(y + s); });
      // Ai2(y) = -int_y^inf Ai1 = int_0^inf s Ai(y + s) ds.
      const double i2 = tail.integrate([&](double s) { return s * ai_real(y + s); });
      CHECK(std::abs(airy(y, AiryKind::Ai1).real() - i1) < 1e-9 * std::max(1.0, std::abs(i1)));
      CHECK(std::abs(airy(y, AiryKind::Ai2).real() - i2) < 1e-9 * std::max(1.0, std::abs(i2)));
    }
  }

  TEST_CASE("ODE residual and primitive chain in the complex plane") {
    double ode = 0.0, chain1 = 0.0, chain2 = 0.0, prime = 0.0;
    for (double r = 0.0; r <= 6.0; r += 0.5)
      for (double th = -std::numbers::pi; th < std::numbers::pi; th += std::numbers::pi / 8) {
        const cplx y = std::polar(r, th);
        const cplx ai = airy(y, AiryKind::Ai), aip = airy(y, AiryKind::AiPrime);
        const cplx a1 = airy(y, AiryKind::Ai1), a2 = airy(y, AiryKind::Ai2);
        const cplx d_aip = cauchy_derivative([](cplx z) { return airy(z, AiryKind::AiPrime); }, y);
        const cplx d_ai = cauchy_derivative([](cplx z) { return airy(z, AiryKind::Ai); }, y);
        const cplx d_a1 = cauchy_derivative([](cplx z) { return airy(z, AiryKind::Ai1); }, y);
        const cplx d_a2 = cauchy_derivative([](cplx z) { return airy(z, AiryKind::Ai2); }, y);
        const double scale = std::abs(ai) + std::abs(aip) + 1e-300;
        ode = std::max(ode, std::abs(d_aip - y * ai) / scale);
        prime = std::max(prime, std::abs(d_ai - aip) / scale);
        chain1 = std::max(chain1, std::abs(d_a1 - ai) / (std::abs(ai) + std::abs(a1)));
        chain2 = std::max(chain2, std::abs(d_a2 - a1) / (std::abs(a1) + std::abs(a2)));
      }
    MESSAGE("ode " << ode << " prime " << prime << " chain " << chain1 << " " << chain2);
    CHECK(ode < 1e-10);
    CHECK(prime < 1e-10);
    CHECK(chain1 < 1e-8);
    CHECK(chain2 < 1e-8);
  }

  TEST_CASE("jet is consistent") {
    for (cplx y : {cplx(0.3, 0.2), cplx(-2.0, 1.0), cplx(4.0, -3.0), cplx(-7.0, -8.0), cplx(11.0, 2.0)}) {
      const auto j = airy_jet(y);
      CAPTURE(y);
      CHECK(std::abs(j.ai - airy(y, AiryKind::Ai)) <= 1e-12 * std::abs(j.ai));
      CHECK(std::abs(j.aipp - y * j.ai) <= 1e-10 * (std::abs(j.aipp) + std::abs(j.ai)));
    }
  }

  TEST_CASE("Tietjens derivative") {
    for (cplx y : {cplx(1.0, 0.5), cplx(-2.0, -1.5), cplx(-9.0, -6.0), cplx(20.0, 3.0)}) {
      const cplx fd = cauchy_derivative([](cplx z) { return tietjens(z); }, y, 0.2);
      CAPTURE(y);
      CHECK(std::abs(tietjens_derivative(y) - fd) < 1e-8 * std::abs(fd));
    }
  }

  TEST_CASE("Tietjens function along the computed locus") {
    // Arguments actually produced by Y = -z_c / delta at the wall.
    const auto p = ShearProfile::exponential();
    const auto layer = critical_layer(p, 0.05, 1e6, cplx(0.1, 0.0));
    const cplx dir = layer.wall_argument() / std::abs(layer.wall_argument());
    const cplx phase = layer.delta / std::abs(layer.delta);
    CHECK(std::abs(std::arg(dir) + 5.0 * std::numbers::pi / 6.0) < 1e-12);

    int crossings = 0;
    double where = 0.0;
    double prev = (phase * tietjens(0.05 * dir)).imag();
    for (double r = 0.06; r <= 20.0; r += 0.01) {
      const double v = (phase * tietjens(r * dir)).imag();
      if ((v > 0) != (prev > 0)) {
        ++crossings;
        where = r;
      }
      prev = v;
    }
    CHECK(crossings == 1);
    CHECK(where == doctest::Approx(2.3).epsilon(0.05));

    double lo = 1e300, hi = 0.0;
    for (double r = 50.0; r <= 500.0; r *= 1.05) {
      const double m = std::abs(tietjens(r * dir) * std::sqrt(r * dir));
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    CHECK(hi / lo < 1.02);
  }

  TEST_CASE("large arguments stay finite") {
    for (cplx y : {cplx(-300.0, -173.0), cplx(400.0, 10.0), cplx(-50.0, 0.0)}) {
      const cplx t = tietjens(y);
      CHECK(std::isfinite(t.real()));
      CHECK(std::isfinite(t.imag()));
    }
  }
}
