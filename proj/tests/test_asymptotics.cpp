#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "shearstab/airy.hpp"
#include "shearstab/asymptotics.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/orr_sommerfeld.hpp"
#include "shearstab/rayleigh.hpp"

using namespace shearstab;
using cplx = std::complex<double>;

TEST_SUITE("asymptotics") {
  TEST_CASE("critical layer width") {
    const auto p = ShearProfile::exponential();
    for (double alpha : {0.01, 0.1}) {
      for (double r : {1e5, 1e8}) {
        const auto l = critical_layer(p, alpha, r, cplx(0.2, 0.0));
        const double up = p.eval(l.z_c.real(), 1);
        CHECK(std::abs(std::pow(std::abs(l.delta), 3) * alpha * r * up - 1.0) < 1e-12);
        CHECK(std::abs(std::arg(l.delta) + std::numbers::pi / 6) < 1e-12);
        CHECK(std::abs(l.map(0.0) - l.wall_argument()) < 1e-12 * std::abs(l.wall_argument()));
      }
    }
  }

  TEST_CASE("prediction satisfies the dispersion relation") {
    const auto p = ShearProfile::exponential();
    const auto prm = SpectralParams::scaled(2.0, 0.25, 1e7);
    const auto pr = predict_lower_branch(p, prm);
    CHECK(pr.regime == Regime::LowerBranch);
    CHECK(std::abs(pr.dispersion_residual) < 1e-10);
    // Rebuild both sides from the defining ingredients.
    const auto [phi, dphi] = decaying_solution_phi1alpha(p, prm.alpha, pr.c_pred);
    const cplx zc = find_complex_critical_point(p, pr.c_pred);
    CHECK(std::abs(p.eval(zc) - pr.c_pred) < 1e-12);
    const cplx delta = std::pow(cplx(0.0, prm.alpha * prm.reynolds) * p.eval(zc, 1), -1.0 / 3.0);
    const cplx rhs = delta * tietjens(-zc / delta);
    CHECK(std::abs(phi / dphi - rhs) < 1e-9 * std::abs(rhs));
    CHECK(!pr.outside_asymptotic_range);
    // |U0 - c| = O(alpha)
    CHECK(std::abs(pr.c_pred - p.wall_value()) < 3.0 * prm.alpha);
  }

  TEST_CASE("critical point moves like A^(4/3) in layer units") {
    const auto p = ShearProfile::exponential();
    std::vector<double> q;
    for (double a : {2.0, 4.0, 8.0}) {
      const auto pr = predict_lower_branch(p, SpectralParams::scaled(a, 0.25, 1e12));
      q.push_back(std::abs(pr.z_c / pr.delta) / std::pow(a, 4.0 / 3.0));
    }
    CHECK(q[2] / q[0] == doctest::Approx(1.0).epsilon(0.2));
  }

  TEST_CASE("threshold amplitude") {
    const auto p = ShearProfile::exponential();
    const double a5 = find_A1c(p, 1e5), a6 = find_A1c(p, 1e6), a7 = find_A1c(p, 1e7), a8 = find_A1c(p, 1e8);
    CHECK(std::abs(a7 - a6) / a6 < std::abs(a6 - a5) / a5);
    CHECK(std::abs(a8 - a7) / a7 < std::abs(a7 - a6) / a6);
    CHECK(std::abs(a8 - a7) / a7 < 0.1);
    for (auto [r, a] : {std::pair{1e6, a6}, std::pair{1e8, a8}}) {
      CAPTURE(r);
      CHECK(predict_lower_branch(p, SpectralParams::scaled(a / 2, 0.25, r)).c_pred.imag() < 0.0);
      CHECK(predict_lower_branch(p, SpectralParams::scaled(2 * a, 0.25, r)).c_pred.imag() > 0.0);
      CHECK(std::abs(predict_lower_branch(p, SpectralParams::scaled(a, 0.25, r)).c_pred.imag()) < 1e-8);
    }
  }

  TEST_CASE("prediction seeds the full solver") {
    const auto p = ShearProfile::exponential();
    const auto prm = SpectralParams::scaled(2.0, 0.25, 1e6);
    const auto pr = predict_lower_branch(p, prm);
    OSOptions o;
    o.reconstruct = false;
    const cplx c = solve_os(p, prm, pr.c_pred, o).c;
    CHECK(std::abs(c - pr.c_pred) < 0.2 * std::abs(c));
  }

  TEST_CASE("predictor errors") {
    const auto p = ShearProfile::exponential();
    CHECK_THROWS_AS(predict_lower_branch(p, SpectralParams::fixed(0.1, 1e6)), Error);
    CHECK_THROWS_AS(predict_lower_branch(ShearProfile::channel_parabolic(), SpectralParams::scaled(1.0, 0.25, 1e6)),
                    Error);
    try {
      ThresholdOptions t;
      t.a_lo = 0.3;
      t.a_hi = 0.6;
      find_A1c(p, 1e6, t);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoBracket);
    }
  }

  TEST_CASE("primitives vanish far along the positive axis") {
    CHECK(std::abs(airy(1e3, AiryKind::Ai1)) < 1e-12);
    CHECK(std::abs(airy(1e3, AiryKind::Ai2)) < 1e-12);
    CHECK(!airy_eval(cplx(3.0, 2.0), AiryKind::Ai2).accuracy_loss);
  }
}
