#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <thread>

#include "shearstab/errors.hpp"
#include "shearstab/marginal.hpp"

using namespace shearstab;
using cplx = std::complex<double>;

namespace {

void run_threaded(std::vector<std::function<void()>>& tasks) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i)
    threads.emplace_back([&, i] {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TEST_SUITE("marginal") {
  TEST_CASE("power-law fit recovers exact data") {
    std::vector<std::pair<double, double>> rows;
    for (double r = 1e5; r <= 1e9; r *= std::sqrt(10.0)) rows.emplace_back(r, 3.0 * std::pow(r, -0.3));
    const auto f = fit_powerlaw(rows);
    CHECK(f.exponent == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(f.prefactor == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.used == static_cast<int>(rows.size()));
  }

  TEST_CASE("power-law fit under multiplicative noise") {
    for (unsigned seed = 0; seed < 100; ++seed) {
      std::mt19937 gen(seed);
      std::normal_distribution<double> noise(0.0, 0.01);
      std::vector<std::pair<double, double>> rows;
      for (int k = 0; k <= 16; ++k) {
        const double r = std::pow(10.0, 5.0 + k / 4.0);
        rows.emplace_back(r, 0.7 * std::pow(r, -1.0 / 6.0) * std::exp(noise(gen)));
      }
      CAPTURE(seed);
      CHECK(std::abs(fit_powerlaw(rows).exponent + 1.0 / 6.0) < 0.01);
    }
  }

  TEST_CASE("power-law fit input errors") {
    try {
      fit_powerlaw({{1e5, 0.1}, {1e6, 0.05}});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientData);
    }
    try {
      fit_powerlaw({{1e5, 0.1}, {1e5, 0.05}, {1e5, 0.07}});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientData);
    }
    CHECK_THROWS_AS(fit_powerlaw({{1e5, 0.1}, {1e6, -0.05}, {1e7, 0.07}}), Error);
  }

  TEST_CASE("growth at single points") {
    const auto p = ShearProfile::exponential();
    const MarginalOptions o;
    CHECK(growth_at(p, SpectralParams::scaled(1.0, 0.21, 1e6), o).imag() > 0.0);
    CHECK(growth_at(p, SpectralParams::scaled(0.6, 0.25, 1e6), o).imag() < 0.0);
    const cplx a = growth_at(p, SpectralParams::scaled(2.0, 0.25, 1e7), o);
    const cplx b = growth_at(p, SpectralParams::scaled(2.0, 0.25, 1e7), o);
    CHECK(a == b);
  }

  TEST_CASE("traced band on the half-line") {
    const auto p = ShearProfile::exponential();
    MarginalOptions o;
    const auto curve = trace_neutral(p, {1e5, 1e6}, o);
    REQUIRE(curve.rows.size() == 2);
    std::mt19937 gen(7);
    for (const auto& row : curve.rows) {
      CAPTURE(row.reynolds);
      REQUIRE(!row.empty);
      CHECK(row.alpha_low < row.alpha_peak);
      CHECK(row.alpha_peak < row.alpha_up);
      CHECK(row.growth_peak > 0.0);
      CHECK(std::abs(row.c_low.imag()) < 1e-6 * std::abs(row.c_low));
      CHECK(std::abs(row.c_up.imag()) < 1e-6 * std::abs(row.c_up));
      // Walk along the branch from the peak mode.
      const BranchPoint peak{row.alpha_peak, row.reynolds, row.c_peak};
      std::uniform_real_distribution<double> u(std::log(row.alpha_low), std::log(row.alpha_up));
      for (int k = 0; k < 5; ++k) {
        const double a = std::exp(u(gen));
        const double margin = std::min(a / row.alpha_low, row.alpha_up / a);
        if (margin < 1.02) continue;
        CAPTURE(a);
        CHECK(continue_branch(p, peak, a, row.reynolds, o).c.imag() > 0.0);
      }
      CHECK(continue_branch(p, peak, 0.95 * row.alpha_low, row.reynolds, o).c.imag() < 0.0);
      CHECK(continue_branch(p, peak, 1.05 * row.alpha_up, row.reynolds, o).c.imag() < 0.0);
    }
    const auto fig = figure_table(curve);
    REQUIRE(fig.size() == 2);
    CHECK(fig[0][0] == doctest::Approx(std::pow(1e5, 0.2)));
    CHECK(fig[1][1] == doctest::Approx(curve.rows[1].alpha_low * curve.rows[1].alpha_low));
  }

  TEST_CASE("parallel rows match sequential rows") {
    const auto p = ShearProfile::channel_parabolic();
    MarginalOptions o;
    const std::vector<double> rs{1e4, 2e4, 4e4};
    const auto a = trace_neutral(p, rs, o);
    o.runner = run_threaded;
    const auto b = trace_neutral(p, rs, o);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].alpha_low == b.rows[i].alpha_low);
      CHECK(a.rows[i].alpha_up == b.rows[i].alpha_up);
      CHECK(a.rows[i].growth_peak == b.rows[i].growth_peak);
    }
  }

  TEST_CASE("stable rows are reported empty") {
    const auto p = ShearProfile::channel_parabolic();
    const auto curve = trace_neutral(p, {3000.0, 1e4}, MarginalOptions{});
    REQUIRE(curve.rows.size() == 2);
    CHECK(curve.rows[0].empty);
    CHECK(!curve.rows[1].empty);
  }

  TEST_CASE("critical Reynolds number of plane Poiseuille flow") {
    const auto p = ShearProfile::channel_parabolic();
    const auto cp = locate_critical(p, 3000.0, 1e4, MarginalOptions{}, 1e-5);
    // Classical values: R_c = 5772.22, alpha_c = 1.02056, c_c = 0.264.
    CHECK(cp.reynolds == doctest::Approx(5772.22).epsilon(1e-4));
    CHECK(cp.alpha == doctest::Approx(1.02056).epsilon(2e-3));
    CHECK(cp.c.real() == doctest::Approx(0.26400).epsilon(1e-3));
  }
}
