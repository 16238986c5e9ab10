#pragma once

// Adaptive Dormand–Prince 5(4) integrator for small complex linear systems.
//
// The state is a fixed-size array of scalars (std::complex<double>,
// std::complex<long double> or Dual).
// Step-size control looks at primal values only, so a Dual-valued run takes
// exactly the same steps as the plain run and its derivative part is the
// exact derivative of the discrete solution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>

#include "shearstab/dual.hpp"
#include "shearstab/errors.hpp"

namespace shearstab::ode {

struct StepControl {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects |t1 - t0| * 1e-3
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 20'000'000;
  std::size_t error_components = std::numeric_limits<std::size_t>::max();
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

// Real type matching the precision of a state scalar.
template <class T>
struct real_of {
  using type = double;
};
template <>
struct real_of<std::complex<long double>> {
  using type = long double;
};
template <class T>
using real_t = typename real_of<T>::type;

namespace detail {

template <class T, std::size_t N>
double sup_norm(const std::array<T, N>& y, std::size_t count) {
  double m = 0.0;
  for (std::size_t i = 0; i < count; ++i) m = std::max(m, static_cast<double>(std::abs(primal(y[i]))));
  return m;
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1 (either direction).
///
/// `observer(t, y)` runs after every accepted step and may rescale y in
/// place; it must return true when it did, so the FSAL stage is refreshed.
/// Every value in `stops` (strictly between t0 and t1, ordered along the
/// direction of integration) is hit exactly.
template <class T, std::size_t N, class Rhs, class Observer>
Stats integrate(Rhs&& rhs, double t0, double t1, std::array<T, N>& y,
                const StepControl& ctl, Observer&& observer,
                std::span<const double> stops = {}) {
  using State = std::array<T, N>;
  using R = real_t<T>;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats stats;
  if (t0 == t1) return stats;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const std::size_t nerr = std::min(N, ctl.error_components);

  State k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
  rhs(t0, y, k1);
  ++stats.rhs_evals;

  double t = t0;
  double h = ctl.initial_step > 0 ? ctl.initial_step : std::abs(t1 - t0) * 1e-3;
  h = std::min(h, ctl.max_step);
  std::size_t next_stop = 0;
  while (next_stop < stops.size() && (stops[next_stop] - t0) * dir <= 0) ++next_stop;

  auto axpy = [&](const State& base, double hh,
                  std::initializer_list<std::pair<double, const State*>> terms,
                  State& out) {
    for (std::size_t i = 0; i < N; ++i) {
      T acc = base[i];
      for (const auto& [coef, k] : terms)
        if (coef != 0.0) acc += (*k)[i] * R(hh * coef);
      out[i] = acc;
    }
  };

  while ((t1 - t) * dir > 0) {
    if (stats.accepted + stats.rejected > ctl.max_steps) {
      std::ostringstream os;
      os << "step budget exhausted at t = " << t;
      fail(ErrorKind::StiffnessOverflow, os.str());
    }
    double target = t1;
    if (next_stop < stops.size()) target = stops[next_stop];
    bool hits_target = false;
    double hstep = h;
    if ((t + dir * hstep - target) * dir >= 0) {
      hstep = std::abs(target - t);
      hits_target = true;
    }
    const double hs = dir * hstep;

    axpy(y, hs, {{a21, &k1}}, tmp);
    rhs(t + c2 * hs, tmp, k2);
    axpy(y, hs, {{a31, &k1}, {a32, &k2}}, tmp);
    rhs(t + c3 * hs, tmp, k3);
    axpy(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, tmp);
    rhs(t + c4 * hs, tmp, k4);
    axpy(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, tmp);
    rhs(t + c5 * hs, tmp, k5);
    axpy(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, tmp);
    rhs(t + hs, tmp, k6);
    axpy(y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, ynew);
    rhs(t + hs, ynew, k7);
    stats.rhs_evals += 6;

    double errmax = 0.0;
    for (std::size_t i = 0; i < nerr; ++i) {
      const auto e = R(hs) * (R(e1) * primal(k1[i]) + R(e3) * primal(k3[i]) +
                              R(e4) * primal(k4[i]) + R(e5) * primal(k5[i]) +
                              R(e6) * primal(k6[i]) + R(e7) * primal(k7[i]));
      errmax = std::max(errmax, static_cast<double>(std::abs(e)));
    }
    const double scale =
        ctl.atol + ctl.rtol * std::max(detail::sup_norm(y, nerr), detail::sup_norm(ynew, nerr));
    double err = errmax / scale;
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      t = hits_target ? target : t + hs;
      y = ynew;
      k1 = k7;
      ++stats.accepted;
      if (hits_target && next_stop < stops.size() && target != t1) ++next_stop;
      if (observer(t, y)) {
        rhs(t, y, k1);
        ++stats.rhs_evals;
      }
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      const double proposal = hstep * fac;
      // A step shortened to land on a stop does not shrink the next one.
      h = std::min(ctl.max_step, hits_target ? std::max(h, proposal) : proposal);
    } else {
      ++stats.rejected;
      h = hstep * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (h < 1e-15 * std::max(1.0, std::abs(t))) {
        std::ostringstream os;
        os << "step size underflow at t = " << t;
        fail(ErrorKind::StiffnessOverflow, os.str());
      }
    }
  }
  return stats;
}

template <class T, std::size_t N, class Rhs>
Stats integrate(Rhs&& rhs, double t0, double t1, std::array<T, N>& y,
                const StepControl& ctl) {
  return integrate(std::forward<Rhs>(rhs), t0, t1, y, ctl,
                   [](double, std::array<T, N>&) { return false; });
}

}  // namespace shearstab::ode
