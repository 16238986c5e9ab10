#include "shearstab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "shearstab/airy.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/rayleigh.hpp"

namespace shearstab {

using cplx = std::complex<double>;

const char* to_string(Regime r) noexcept {
  return r == Regime::LowerBranch ? "LowerBranch" : "Interior";
}

namespace {

CriticalLayer layer_at(const ShearProfile& profile, double alpha, double reynolds, cplx c, cplx z_c) {
  CriticalLayer cl;
  cl.z_c = z_c;
  cl.u_prime_c = profile.eval(z_c, 1);
  cl.delta = std::pow(cplx(0.0, alpha * reynolds) * cl.u_prime_c, -1.0 / 3.0);
  (void)c;
  return cl;
}

struct Dispersion {
  cplx value;       // phi/phi' - delta T
  cplx derivative;  // d/dc
  cplx left;
  cplx right;
  CriticalLayer layer;
};

Dispersion dispersion(const ShearProfile& profile, const SpectralParams& params, cplx c, cplx z_guess,
                      InviscidSide side) {
  const double a = params.alpha;
  const cplx z_c = find_complex_critical_point(profile, c, z_guess);
  const CriticalLayer cl = layer_at(profile, a, params.reynolds, c, z_c);

  cplx left, left_c;
  if (side == InviscidSide::Phi1Alpha) {
    const auto r = decaying_solution_phi1alpha_full(profile, a, c);
    if (r.dphi == cplx(0.0)) fail(ErrorKind::SingularDenominator, "phi'(0) vanishes");
    left = r.phi / r.dphi;
    left_c = (r.phi_c * r.dphi - r.phi * r.dphi_c) / (r.dphi * r.dphi);
  } else {
    const double u0 = profile.wall_value(), u0p = profile.wall_shear();
    left = (u0 - c) / u0p;
    left_c = -1.0 / u0p;
  }

  const cplx u2c = profile.eval(z_c, 2);
  const cplx dz = 1.0 / cl.u_prime_c;
  const cplx ddelta = -cl.delta * u2c / (3.0 * cl.u_prime_c) * dz;
  const cplx y = cl.wall_argument();
  const cplx dy = -dz / cl.delta + z_c * ddelta / (cl.delta * cl.delta);
  const cplx t = tietjens(y);
  const cplx tp = tietjens_derivative(y);
  const cplx right = cl.delta * t;
  const cplx right_c = ddelta * t + cl.delta * tp * dy;
  return {left - right, left_c - right_c, left, right, cl};
}

}  // namespace

CriticalLayer critical_layer(const ShearProfile& profile, double alpha, double reynolds, cplx c) {
  return layer_at(profile, alpha, reynolds, c, find_complex_critical_point(profile, c));
}

AsymptoticPrediction predict_lower_branch(const ShearProfile& profile, const SpectralParams& params,
                                          const AsymptoticOptions& opts) {
  params.validate();
  if (!params.scaling) fail(ErrorKind::InvalidArgument, "the lower-branch predictor needs alpha = A R^(-beta)");
  if (profile.is_channel()) fail(ErrorKind::InvalidArgument, "the lower-branch predictor is for half-line profiles");
  const double u0 = profile.wall_value();
  const double u0p = profile.wall_shear();
  if (u0p == 0.0) fail(ErrorKind::InvalidArgument, "wall shear U'(0) must not vanish");
  const double a = params.alpha;
  const double up = profile.u_plus();

  auto size = [](const Dispersion& x) { return std::abs(x.value) / std::max(std::abs(x.left), std::abs(x.right)); };
  // Damped Newton from c; returns the final state and iteration count.
  auto solve = [&](const SpectralParams& sp, cplx c, int& it) {
    const double al = sp.alpha;
    Dispersion d = dispersion(profile, sp, c, (c - u0) / u0p, opts.left);
    for (it = 0; it < opts.max_iterations && size(d) > opts.tol; ++it) {
      if (d.derivative == cplx(0.0)) fail(ErrorKind::NoRoot, "dispersion relation has a stationary point");
      cplx step = -d.value / d.derivative;
      const double cap = 0.25 * std::max(std::abs(c - u0), al);
      if (std::abs(step) > cap) step *= cap / std::abs(step);
      // Halve while the residual grows.
      Dispersion trial;
      bool ok = false;
      for (int k = 0; k < 30; ++k) {
        try {
          trial = dispersion(profile, sp, c + step, d.layer.z_c, opts.left);
          if (size(trial) < size(d) || k == 29) {
            ok = true;
            break;
          }
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::NoRoot) throw;
        }
        step *= 0.5;
      }
      if (!ok) fail(ErrorKind::NoRoot, "dispersion Newton iteration left the admissible region");
      c += step;
      d = trial;
      if (std::abs(step) <= 1e-14 * std::abs(c)) break;  // converged to the noise level
    }
    return std::pair{c, d};
  };
  const double accept = std::max(opts.tol, 1e-10);

  int it = 0;
  auto [c, d] = solve(params, opts.c_guess ? *opts.c_guess : cplx(u0 + a * (up - u0) * (up - u0) / u0p, 0.0), it);
  if (size(d) > accept && !opts.c_guess) {
    // Continuation in A from a quarter of the requested amplitude, where the
    // real initial guess lies closer to the root.
    const Scaling sc = *params.scaling;
    try {
      int k_it = 0;
      cplx ck = cplx(u0 + 0.25 * a * (up - u0) * (up - u0) / u0p, 0.0);
      constexpr int kSteps = 8;
      for (int k = 0; k <= kSteps; ++k) {
        const double amp = sc.A * std::pow(4.0, double(k) / kSteps - 1.0);
        const auto sp = k == kSteps ? params : SpectralParams::scaled(amp, sc.beta, params.reynolds);
        auto [cc, dd] = solve(sp, ck, k_it);
        if (size(dd) > accept) break;
        ck = cc;
        it += k_it;
        if (k == kSteps) {
          c = cc;
          d = dd;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoRoot) throw;
    }
  }
  if (size(d) > accept) {
    std::ostringstream os;
    os << "dispersion relation not solved: residual " << size(d) << " at c = " << c;
    fail(ErrorKind::NoRoot, os.str());
  }

  AsymptoticPrediction p;
  p.c_pred = c;
  p.z_c = d.layer.z_c;
  p.delta = d.layer.delta;
  p.tietjens_arg = d.layer.wall_argument();
  p.dispersion_residual = d.value / std::max(std::abs(d.left), std::abs(d.right));
  p.regime = std::abs(params.scaling->beta - 0.25) < 1e-12 ? Regime::LowerBranch : Regime::Interior;
  p.outside_asymptotic_range = std::abs(p.z_c / p.delta) < 1.0;
  p.iterations = it;
  const cplx expanded = (u0 - c) / u0p + a * (up - u0) * (up - u0) / (u0p * u0p);
  p.expansion_gap = std::abs(d.left - expanded) / std::abs(d.left);
  p.surrogate_error = std::abs(p.delta) * std::abs(tietjens(p.tietjens_arg) -
                                                   std::pow(1.0 + std::abs(p.tietjens_arg), -0.5));
  return p;
}

double find_A1c(const ShearProfile& profile, double reynolds, const ThresholdOptions& opts) {
  auto im_c = [&](double A, std::optional<cplx> guess) {
    AsymptoticOptions o;
    o.c_guess = guess;
    return predict_lower_branch(profile, SpectralParams::scaled(A, 0.25, reynolds), o).c_pred;
  };
  const int n = std::max(opts.scan_points, 3);
  const double la = std::log(opts.a_lo), lb = std::log(opts.a_hi);
  double prev_a = 0.0;
  cplx prev_c;
  bool have = false;
  for (int i = 0; i < n; ++i) {
    const double A = std::exp(la + (lb - la) * i / (n - 1));
    cplx c;
    try {
      c = im_c(A, std::nullopt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoRoot && e.kind() != ErrorKind::NoCriticalPoint) throw;
      have = false;
      continue;
    }
    if (have && (prev_c.imag() < 0) != (c.imag() < 0)) {
      double lo = prev_a, hi = A;
      cplx clo = prev_c;
      while (hi - lo > opts.rel_tol * hi) {
        const double m = std::sqrt(lo * hi);
        const cplx cm = im_c(m, clo);
        if ((cm.imag() < 0) == (clo.imag() < 0)) {
          lo = m;
          clo = cm;
        } else {
          hi = m;
        }
      }
      return std::sqrt(lo * hi);
    }
    prev_a = A;
    prev_c = c;
    have = true;
  }
  std::ostringstream os;
  os << "Im c_pred does not change sign for A in [" << opts.a_lo << ", " << opts.a_hi << "] at R = " << reynolds;
  fail(ErrorKind::NoBracket, os.str());
}

}  // namespace shearstab
