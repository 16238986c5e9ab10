#include "shearstab/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shearstab/errors.hpp"
#include "shearstab/quadrature.hpp"

namespace shearstab {

using cplx = std::complex<double>;

const char* to_string(FjortoftStatus s) noexcept {
  switch (s) {
    case FjortoftStatus::Passed: return "Passed";
    case FjortoftStatus::Failed: return "Failed";
    case FjortoftStatus::NoInflection: return "NoInflection";
  }
  return "Unknown";
}

const char* to_string(Parity p) noexcept {
  switch (p) {
    case Parity::None: return "None";
    case Parity::Even: return "Even";
    case Parity::Odd: return "Odd";
  }
  return "Unknown";
}

namespace {

std::vector<double> scan_grid(const ShearProfile& profile, const CriteriaOptions& opts) {
  const int n = std::max(opts.scan_points, 8);
  const double k = opts.stretch;
  std::vector<double> z(static_cast<std::size_t>(n));
  if (profile.is_channel()) {
    const double h = profile.height();
    for (int i = 0; i < n; ++i) {
      const double s = double(i) / (n - 1);
      z[static_cast<std::size_t>(i)] = 0.5 * h * (1.0 + std::tanh(k * (2.0 * s - 1.0)) / std::tanh(k));
    }
    z.front() = 0.0;
    z.back() = h;
  } else {
    const double zend = profile.z_max();
    for (int i = 0; i < n; ++i) {
      const double s = double(i) / (n - 1);
      z[static_cast<std::size_t>(i)] = zend * (1.0 - std::tanh(k * (1.0 - s)) / std::tanh(k));
    }
    z.front() = 0.0;
    z.back() = zend;
  }
  return z;
}

double bisect_u2(const ShearProfile& profile, double a, double b) {
  double fa = profile.eval(a, 2);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = profile.eval(m, 2);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

CriterionVerdict check_rayleigh(const ShearProfile& profile, const CriteriaOptions& opts) {
  const auto z = scan_grid(profile, opts);
  std::vector<double> u2(z.size());
  double u2max = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    u2[i] = profile.eval(z[i], 2);
    u2max = std::max(u2max, std::abs(u2[i]));
  }
  // Values at roundoff level carry no sign information.
  const double floor = 1e-13 * u2max;

  CriterionVerdict v;
  double min_abs = std::numeric_limits<double>::infinity();
  std::size_t last = z.size();  // last index with a trustworthy sign
  for (std::size_t i = 0; i < z.size(); ++i) {
    min_abs = std::min(min_abs, std::abs(u2[i]));
    if (std::abs(u2[i]) <= floor) continue;
    if (last < z.size() && (u2[i] < 0) != (u2[last] < 0)) {
      const double zc = bisect_u2(profile, z[last], z[i]);
      // Interior only: the walls themselves are not inflection points.
      const double hi = profile.is_channel() ? profile.height() : profile.z_max();
      if (zc > 1e-12 && zc < hi - 1e-12) {
        if (v.inflection_points.empty() || zc - v.inflection_points.back() > 1e-6)
          v.inflection_points.push_back(zc);
      }
    }
    last = i;
  }
  v.rayleigh_passed = !v.inflection_points.empty();
  v.margin = min_abs;
  return v;
}

CriterionVerdict check_fjortoft(const ShearProfile& profile, const CriteriaOptions& opts) {
  CriterionVerdict v = check_rayleigh(profile, opts);
  if (!v.rayleigh_passed) fail(ErrorKind::NoInflection, "profile " + profile.id() + " has no inflection point");
  const auto z = scan_grid(profile, opts);
  std::vector<std::array<double, 2>> uu(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) uu[i] = {profile.eval(z[i], 0), profile.eval(z[i], 2)};

  double best = std::numeric_limits<double>::infinity();
  for (double zc : v.inflection_points) {
    FjortoftPoint p;
    p.z_c = zc;
    const double uc = profile.eval(zc, 0);
    p.margin = std::numeric_limits<double>::infinity();
    double wz = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double q = uu[i][1] * (uu[i][0] - uc);
      if (q < p.margin) {
        p.margin = q;
        wz = z[i];
      }
    }
    p.passed = p.margin < 0.0;
    if (p.passed) p.witness = wz;
    if (p.passed && !v.fjortoft_witness) v.fjortoft_witness = p.witness;
    best = std::min(best, p.margin);
    v.fjortoft_points.push_back(p);
  }
  v.fjortoft_passed = v.fjortoft_witness.has_value();
  v.fjortoft = v.fjortoft_passed ? FjortoftStatus::Passed : FjortoftStatus::Failed;
  v.margin = best;
  return v;
}

CriterionVerdict evaluate_criteria(const ShearProfile& profile, const CriteriaOptions& opts) {
  try {
    return check_fjortoft(profile, opts);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoInflection) throw;
    CriterionVerdict v = check_rayleigh(profile, opts);
    v.fjortoft = FjortoftStatus::NoInflection;
    v.fjortoft_passed = false;
    return v;
  }
}

std::pair<double, double> verify_energy_identities(const ShearProfile& profile, const Eigenpair& pair,
                                                   double alpha) {
  const std::size_t n = pair.grid.size();
  if (n < 3 || pair.phi.size() != n || pair.phi_prime.size() != n)
    fail(ErrorKind::InvalidArgument, "eigenpair grid and samples must have matching sizes >= 3");
  const cplx c = pair.c;
  std::vector<double> kinetic(n), weight(n);
  std::vector<cplx> source(n);
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double z = pair.grid[i];
    const double u = profile.eval(z, 0);
    const double u2 = profile.eval(z, 2);
    const cplx gap = u - c;
    min_gap = std::min(min_gap, std::abs(gap));
    const double p2 = std::norm(pair.phi[i]);
    kinetic[i] = std::norm(pair.phi_prime[i]) + alpha * alpha * p2;
    source[i] = u2 / gap * p2;
    weight[i] = u2 / std::norm(gap) * p2;
  }
  if (min_gap < 1e-8) fail(ErrorKind::SingularDenominator, "U - c nearly vanishes on the grid");

  double norm = simpson<double>(pair.grid, kinetic);
  // Exponential tail beyond the last node: phi ~ phi_end exp(-alpha (Z - Z_end)).
  if (alpha > 0 && !profile.is_channel()) norm += alpha * std::norm(pair.phi.back());
  const cplx s = simpson<cplx>(pair.grid, source);
  const double w = simpson<double>(pair.grid, weight);
  const double r1 = std::abs(norm + s) / norm;
  const double r2 = std::abs(c.imag() * w) / norm;
  return {r1, r2};
}

}  // namespace shearstab
