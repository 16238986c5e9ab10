#include "shearstab/rayleigh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "shearstab/dual.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/hermite.hpp"
#include "shearstab/ode.hpp"

namespace shearstab {

namespace {

constexpr double kPi = std::numbers::pi;
// Critical points closer than this to the real axis (or below it) are
// bypassed by a semicircle under them.
constexpr double kDetourBand = 0.02;

// Straight segment or circular arc, parametrized by arc length s in [0, len].
struct Segment {
  bool arc = false;
  cplx a, b;             // straight: endpoints
  cplx center;           // arc
  double radius = 0.0;
  double theta0 = 0.0;
  double dtheta = 0.0;   // signed sweep
  double len = 0.0;

  cplx z(double s) const {
    if (!arc) return a + (b - a) * (s / len);
    return center + radius * std::polar(1.0, theta0 + dtheta * s / len);
  }
  cplx dz(double s) const {
    if (!arc) return (b - a) / len;
    const double th = theta0 + dtheta * s / len;
    return cplx(0.0, 1.0) * radius * std::polar(1.0, th) * (dtheta / len);
  }
};

Segment line(cplx a, cplx b) {
  Segment s;
  s.a = a;
  s.b = b;
  s.len = std::abs(b - a);
  return s;
}

// Path from z_max to 0 on the real axis, with a lower semicircle around each
// listed critical abscissa.
std::vector<Segment> build_path(double z_max, std::vector<std::pair<double, double>> detours) {
  std::sort(detours.begin(), detours.end(), [](auto& l, auto& r) { return l.first > r.first; });
  std::vector<Segment> path;
  cplx here = z_max;
  for (auto [xc, r] : detours) {
    const double right = xc + r;
    const double left = xc - r;
    if (here.real() > right) path.push_back(line(here, right));
    Segment arc;
    arc.arc = true;
    arc.center = xc;
    arc.radius = r;
    arc.theta0 = 0.0;
    arc.dtheta = -kPi;  // through xc - i r
    arc.len = kPi * r;
    path.push_back(arc);
    here = left;
  }
  if (std::abs(here) > 0.0) path.push_back(line(here, 0.0));
  return path;
}

std::vector<Segment> rayleigh_path(const ShearProfile& profile, cplx c) {
  const double z_max = profile.z_max();
  if (profile.is_channel()) fail(ErrorKind::UnsupportedKind, "the Rayleigh solver works on the half-line");
  std::vector<std::pair<double, double>> detours;
  std::vector<double> reals;
  try {
    reals = find_critical_points(profile, c.real());
  } catch (const Error&) {
  }
  if (reals.empty() && c.imag() > 0) return build_path(z_max, {});
  for (double xr : reals) {
    if (c.imag() > kDetourBand * profile.eval(xr, 1)) continue;  // far above the axis
    if (!profile.supports_complex()) {
      if (c.imag() > 0) continue;  // the real line still passes below the singularity
      fail(ErrorKind::SingularPath, "tabulated profile: contour cannot leave the real axis");
    }
    const cplx zc = find_complex_critical_point(profile, c, xr);
    if (zc.imag() > kDetourBand) continue;
    const double u1 = std::abs(profile.eval(zc, 1));
    double r = std::max(10.0 * std::abs(c.imag()) / u1, 1e-3);
    r = std::max(r, 2.0 * std::abs(zc.imag()));
    detours.emplace_back(zc.real(), r);
  }
  if (reals.empty() && c.imag() <= 0) {
    if (!profile.supports_complex())
      fail(ErrorKind::SingularPath, "tabulated profile: contour cannot leave the real axis");
    // Re c outside the range of U: the root sits off the axis near the wall.
    const double u0 = profile.eval(0.0, 0);
    const double u1 = profile.eval(0.0, 1);
    cplx zc;
    try {
      zc = find_complex_critical_point(profile, c, (c - u0) / u1);
    } catch (const Error&) {
      return build_path(z_max, {});
    }
    if (zc.imag() <= kDetourBand && zc.real() > -1.0 && zc.real() < z_max) {
      double r = std::max(10.0 * std::abs(c.imag()) / std::abs(profile.eval(zc, 1)), 1e-3);
      r = std::max(r, 2.0 * std::abs(zc.imag()));
      detours.emplace_back(zc.real(), r);
    }
  }
  return build_path(z_max, detours);
}

template <class C>
struct RayleighRhs {
  const ShearProfile& profile;
  double alpha;
  C c;
  const Segment* seg = nullptr;

  void operator()(double s, const std::array<C, 2>& y, std::array<C, 2>& dy) const {
    const cplx z = seg->z(s);
    const cplx dz = seg->dz(s);
    const cplx u = profile.supports_complex() ? profile.eval(z, 0) : cplx(profile.eval(z.real(), 0));
    const cplx u2 = profile.supports_complex() ? profile.eval(z, 2) : cplx(profile.eval(z.real(), 2));
    const C k2 = alpha * alpha + u2 / (u - c);
    dy[0] = y[1] * dz;
    dy[1] = k2 * y[0] * dz;
  }
};

ode::StepControl rayleigh_control(double rtol) {
  ode::StepControl ctl;
  ctl.rtol = rtol;
  ctl.atol = 1e-300;
  ctl.initial_step = 1e-3;
  ctl.max_step = 0.5;
  return ctl;
}

struct PathResult {
  std::array<Dual, 2> y;
  double scale;
};

// Decaying solution, scaled by exp(alpha z_max), carried from z_max to 0.
PathResult integrate_path(const ShearProfile& profile, double alpha, cplx c, double rtol) {
  const auto path = rayleigh_path(profile, c);
  const double z_max = profile.z_max();
  const Dual cd = Dual::variable(c);
  const double u = profile.eval(z_max, 0);
  const double u1 = profile.eval(z_max, 1);
  std::array<Dual, 2> y{Dual(u) - cd, Dual(u1) - alpha * (Dual(u) - cd)};
  double scale = std::abs(y[0].v);
  RayleighRhs<Dual> rhs{profile, alpha, cd};
  const auto ctl = rayleigh_control(rtol);
  for (const auto& seg : path) {
    rhs.seg = &seg;
    ode::integrate(rhs, 0.0, seg.len, y, ctl, [&](double, std::array<Dual, 2>& v) {
      scale = std::max(scale, std::abs(v[0].v));
      return false;
    });
  }
  const double w = std::exp(-alpha * z_max);
  for (auto& v : y) v = v * w;
  return {y, scale * w};
}

}  // namespace

RayleighMiss rayleigh_miss_distance(const ShearProfile& profile, double alpha, cplx c) {
  if (!(alpha > 0)) fail(ErrorKind::InvalidArgument, "alpha must be positive");
  const auto r = integrate_path(profile, alpha, c, 1e-12);
  return {r.y[0].v, r.y[0].d, r.scale};
}

Phi1Alpha decaying_solution_phi1alpha_full(const ShearProfile& profile, double alpha, cplx c) {
  if (alpha < 0) fail(ErrorKind::InvalidArgument, "alpha must be non-negative");
  if (alpha == 0.0) {
    // phi_1 = U - c solves the alpha = 0 equation exactly.
    return {profile.eval(0.0, 0) - c, profile.eval(0.0, 1), -1.0, 0.0};
  }
  const auto r = integrate_path(profile, alpha, c, 1e-13);
  return {r.y[0].v, r.y[1].v, r.y[0].d, r.y[1].d};
}

Eigenpair solve_rayleigh(const ShearProfile& profile, double alpha, cplx c_guess, const RayleighOptions& opts) {
  if (!(alpha > 0)) fail(ErrorKind::InvalidArgument, "alpha must be positive");
  if (!(c_guess.imag() > 0)) fail(ErrorKind::InvalidArgument, "c_guess must have Im c > 0");
  cplx c = c_guess;
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    const auto r = integrate_path(profile, alpha, c, opts.rtol);
    const cplx d = r.y[0].v;
    const cplx dd = r.y[0].d;
    if (std::abs(d) < opts.tol * r.scale) {
      converged = true;
      break;
    }
    if (dd == cplx(0.0)) fail(ErrorKind::NoConvergence, "vanishing derivative of the miss distance");
    cplx step = -d / dd;
    const double cap = 0.2 * std::max(std::abs(c), 0.1);
    if (std::abs(step) > cap) step *= cap / std::abs(step);
    c += step;
    if (!(c.imag() >= 1e-10)) {
      std::ostringstream os;
      os << "Im c fell to " << c.imag() << " at iteration " << it + 1;
      fail(ErrorKind::SpectralCollision, os.str());
    }
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(c))) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged) fail(ErrorKind::NoConvergence, "Rayleigh Newton did not converge in " +
                                                     std::to_string(opts.max_iterations) + " steps");

  // Eigenfunction on the real axis (valid for Im c > 0): a uniform grid plus
  // a sinh-clustered patch resolving the near-singular critical layer.
  const double z_max = profile.z_max();
  std::vector<double> grid;
  const int nu = static_cast<int>(std::ceil(z_max / opts.output_step));
  for (int i = 0; i <= nu; ++i) grid.push_back(z_max * double(i) / nu);
  for (double xr : find_critical_points(profile, c.real())) {
    const double d = std::max(c.imag() / std::abs(profile.eval(xr, 1)), 1e-7);
    const double smax = std::asinh(0.5 / d);
    const int nl = 400;
    for (int i = -nl; i <= nl; ++i) {
      const double z = xr + d * std::sinh(smax * double(i) / nl);
      if (z > 0 && z < z_max) grid.push_back(z);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return b - a < 1e-12; }), grid.end());

  std::vector<double> stops(grid.rbegin() + 1, grid.rend() - 1);  // interior, descending
  const double u = profile.eval(z_max, 0);
  const double u1 = profile.eval(z_max, 1);
  std::array<cplx, 2> y{u - c, u1 - alpha * (u - c)};
  std::vector<std::array<cplx, 2>> samples(grid.size());
  samples.back() = y;
  Segment seg = line(z_max, 0.0);
  RayleighRhs<cplx> rhs{profile, alpha, c, &seg};
  std::size_t next = grid.size() - 1;
  // The real segment runs z = z_max - s.
  std::vector<double> sstops;
  for (double z : stops) sstops.push_back(z_max - z);
  auto ctl = rayleigh_control(opts.rtol);
  ode::integrate(rhs, 0.0, z_max, y, ctl, [&](double s, std::array<cplx, 2>& v) {
    const double z = z_max - s;
    while (next > 0 && std::abs(grid[next - 1] - z) < 1e-13 * std::max(1.0, z)) {
      samples[--next] = v;
    }
    if (s == z_max) samples[0] = v;
    return false;
  }, sstops);
  samples[0] = y;

  Eigenpair ep;
  ep.c = c;
  ep.alpha = alpha;
  ep.iterations = it;
  ep.grid = grid;
  double mx = 0.0;
  std::size_t imax = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (std::abs(samples[i][0]) > mx) {
      mx = std::abs(samples[i][0]);
      imax = i;
    }
  const cplx norm = samples[imax][0];
  ep.phi.resize(grid.size());
  ep.phi_prime.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ep.phi[i] = samples[i][0] / norm;
    ep.phi_prime[i] = samples[i][1] / norm;
  }
  // Beyond z_max the solution is the pure exponential; extend the samples
  // until they have decayed below 1e-6 of the maximum.
  {
    const double zr = grid.back();
    const cplx pr = ep.phi.back();
    const double need = std::log(std::abs(pr) / 1e-7);
    if (need > 0) {
      const double len = need / alpha;
      const double h = std::min(0.5, 0.1 / alpha);
      const int nt = static_cast<int>(std::ceil(len / h));
      for (int i = 1; i <= nt; ++i) {
        const double z = zr + len * double(i) / nt;
        const cplx e = std::exp(-alpha * (z - zr));
        ep.grid.push_back(z);
        ep.phi.push_back(pr * e);
        ep.phi_prime.push_back(-alpha * pr * e);
      }
      grid = ep.grid;
    }
  }
  ep.bc_residual = std::abs(ep.phi.front());

  // Audit the samples against the ODE between nodes using local Hermite data
  // (phi, phi', phi'', phi''') where the higher derivatives follow from the ODE.
  auto jet = [&](std::size_t i) {
    const auto d = profile.derivatives(grid[i]);
    const cplx g = d[0] - c;
    const cplx v = d[2] / g;
    const cplx vp = d[3] / g - d[2] * d[1] / (g * g);
    const cplx k2 = alpha * alpha + v;
    return std::array<cplx, 4>{ep.phi[i], ep.phi_prime[i], k2 * ep.phi[i], k2 * ep.phi_prime[i] + vp * ep.phi[i]};
  };
  double res = 0.0;
  double term = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto l = jet(i);
    const auto r = jet(i + 1);
    const double h = grid[i + 1] - grid[i];
    const auto m = hermite_midpoint(4, h, l.data(), r.data());
    const double zm = 0.5 * (grid[i] + grid[i + 1]);
    const cplx g = profile.eval(zm, 0) - c;
    const double u2 = profile.eval(zm, 2);
    const cplx lhs = g * (m[2] - alpha * alpha * m[0]);
    const cplx rhs_v = u2 * m[0];
    res = std::max(res, std::abs(lhs - rhs_v));
    term = std::max({term, std::abs(lhs), std::abs(rhs_v)});
  }
  ep.residual = term > 0 ? res / term : 0.0;
  return ep;
}

// ---------------------------------------------------------------------------
// Critical points

std::vector<double> find_critical_points(const ShearProfile& profile, double c_real) {
  const double hi = profile.is_channel() ? profile.height() : profile.z_max();
  const int n = 4096;
  std::vector<double> roots;
  auto f = [&](double z) { return profile.eval(z, 0) - c_real; };
  double za = 0.0;
  double fa = f(za);
  if (fa == 0.0) roots.push_back(0.0);
  for (int i = 1; i <= n; ++i) {
    // Quadratic clustering toward the wall.
    const double s = double(i) / n;
    const double zb = hi * s * s;
    const double fb = f(zb);
    if (fb == 0.0) {
      if (zb > 0.0) roots.push_back(zb);
    } else if (fa != 0.0 && (fa < 0) != (fb < 0)) {
      // Safeguarded Newton inside the bracket.
      double a = za, b = zb, flo = fa;
      double z = 0.5 * (a + b);
      for (int it = 0; it < 200; ++it) {
        const double fz = f(z);
        if (std::abs(fz) < 1e-14 || b - a < 1e-15 * std::max(1.0, z)) break;
        if ((fz < 0) == (flo < 0)) {
          a = z;
          flo = fz;
        } else {
          b = z;
        }
        const double d = profile.eval(z, 1);
        double zn = d != 0.0 ? z - fz / d : 0.5 * (a + b);
        if (!(zn > a && zn < b)) zn = 0.5 * (a + b);
        z = zn;
      }
      roots.push_back(z);
    }
    za = zb;
    fa = fb;
  }
  return roots;
}

double find_critical_point(const ShearProfile& profile, cplx c) {
  const auto roots = find_critical_points(profile, c.real());
  if (roots.empty()) {
    std::ostringstream os;
    os << "Re c = " << c.real() << " is outside the range of U";
    fail(ErrorKind::NoCriticalPoint, os.str());
  }
  if (roots.size() > 1) {
    std::ostringstream os;
    os << roots.size() << " critical points:";
    for (double r : roots) os << ' ' << r;
    fail(ErrorKind::MultipleCriticalPoints, os.str());
  }
  return roots.front();
}

cplx find_complex_critical_point(const ShearProfile& profile, cplx c, cplx guess) {
  cplx z = guess;
  for (int it = 0; it < 100; ++it) {
    const cplx f = profile.supports_complex() ? profile.eval(z, 0) - c : cplx(profile.eval(z.real(), 0)) - c;
    const cplx d = profile.supports_complex() ? profile.eval(z, 1) : cplx(profile.eval(z.real(), 1));
    if (std::abs(d) < 1e-300) fail(ErrorKind::DegenerateCriticalPoint, "U' vanishes during the critical-point search");
    cplx step = f / d;
    // Damping keeps the iterate in the basin of the continued root.
    const double cap = 0.5;
    if (std::abs(step) > cap) step *= cap / std::abs(step);
    z -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) return z;
    if (!profile.supports_complex() && c.imag() != 0.0)
      fail(ErrorKind::UnsupportedKind, "tabulated profiles have no complex critical points");
  }
  fail(ErrorKind::NoCriticalPoint, "Newton on U(z) = c did not converge");
}

cplx find_complex_critical_point(const ShearProfile& profile, cplx c) {
  cplx guess;
  try {
    guess = find_critical_point(profile, c);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoCriticalPoint) throw;
    guess = (c - profile.eval(0.0, 0)) / profile.eval(0.0, 1);
  }
  return find_complex_critical_point(profile, c, guess);
}

// ---------------------------------------------------------------------------
// Frobenius pair

cplx FrobeniusSolution::log_factor(cplx z) const {
  const cplx x = z - z_c;
  double th = std::arg(x);
  // AboveCut: the cut leaves z_c upward, so the negative real direction has arg -pi.
  if (log_branch == LogBranch::AboveCut && th > 0.5 * kPi) th -= 2.0 * kPi;
  if (log_branch == LogBranch::BelowCut && th < -0.5 * kPi) th += 2.0 * kPi;
  return {std::log(std::abs(x)), th};
}

namespace {

std::array<cplx, 3> series_jet(const std::vector<cplx>& a, cplx x) {
  cplx f = 0, f1 = 0, f2 = 0;
  for (std::size_t k = a.size(); k-- > 0;) {
    f2 = f2 * x + 2.0 * f1;
    f1 = f1 * x + f;
    f = f * x + a[k];
  }
  return {f, f1, f2};
}

}  // namespace

std::array<cplx, 3> FrobeniusSolution::regular(cplx z) const { return series_jet(regular_coeffs, z - z_c); }

std::array<cplx, 3> FrobeniusSolution::singular(cplx z) const {
  const cplx x = z - z_c;
  const auto b = series_jet(P1_coeffs, x);
  // x P2 = K phi_a, so phi_2 = B + K phi_a log x.
  const auto a = series_jet(regular_coeffs, x);
  const cplx k = P2_coeffs.empty() ? cplx(0.0) : P2_coeffs[0];
  const cplx lg = log_factor(z);
  const cplx f = b[0] + k * a[0] * lg;
  const cplx f1 = b[1] + k * (a[1] * lg + a[0] / x);
  const cplx f2 = b[2] + k * (a[2] * lg + 2.0 * a[1] / x - a[0] / (x * x));
  return {f, f1, f2};
}

FrobeniusSolution frobenius_pair(const ShearProfile& profile, cplx c, double alpha, int n_terms) {
  if (n_terms < 4) fail(ErrorKind::InvalidArgument, "need at least 4 series terms");
  const double xr = find_critical_point(profile, c);  // NoCriticalPoint / MultipleCriticalPoints
  if (!profile.supports_complex() && c.imag() != 0.0)
    fail(ErrorKind::UnsupportedKind, "tabulated profiles support real critical points only");
  const cplx zc = profile.supports_complex() ? find_complex_critical_point(profile, c, xr) : cplx(xr);
  const auto t = profile.taylor(zc, n_terms + 3);
  const cplx s1 = t[1];
  if (std::abs(s1) < 1e-8) fail(ErrorKind::DegenerateCriticalPoint, "U'(z_c) nearly vanishes");

  const auto n = static_cast<std::size_t>(n_terms);
  std::vector<cplx> s(n + 3), v(n + 1);
  for (std::size_t j = 1; j < n + 3; ++j) s[j] = t[j];
  for (std::size_t j = 0; j <= n; ++j) v[j] = double((j + 2) * (j + 1)) * t[j + 2];
  const double a2 = alpha * alpha;

  auto advance = [&](std::vector<cplx>& a, std::size_t m, cplx extra) {
    // Coefficient of x^m in (U - c)(phi'' - alpha^2 phi) - U'' phi, solved for a_{m+1}.
    cplx acc = extra;
    for (std::size_t j = 2; j <= m + 1 && j < s.size(); ++j) {
      const std::size_t k = m + 2 - j;
      acc -= s[j] * double(k * (k - 1)) * a[k];
    }
    for (std::size_t j = 1; j <= m; ++j) acc += a2 * s[j] * a[m - j];
    for (std::size_t j = 0; j <= m; ++j) acc += v[j] * a[m - j];
    a[m + 1] = acc / (s1 * double(m * (m + 1)));
  };

  std::vector<cplx> ra(n, 0.0);
  ra[1] = 1.0;
  for (std::size_t m = 1; m + 1 < n; ++m) advance(ra, m, 0.0);

  const cplx kk = v[0] / s1;
  // r = q (2 phi_a' - phi_a / x), q = (U - c) / x.
  std::vector<cplx> g(n, 0.0);  // 2 phi_a' - phi_a / x
  for (std::size_t k = 0; k + 1 < n; ++k) g[k] = 2.0 * double(k + 1) * ra[k + 1] - ra[k + 1];
  std::vector<cplx> r(n, 0.0);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t j = 0; j <= m; ++j) r[m] += s[j + 1] * g[m - j];

  std::vector<cplx> b(n, 0.0);
  b[0] = 1.0;
  for (std::size_t m = 1; m + 1 < n; ++m) advance(b, m, -kk * r[m]);

  FrobeniusSolution fs;
  fs.z_c = zc;
  fs.c = c;
  fs.alpha = alpha;
  fs.regular_coeffs = ra;
  fs.P1_coeffs = b;
  fs.P2_coeffs.assign(n - 1, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) fs.P2_coeffs[k] = kk * ra[k + 1];
  fs.log_branch = s1.real() > 0 ? LogBranch::AboveCut : LogBranch::BelowCut;

  // Root test on the tail of both series.
  std::vector<double> est;
  for (std::size_t k = n / 2; k < n; ++k) {
    const double m = std::max(std::abs(ra[k]), std::abs(b[k]));
    if (m > 0) est.push_back(std::pow(m, -1.0 / double(k)));
  }
  if (est.empty()) {
    fs.radius = std::numeric_limits<double>::infinity();
  } else {
    std::sort(est.begin(), est.end());
    fs.radius = est[est.size() / 2];
  }
  return fs;
}

}  // namespace shearstab
