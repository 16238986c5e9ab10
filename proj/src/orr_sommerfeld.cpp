#include "shearstab/orr_sommerfeld.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <type_traits>

#include "shearstab/dual.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/hermite.hpp"
#include "shearstab/ode.hpp"

namespace shearstab {

namespace {

// Compound vector layout: minors (12, 13, 14, 23, 24, 34), then the
// accumulated log-scale, which is excluded from error control.
// The eigenfunction pass runs in extended precision: in the far field the
// slow solution's higher derivatives are many orders below the dominant
// component, and double-precision integration noise there would be weighted
// by alpha R in the equation.
using xreal = long double;
using xcplx = std::complex<xreal>;

template <class T>
using Compound = std::array<T, 7>;
using Minors = std::array<xcplx, 6>;
using Vec4 = std::array<cplx, 4>;
using XVec4 = std::array<xcplx, 4>;

struct Trajectory {
  std::vector<double> z;
  std::vector<Minors> p;
};

struct Problem {
  const ShearProfile* profile;
  double alpha;
  double reynolds;
  double s;  // coordinate scale: y_k is stored as phi^(k-1) / s^(k-1)
};

// y' = A y in scaled coordinates, phi'''' = a0 phi + a2 phi''.
template <class T>
void os_coefficients(const Problem& pb, double z, const T& c, T& b0, T& b2, T& gamma) {
  using R = ode::real_t<T>;
  const R u = pb.profile->eval(z, 0);
  const R u2 = pb.profile->eval(z, 2);
  const R a = pb.alpha;
  const R s = pb.s;
  const std::complex<R> iar(0.0, a * R(pb.reynolds));
  const T gap = u - c;
  const T a2 = R(2) * a * a + iar * gap;
  const T a0 = -(a * a * a * a) - iar * (a * a * gap + u2);
  b2 = a2 / s;
  b0 = a0 / (s * s * s);
  // Re(gamma^2) does not depend on Z. When it is negative, gamma^2 crosses
  // the negative real axis at the critical point; the cut is then taken
  // along the positive real axis so that gamma stays continuous in Z.
  const T g2 = a * a + iar * gap;
  gamma = primal(g2).real() < 0 ? std::complex<R>(0.0, 1.0) * sqrt(R(-1) * g2) : sqrt(g2);
}

// Minors of the scaled system, shifted by the local growth rate
// kappa = sign (alpha + gamma(Z)) so that the renormalized vector varies slowly.
template <class T>
struct CompoundRhs {
  Problem pb;
  T c;
  double sign;

  void operator()(double z, const Compound<T>& p, Compound<T>& dp) const {
    using R = ode::real_t<T>;
    T b0, b2, gamma;
    os_coefficients(pb, z, c, b0, b2, gamma);
    const R s = pb.s;
    const T kappa = R(sign) * (R(pb.alpha) + gamma);
    dp[0] = s * p[1] - kappa * p[0];
    dp[1] = s * (p[3] + p[2]) - kappa * p[1];
    dp[2] = s * p[4] + b2 * p[1] - kappa * p[2];
    dp[3] = s * p[4] - kappa * p[3];
    dp[4] = s * p[5] - b0 * p[0] + b2 * p[3] - kappa * p[4];
    dp[5] = -b0 * p[1] - kappa * p[5];
    dp[6] = kappa;
  }
};

struct VectorRhs {
  Problem pb;
  xcplx c;

  void operator()(double z, const XVec4& y, XVec4& dy) const {
    xcplx b0, b2, gamma;
    os_coefficients(pb, z, c, b0, b2, gamma);
    const xreal s = pb.s;
    dy[0] = s * y[1];
    dy[1] = s * y[2];
    dy[2] = s * y[3];
    dy[3] = b0 * y[0] + b2 * y[2];
  }
};

// Divides the minors by their largest component and moves its logarithm into
// the log-scale. The divisor is a holomorphic function of c, so the Dual part
// stays the exact c-derivative of the rescaled quantities.
template <class T>
void renormalize(Compound<T>& p) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < 6; ++i)
    if (std::abs(primal(p[i])) > std::abs(primal(p[k]))) k = i;
  const T q = p[k];
  if (primal(q) == decltype(primal(q))(0)) fail(ErrorKind::StiffnessOverflow, "compound vector vanished");
  for (std::size_t i = 0; i < 6; ++i) p[i] = p[i] / q;
  p[k] = T(1.0);
  p[6] = p[6] + log(q);
}

template <class T>
Compound<T> wedge(const std::array<T, 4>& u, const std::array<T, 4>& v, const T& log_scale) {
  auto m = [&](int i, int j) { return u[i] * v[j] - u[j] * v[i]; };
  return {m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3), log_scale};
}

double gamma_abs(const Problem& pb, double u, cplx c) {
  const cplx iar(0.0, pb.alpha * pb.reynolds);
  return std::abs(std::sqrt(pb.alpha * pb.alpha + iar * (u - c)));
}

// Integrates the compound system from z0 to z1, renormalizing after every
// accepted step. With `traj`, records primal minors at every node (the
// starting point included).
template <class T>
Compound<T> shoot(const Problem& pb, const T& c, double z0, double z1, Compound<T> p, double sign,
                  const OSOptions& opts, Trajectory* traj, std::span<const double> stops = {}) {
  renormalize(p);
  auto record = [&](double z, const Compound<T>& q) {
    if (!traj) return;
    traj->z.push_back(z);
    Minors m;
    for (std::size_t i = 0; i < 6; ++i) m[i] = primal(q[i]);
    traj->p.push_back(m);
  };
  record(z0, p);
  ode::StepControl ctl;
  ctl.rtol = opts.rtol;
  ctl.atol = opts.atol;
  ctl.error_components = 6;
  const double g = std::max(1.0, gamma_abs(pb, pb.profile->eval(z0, 0), cplx(primal(c))));
  ctl.initial_step = std::min(1e-2, 0.1 / g);
  ctl.max_step = 0.5;
  ctl.max_steps = 50'000'000;
  CompoundRhs<T> rhs{pb, c, sign};
  ode::integrate(rhs, z0, z1, p, ctl,
                 [&](double z, Compound<T>& q) {
                   renormalize(q);
                   record(z, q);
                   return true;
                 },
                 stops);
  return p;
}

std::complex<double> c_bound_check(const ShearProfile& profile, cplx c) {
  const double lim = 2.0 * std::max(std::abs(profile.wall_value()), std::abs(profile.u_plus())) + 1.0;
  if (!(std::abs(c) < lim) || !std::isfinite(c.real()) || !std::isfinite(c.imag())) {
    std::ostringstream os;
    os << "phase speed " << c << " outside the admissible disc |c| < " << lim;
    fail(ErrorKind::InvalidArgument, os.str());
  }
  return c;
}

Problem make_problem(const ShearProfile& profile, const SpectralParams& params, double u_ref, cplx c) {
  params.validate();
  Problem pb{&profile, params.alpha, params.reynolds, 1.0};
  pb.s = std::max(1.0, gamma_abs(pb, u_ref, c));
  return pb;
}

// ---------------------------------------------------------------- half-line

template <class T>
struct HalfLineShot {
  Problem pb;
  Compound<T> wall;
};

// The phase speed as the differentiation variable (Dual) or a constant.
template <class T>
T phase_variable(cplx c) {
  if constexpr (std::is_same_v<T, Dual>)
    return Dual::variable(c);
  else
    return T(c);
}

template <class T = Dual>
HalfLineShot<T> shoot_half_line(const ShearProfile& profile, const SpectralParams& params, cplx c0,
                                const OSOptions& opts, Trajectory* traj) {
  using R = ode::real_t<T>;
  if (profile.is_channel()) fail(ErrorKind::InvalidArgument, "half-line solver called with a channel profile");
  c_bound_check(profile, c0);
  const double zmax = profile.z_max();
  const double uinf = profile.eval(zmax, 0);
  Problem pb = make_problem(profile, params, uinf, c0);
  const T c = phase_variable<T>(c0);
  const R a = pb.alpha;
  const std::complex<R> iar(0.0, a * R(pb.reynolds));
  const T gamma = sqrt(a * a + iar * (R(uinf) - c));
  if (!(primal(gamma).real() > 0)) {
    std::ostringstream os;
    os << "fast far-field exponent has Re <= 0 for c = " << c0;
    fail(ErrorKind::WrongBranch, os.str());
  }
  const R s = pb.s;
  const std::array<T, 4> slow{T(1.0), T(-a / s), T(a * a / (s * s)), T(-a * a * a / (s * s * s))};
  const T g = gamma / s;
  const std::array<T, 4> fast{T(1.0), -g, g * g, -(g * g * g)};
  Compound<T> p = wedge(slow, fast, T(-(a + gamma) * R(zmax)));
  return {pb, shoot(pb, c, zmax, 0.0, p, -1.0, opts, traj)};
}

// `s_power` undoes the coordinate scale: a minor of components (i, j) is
// stored divided by s^(i + j). s depends on |c|, so leaving it in would make
// the reported determinant non-holomorphic in c.
MissDistance finish(const Dual& d, const Dual& log_scale, double conditioning, const Problem& pb, int s_power) {
  MissDistance md;
  const cplx phase = std::polar(1.0, log_scale.v.imag());
  md.value = d.v * phase;
  md.derivative_c = (d.d + d.v * log_scale.d) * phase;
  md.log_scale = log_scale.v.real() + s_power * std::log(pb.s);
  md.conditioning = conditioning;
  return md;
}

template <class T>
double sup6(const Compound<T>& p) {
  double m = 0.0;
  for (std::size_t i = 0; i < 6; ++i) m = std::max(m, static_cast<double>(std::abs(primal(p[i]))));
  return m;
}

// ------------------------------------------------------------------ channel

template <class T>
struct ChannelShot {
  Problem pb;
  Compound<T> left;   // at the midline, from Z = 0
  Compound<T> right;  // at the midline, from Z = h (parity None only)
};

template <class T = Dual>
ChannelShot<T> shoot_channel(const ShearProfile& profile, const SpectralParams& params, cplx c0, Parity parity,
                             const OSOptions& opts, Trajectory* left_traj, Trajectory* right_traj) {
  if (!profile.is_channel()) fail(ErrorKind::InvalidArgument, "channel solver called with a half-line profile");
  c_bound_check(profile, c0);
  const double h = profile.height();
  const double mid = 0.5 * h;
  Problem pb = make_problem(profile, params, profile.eval(mid, 0), c0);
  const T c = phase_variable<T>(c0);
  Compound<T> start{};
  start[5] = T(1.0);
  ChannelShot<T> out{pb, shoot(pb, c, 0.0, mid, start, 1.0, opts, left_traj), {}};
  if (parity == Parity::None) out.right = shoot(pb, c, h, mid, start, -1.0, opts, right_traj);
  return out;
}

Dual match_determinant(const Compound<Dual>& m, const Compound<Dual>& n) {
  return m[0] * n[5] - m[1] * n[4] + m[2] * n[3] + m[3] * n[2] - m[4] * n[1] + m[5] * n[0];
}

MissDistance channel_miss(const ChannelShot<Dual>& shot, Parity parity) {
  const auto& l = shot.left;
  switch (parity) {
    // The wall start is (phi'', phi''') with unit minor in true coordinates, s^-5.
    case Parity::Even: return finish(l[4], l[6], sup6(l), shot.pb, 4 - 5);
    case Parity::Odd: return finish(l[1], l[6], sup6(l), shot.pb, 2 - 5);
    case Parity::None: break;
  }
  const auto& r = shot.right;
  return finish(match_determinant(l, r), l[6] + r[6], sup6(l) * sup6(r), shot.pb, 6 - 10);
}

// ------------------------------------------------------------------- newton

double log_abs(const MissDistance& md) { return std::log(std::abs(md.value)) + md.log_scale; }

template <class Miss>
std::pair<cplx, int> newton(Miss&& miss, cplx guess, const OSOptions& opts) {
  const double cap = 0.1 * std::abs(guess) + 1e-4;
  cplx c = guess;
  MissDistance md = miss(c);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (std::abs(md.value) <= opts.tol * md.conditioning) return {c, it - 1};
    if (md.derivative_c == cplx(0.0)) fail(ErrorKind::NoConvergence, "dispersion function has zero derivative");
    cplx step = -md.value / md.derivative_c;
    if (std::abs(step) > cap) step *= cap / std::abs(step);
    cplx trial_c = c + step;
    MissDistance trial = miss(trial_c);
    for (int k = 0; k < 8 && !(log_abs(trial) < log_abs(md)); ++k) {
      if (std::abs(step) <= 1e3 * opts.step_tol * std::max(std::abs(c), 1e-8)) break;  // noise level
      step *= 0.5;
      trial_c = c + step;
      trial = miss(trial_c);
    }
    c = trial_c;
    md = trial;
    if (std::abs(step) <= opts.step_tol * std::max(std::abs(c), 1e-8)) return {c, it};
  }
  std::ostringstream os;
  os << "Newton iteration did not converge from c = " << guess << " (last c = " << c
     << ", |D| = " << std::abs(md.value) << ")";
  fail(ErrorKind::NoConvergence, os.str());
}

// ----------------------------------------------------------- reconstruction

using Basis = std::array<XVec4, 2>;

xreal norm2(const XVec4& v) {
  xreal s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

// Orthonormal basis of the 2-plane with Pluecker coordinates m: the column
// space of the antisymmetric matrix of m, by pivoted Gram-Schmidt.
Basis plane_basis(const Minors& m) {
  std::array<XVec4, 4> col{};
  auto set = [&](int i, int j, xcplx v) {
    col[j][i] = v;
    col[i][j] = -v;
  };
  set(0, 1, m[0]);
  set(0, 2, m[1]);
  set(0, 3, m[2]);
  set(1, 2, m[3]);
  set(1, 3, m[4]);
  set(2, 3, m[5]);
  Basis q{};
  for (int k = 0; k < 2; ++k) {
    int best = 0;
    xreal bn = -1.0;
    for (int j = 0; j < 4; ++j) {
      const xreal n = norm2(col[j]);
      if (n > bn) {
        bn = n;
        best = j;
      }
    }
    if (!(bn > 0)) fail(ErrorKind::StiffnessOverflow, "degenerate compound vector");
    for (int i = 0; i < 4; ++i) q[k][i] = col[best][i] / bn;
    for (auto& v : col) {
      xcplx d = 0.0;
      for (int i = 0; i < 4; ++i) d += std::conj(q[k][i]) * v[i];
      for (int i = 0; i < 4; ++i) v[i] -= d * q[k][i];
    }
  }
  return q;
}

// Returns the relative size of the removed component.
double project(const Basis& q, XVec4& y) {
  XVec4 out{};
  for (const auto& b : q) {
    xcplx d = 0.0;
    for (int i = 0; i < 4; ++i) d += std::conj(b[i]) * y[i];
    for (int i = 0; i < 4; ++i) out[i] += d * b[i];
  }
  XVec4 removed;
  for (int i = 0; i < 4; ++i) removed[i] = y[i] - out[i];
  const xreal before = norm2(y);
  y = out;
  return before > 0 ? static_cast<double>(norm2(removed) / before) : 0.0;
}

// Unit vector in the intersection of two planes; second value is the
// smallest singular value of [Q1, -Q2], zero for an exact intersection.
std::pair<XVec4, double> intersect(const Basis& q1, const Basis& q2) {
  using Mat = Eigen::Matrix<xcplx, 4, 4>;
  Mat M;
  for (int i = 0; i < 4; ++i) {
    M(i, 0) = q1[0][i];
    M(i, 1) = q1[1][i];
    M(i, 2) = -q2[0][i];
    M(i, 3) = -q2[1][i];
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  XVec4 y{};
  for (int i = 0; i < 4; ++i) y[i] = q1[0][i] * svd.matrixV()(0, 3) + q1[1][i] * svd.matrixV()(1, 3);
  const xreal n = norm2(y);
  for (auto& x : y) x /= n;
  return {y, static_cast<double>(svd.singularValues()(3))};
}

Vec4 narrow(const XVec4& y) {
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = cplx(y[i]);
  return out;
}

// Samples in integration order. At projection nodes `pre` holds the state
// before the projection; elsewhere it equals `y`.
struct Samples {
  std::vector<double> z;
  std::vector<Vec4> y;  // scaled
  std::vector<Vec4> pre;
  std::vector<char> node;

  void push(double zz, const XVec4& post, const XVec4& before, bool is_node) {
    z.push_back(zz);
    y.push_back(narrow(post));
    pre.push_back(narrow(before));
    node.push_back(is_node ? 1 : 0);
  }
};

// Output spacing: a fraction of the local fast length, capped by the
// critical-layer scale in regions where the fast solution still matters.
double output_spacing(const Problem& pb, double z, cplx c, double layer, const OSOptions& opts) {
  const double g = std::max({gamma_abs(pb, pb.profile->eval(z, 0), c), 1.0 / layer, 1.0});
  return std::min(opts.output_step, opts.output_fraction / g);
}

// Runs the vector ODE backwards along a stored compound trajectory, from its
// last node to its first, restoring the solution to the stored plane at
// every node. `fine_until` bounds the region where extra output points are
// inserted (measured by accumulated fast decay from the start).
Samples back_substitute(const Problem& pb, cplx c, const Trajectory& traj, XVec4 y, const OSOptions& opts,
                        double layer, bool fine_everywhere, const std::vector<double>* forced = nullptr) {
  Samples out;
  const std::size_t n = traj.z.size();
  out.push(traj.z[n - 1], y, y, false);
  ode::StepControl ctl;
  ctl.rtol = opts.rtol;
  ctl.atol = 0.0;
  ctl.max_step = 0.5;
  VectorRhs rhs{pb, xcplx(c)};
  double decay = 0.0;
  std::size_t fpos = 0;
  std::vector<double> stops;
  for (std::size_t i = n - 1; i-- > 0;) {
    const double za = traj.z[i + 1];
    const double zb = traj.z[i];
    const double dir = zb > za ? 1.0 : -1.0;
    stops.clear();
    if (forced) {
      while (fpos < forced->size() && ((*forced)[fpos] - za) * dir <= 0) ++fpos;
      while (fpos < forced->size() && ((*forced)[fpos] - zb) * dir < 0) stops.push_back((*forced)[fpos++]);
    } else if (fine_everywhere || decay < 45.0) {
      const double hz = output_spacing(pb, 0.5 * (za + zb), c, layer, opts);
      const int pieces = static_cast<int>(std::ceil(std::abs(zb - za) / hz));
      for (int k = 1; k < pieces; ++k) stops.push_back(za + (zb - za) * double(k) / pieces);
    }
    const double g = gamma_abs(pb, pb.profile->eval(za, 0), c);
    decay += std::abs(zb - za) * g / std::sqrt(2.0);
    ctl.initial_step = std::abs(zb - za) / (stops.size() + 1);
    ode::integrate(rhs, za, zb, y, ctl,
                   [&](double z, XVec4& yy) {
                     if (z != zb && !stops.empty() && std::find(stops.begin(), stops.end(), z) != stops.end())
                       out.push(z, yy, yy, false);
                     return false;
                   },
                   stops);
    const XVec4 before = y;
    project(plane_basis(traj.p[i]), y);
    out.push(zb, y, before, true);
  }
  return out;
}

// Converts scaled samples into an eigenpair on ascending Z.
void fill_pair(Eigenpair& pair, const Problem& pb, const std::vector<double>& z, const std::vector<Vec4>& y) {
  const double s = pb.s;
  pair.grid = z;
  const std::size_t n = z.size();
  pair.phi.resize(n);
  pair.phi_prime.resize(n);
  pair.phi_pp.resize(n);
  pair.phi_ppp.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pair.phi[i] = y[i][0];
    pair.phi_prime[i] = y[i][1] * s;
    pair.phi_pp[i] = y[i][2] * (s * s);
    pair.phi_ppp[i] = y[i][3] * (s * s * s);
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(pair.phi[i]) > std::abs(pair.phi[k])) k = i;
  const cplx norm = pair.phi[k];
  if (norm == cplx(0.0)) fail(ErrorKind::NoConvergence, "reconstructed eigenfunction vanishes");
  for (auto* v : {&pair.phi, &pair.phi_prime, &pair.phi_pp, &pair.phi_ppp})
    for (auto& x : *v) x /= norm;
}

// Maximum over audit cells of the equation defect at the Hermite midpoint,
// relative to the largest single term of the equation. Audit cells merge
// consecutive samples up to a fixed fraction of the local fast length, so
// the check is not dominated by sample noise divided by tiny cell widths,
// and never cross a projection node: each cell is audited on one
// continuous integration (post-projection state on its left end,
// pre-projection state on its right end). The first two cells at a wall are
// skipped.
struct Audit {
  double worst = 0.0;
  double scale = 0.0;
  double jump = 0.0;  // largest relative state change at projection nodes
};

void audit_samples(const Problem& pb, cplx c, const Samples& smp, double layer, bool wall_front, bool wall_back,
                   Audit& out) {
  const std::size_t n = smp.z.size();
  if (n < 6) return;
  const ShearProfile& profile = *pb.profile;
  const double alpha = pb.alpha;
  const cplx iar(0.0, alpha * pb.reynolds);
  const double a2 = alpha * alpha;
  const double s = pb.s;
  auto jet = [&](double z, const Vec4& y) {
    const double u = profile.eval(z, 0);
    const double u2 = profile.eval(z, 2);
    const cplx p = y[0];
    const cplx pp = y[2] * (s * s);
    const cplx p4 = (2.0 * a2 + iar * (u - c)) * pp - (a2 * a2 + iar * (a2 * (u - c) + u2)) * p;
    return std::array<cplx, 5>{p, y[1] * s, pp, y[3] * (s * s * s), p4};
  };
  auto target = [&](double z) {
    const double g = std::abs(std::sqrt(a2 + iar * (profile.eval(z, 0) - c)));
    return std::min(0.05, 0.2 / std::max({g, 1.0 / layer, 1.0}));
  };
  std::vector<std::size_t> ends{0};
  while (ends.back() + 1 < n) {
    const std::size_t i = ends.back();
    const double limit = target(smp.z[i]);
    std::size_t j = i + 1;
    while (j + 1 < n && std::abs(smp.z[j + 1] - smp.z[i]) <= limit) ++j;
    ends.push_back(j);
  }
  const std::size_t cells = ends.size() - 1;
  for (std::size_t k = 0; k < cells; ++k) {
    const std::size_t i = ends[k], j = ends[k + 1];
    if ((wall_front && k < 2) || (wall_back && k + 2 >= cells)) continue;
    auto left = jet(smp.z[i], smp.y[i]);
    auto right = jet(smp.z[j], smp.y[j]);
    double h = smp.z[j] - smp.z[i];
    if (h < 0) {
      std::swap(left, right);
      h = -h;
    }
    if (h == 0) continue;
    const auto m = hermite_midpoint(5, h, left.data(), right.data());
    const double zm = 0.5 * (smp.z[i] + smp.z[j]);
    const double u = profile.eval(zm, 0);
    const double u2 = profile.eval(zm, 2);
    const cplx visc = (m[4] - 2.0 * a2 * m[2] + a2 * a2 * m[0]) / iar;
    const cplx conv = (u - c) * (m[2] - a2 * m[0]);
    const cplx src = u2 * m[0];
    out.worst = std::max(out.worst, std::abs(visc - conv + src));
    out.scale = std::max({out.scale, std::abs(visc), std::abs(conv), std::abs(src)});
  }
  std::array<double, 4> peak{};
  for (const auto& y : smp.y)
    for (std::size_t k = 0; k < 4; ++k) peak[k] = std::max(peak[k], std::abs(y[k]));
  for (std::size_t i = 0; i < n; ++i) {
    if (!smp.node[i]) continue;
    for (std::size_t k = 0; k < 4; ++k)
      if (peak[k] > 0) out.jump = std::max(out.jump, std::abs(smp.y[i][k] - smp.pre[i][k]) / peak[k]);
  }
}

// Tighter tolerances for the final eigenvalue polish and the eigenfunction
// pass, so the stored planes are accurate well below the residual target.
OSOptions polish_options(const OSOptions& opts) {
  OSOptions fine = opts;
  fine.rtol = std::max(opts.rtol * opts.polish_factor, 1e-14);
  fine.atol = opts.atol * opts.polish_factor;
  fine.max_iterations = 6;
  return fine;
}

// Tolerances of the extended-precision eigenfunction pass.
OSOptions eigen_options(const OSOptions& opts) {
  OSOptions x = opts;
  x.rtol = opts.eigen_rtol;
  x.atol = opts.eigen_rtol * 1e-2;
  return x;
}

double layer_scale(const ShearProfile& profile, const Problem& pb) {
  double umax = std::abs(profile.wall_shear());
  if (profile.is_channel()) umax = std::max(umax, std::abs(profile.eval(profile.height(), 1)));
  return std::cbrt(1.0 / (pb.alpha * pb.reynolds * std::max(umax, 1e-12)));
}

}  // namespace

MissDistance miss_distance(const ShearProfile& profile, const SpectralParams& params, cplx c,
                           const OSOptions& opts) {
  const auto shot = shoot_half_line(profile, params, c, opts, nullptr);
  return finish(shot.wall[0], shot.wall[6], sup6(shot.wall), shot.pb, 1);
}

MissDistance miss_distance_channel(const ShearProfile& profile, const SpectralParams& params, cplx c,
                                   Parity parity, const OSOptions& opts) {
  return channel_miss(shoot_channel(profile, params, c, parity, opts, nullptr, nullptr), parity);
}

Eigenpair solve_os(const ShearProfile& profile, const SpectralParams& params, cplx c_guess,
                   const OSOptions& opts) {
  auto [c, iterations] = newton([&](cplx cc) { return miss_distance(profile, params, cc, opts); }, c_guess, opts);
  if (!opts.reconstruct) {
    Eigenpair pair;
    pair.c = c;
    pair.alpha = params.alpha;
    pair.reynolds = params.reynolds;
    pair.iterations = iterations;
    return pair;
  }
  const OSOptions fine = polish_options(opts);
  c = newton([&](cplx cc) { return miss_distance(profile, params, cc, fine); }, c, fine).first;
  Eigenpair pair;
  pair.c = c;
  pair.alpha = params.alpha;
  pair.reynolds = params.reynolds;
  pair.iterations = iterations;

  const OSOptions xfine = eigen_options(opts);
  Trajectory traj;
  const auto shot = shoot_half_line<xcplx>(profile, params, c, xfine, &traj);
  const Problem& pb = shot.pb;
  const Minors& w = traj.p.back();
  // Vectors of the decaying plane with phi(0) = phi'(0) = 0.
  const xcplx zero = 0.0;
  XVec4 y1{zero, zero, w[1], w[2]};
  XVec4 y2{zero, zero, w[3], w[4]};
  XVec4 y = std::abs(w[1]) + std::abs(w[2]) >= std::abs(w[3]) + std::abs(w[4]) ? y1 : y2;
  XVec4 test = y;
  const double wall_defect = project(plane_basis(w), test);

  Samples smp = back_substitute(pb, c, traj, y, xfine, layer_scale(profile, pb), false);
  // Exponential tail beyond the truncation point.
  const double a = params.alpha;
  const double zend = smp.z.back();
  const Vec4 yend = smp.y.back();
  const double tail_step = std::min(0.1 / a, 5.0);
  double peak = 0.0;
  for (const auto& v : smp.y) peak = std::max(peak, std::abs(v[0]));
  for (int k = 1; k < 100000; ++k) {
    const double z = zend + k * tail_step;
    const double e = std::exp(-a * (z - zend));
    XVec4 v{};
    for (int j = 0; j < 4; ++j) v[j] = xcplx(yend[0] * e * std::pow(-a / pb.s, j));
    smp.push(z, v, v, false);
    if (std::abs(v[0]) < 1e-7 * peak) break;
  }
  fill_pair(pair, pb, smp.z, smp.y);
  Audit audit;
  audit_samples(pb, c, smp, layer_scale(profile, pb), true, false, audit);
  pair.residual = audit.scale > 0 ? audit.worst / audit.scale : 0.0;
  pair.continuity = audit.jump;
  double dmax = 0.0;
  for (auto v : pair.phi_prime) dmax = std::max(dmax, std::abs(v));
  pair.bc_residual = std::max({std::abs(pair.phi.front()), std::abs(pair.phi_prime.front()) / dmax, wall_defect});
  return pair;
}

Eigenpair solve_os_channel(const ShearProfile& profile, const SpectralParams& params, cplx c_guess,
                           Parity parity, const OSOptions& opts) {
  auto [c, iterations] = newton(
      [&](cplx cc) { return miss_distance_channel(profile, params, cc, parity, opts); }, c_guess, opts);
  const OSOptions fine = polish_options(opts);
  if (opts.reconstruct)
    c = newton([&](cplx cc) { return miss_distance_channel(profile, params, cc, parity, fine); }, c, fine).first;
  Eigenpair pair;
  pair.c = c;
  pair.alpha = params.alpha;
  pair.reynolds = params.reynolds;
  pair.iterations = iterations;
  pair.parity = parity;
  if (!opts.reconstruct) return pair;

  const double h = profile.height();
  const double mid = 0.5 * h;
  const OSOptions xfine = eigen_options(opts);
  Trajectory left, right;
  const auto shot = shoot_channel<xcplx>(profile, params, c, parity, xfine,
                                         &left, parity == Parity::None ? &right : nullptr);
  const Problem& pb = shot.pb;
  if (parity != Parity::None) {
    // The right half is shot independently so the symmetry check is not
    // built in: its nodes mirror the left ones.
    std::vector<double> mirror;
    for (std::size_t i = 1; i + 1 < left.z.size(); ++i) mirror.push_back(h - left.z[i]);
    Compound<xcplx> start{};
    start[5] = 1.0;
    shoot(pb, xcplx(c), h, mid, start, -1.0, xfine, &right, mirror);
  }
  const Basis bl = plane_basis(left.p.back());
  const Basis br = plane_basis(right.p.back());
  Basis target = br;
  if (parity == Parity::Even) target = Basis{XVec4{1.0, 0.0, 0.0, 0.0}, XVec4{0.0, 0.0, 1.0, 0.0}};
  if (parity == Parity::Odd) target = Basis{XVec4{0.0, 1.0, 0.0, 0.0}, XVec4{0.0, 0.0, 0.0, 1.0}};
  const auto [ymid, defect] = intersect(bl, target);
  const double layer = layer_scale(profile, pb);
  Samples ls = back_substitute(pb, c, left, ymid, xfine, layer, true);
  std::vector<double> forced;
  if (parity != Parity::None) {
    for (std::size_t k = 1; k + 1 < ls.z.size(); ++k) forced.push_back(h - ls.z[k]);
  }
  // The right half starts from its own plane, matched to the left state at
  // the midline; the mismatch enters the symmetry residual.
  XVec4 yr = ymid;
  double right_defect = 0.0;
  if (parity == Parity::None) {
    project(br, yr);
  } else {
    yr = intersect(br, target).first;
    std::size_t k = 0;
    for (std::size_t i = 1; i < 4; ++i)
      if (std::abs(ymid[i]) > std::abs(ymid[k])) k = i;
    const xcplx ratio = ymid[k] / yr[k];
    for (std::size_t i = 0; i < 4; ++i) {
      yr[i] *= ratio;
      right_defect = std::max(right_defect, static_cast<double>(std::abs(yr[i] - ymid[i])));
    }
  }
  Samples rs = back_substitute(pb, c, right, yr, xfine, layer, true, parity != Parity::None ? &forced : nullptr);

  std::vector<double> z;
  std::vector<Vec4> y;
  for (std::size_t i = ls.z.size(); i-- > 0;) {
    z.push_back(ls.z[i]);
    y.push_back(ls.y[i]);
  }
  for (std::size_t i = 1; i < rs.z.size(); ++i) {
    z.push_back(rs.z[i]);
    y.push_back(rs.y[i]);
  }
  // Each half is audited on its own samples: they come from separate
  // integrations that agree at the midline only to solver accuracy.
  Audit audit;
  audit_samples(pb, c, ls, layer, false, true, audit);
  audit_samples(pb, c, rs, layer, false, true, audit);
  pair.residual = audit.scale > 0 ? audit.worst / audit.scale : 0.0;
  pair.continuity = audit.jump;
  fill_pair(pair, pb, z, y);
  double dmax = 0.0;
  for (auto v : pair.phi_prime) dmax = std::max(dmax, std::abs(v));
  pair.bc_residual = std::max({std::abs(pair.phi.front()), std::abs(pair.phi.back()),
                               std::abs(pair.phi_prime.front()) / dmax, std::abs(pair.phi_prime.back()) / dmax,
                               parity == Parity::None ? defect : 0.0});

  if (parity != Parity::None) {
    // Compare phi(mid + s) against +-phi(mid - s) at mirrored nodes.
    const double sign = parity == Parity::Even ? 1.0 : -1.0;
    const std::size_t nl = ls.z.size();
    double worst = right_defect;
    for (std::size_t i = 0; i < nl; ++i) {
      const double zr = h - pair.grid[i];
      const auto it = std::lower_bound(pair.grid.begin(), pair.grid.end(), zr - 1e-13);
      if (it != pair.grid.end() && std::abs(*it - zr) <= 1e-13) {
        const auto j = static_cast<std::size_t>(it - pair.grid.begin());
        worst = std::max(worst, std::abs(pair.phi[j] - sign * pair.phi[i]));
      }
    }
    pair.symmetry_residual = worst;
    if (worst > 1e-6) {
      std::ostringstream os;
      os << "channel mode violates the requested parity: symmetry residual " << worst;
      fail(ErrorKind::ParityViolation, os.str());
    }
  }
  return pair;
}

namespace {

MissDistance any_miss(const ShearProfile& profile, const SpectralParams& params, cplx c, Parity parity,
                      const OSOptions& opts) {
  return profile.is_channel() ? miss_distance_channel(profile, params, c, parity, opts)
                              : miss_distance(profile, params, c, opts);
}

}  // namespace

int winding_number(const ShearProfile& profile, const SpectralParams& params, const CRect& rect, int samples,
                   Parity parity, const OSOptions& opts) {
  const cplx corners[4] = {{rect.re_lo, rect.im_lo}, {rect.re_hi, rect.im_lo}, {rect.re_hi, rect.im_hi},
                           {rect.re_lo, rect.im_hi}};
  const int per_edge = std::max(samples / 4, 2);
  auto arg = [&](cplx c) { return std::arg(any_miss(profile, params, c, parity, opts).value); };
  double total = 0.0;
  // Phase increments larger than this are resolved by bisection.
  constexpr double kMaxJump = std::numbers::pi / 3;
  auto wrap = [](double d) { return std::remainder(d, 2.0 * std::numbers::pi); };
  auto accumulate = [&](auto&& self, cplx a, cplx b, double pa, double pb, int depth) -> double {
    const double d = wrap(pb - pa);
    if (std::abs(d) <= kMaxJump || depth >= 12) return d;
    const cplx m = 0.5 * (a + b);
    const double pm = arg(m);
    return self(self, a, m, pa, pm, depth + 1) + self(self, m, b, pm, pb, depth + 1);
  };
  for (int e = 0; e < 4; ++e) {
    const cplx a = corners[e], b = corners[(e + 1) % 4];
    cplx prev = a;
    double pprev = arg(a);
    for (int k = 1; k <= per_edge; ++k) {
      const cplx cur = a + (b - a) * (double(k) / per_edge);
      const double pcur = arg(cur);
      total += accumulate(accumulate, prev, cur, pprev, pcur, 0);
      prev = cur;
      pprev = pcur;
    }
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

std::vector<cplx> scan_zeros(const ShearProfile& profile, const SpectralParams& params, const CRect& rect,
                             int max_depth, Parity parity, const OSOptions& opts) {
  std::vector<cplx> found;
  auto inside = [](const CRect& r, cplx c) {
    return c.real() >= r.re_lo && c.real() <= r.re_hi && c.imag() >= r.im_lo && c.imag() <= r.im_hi;
  };
  auto recurse = [&](auto&& self, const CRect& r, int depth, int samples) -> void {
    const int n = winding_number(profile, params, r, samples, parity, opts);
    if (n <= 0) return;
    if (n == 1 || depth >= max_depth) {
      const cplx guess{0.5 * (r.re_lo + r.re_hi), 0.5 * (r.im_lo + r.im_hi)};
      OSOptions o = opts;
      o.reconstruct = false;
      try {
        const cplx c = newton([&](cplx cc) { return any_miss(profile, params, cc, parity, o); }, guess, o).first;
        if (inside(r, c)) {
          found.push_back(c);
          return;
        }
      } catch (const Error&) {
      }
      if (depth >= max_depth) return;
    }
    const double rm = 0.5 * (r.re_lo + r.re_hi), im = 0.5 * (r.im_lo + r.im_hi);
    const int sub = std::max(samples / 2, 40);
    self(self, CRect{r.re_lo, rm, r.im_lo, im}, depth + 1, sub);
    self(self, CRect{rm, r.re_hi, r.im_lo, im}, depth + 1, sub);
    self(self, CRect{r.re_lo, rm, im, r.im_hi}, depth + 1, sub);
    self(self, CRect{rm, r.re_hi, im, r.im_hi}, depth + 1, sub);
  };
  recurse(recurse, rect, 0, 400);
  return found;
}

VelocityField reconstruct_velocity(const Eigenpair& pair, const SpectralParams& params, double t,
                                   const std::vector<double>& x_samples) {
  VelocityField f;
  f.z = pair.grid;
  f.x = x_samples;
  f.t = t;
  const double a = params.alpha;
  const cplx ia(0.0, a);
  f.u.assign(pair.grid.size(), std::vector<double>(x_samples.size()));
  f.w.assign(pair.grid.size(), std::vector<double>(x_samples.size()));
  std::vector<cplx> wave(x_samples.size());
  for (std::size_t j = 0; j < x_samples.size(); ++j) wave[j] = std::exp(ia * (x_samples[j] - pair.c * t));
  for (std::size_t i = 0; i < pair.grid.size(); ++i) {
    for (std::size_t j = 0; j < x_samples.size(); ++j) {
      f.u[i][j] = (pair.phi_prime[i] * wave[j]).real();
      f.w[i][j] = (-ia * pair.phi[i] * wave[j]).real();
    }
  }
  return f;
}

}  // namespace shearstab
