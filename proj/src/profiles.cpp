#include "shearstab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/Splines>

#include "shearstab/errors.hpp"

namespace shearstab {

using cplx = std::complex<double>;

namespace {

constexpr double kTruncationDecades = 40.0;

cplx erf_complex(cplx w) {
  if (w.imag() == 0.0) return std::erf(w.real());
  const double x = w.real();
  const double y = w.imag();
  if (std::abs(y) <= 1.0) {
    // Taylor expansion about the real point x; erf^(n)(x) involves H_{n-1}(x).
    const double pref = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    double h_prev = 0.0;
    double h_cur = 1.0;  // H_0
    cplx term_pow(1.0);  // (i y)^n / n!
    cplx sum(0.0);
    for (int n = 1; n < 200; ++n) {
      term_pow *= cplx(0.0, y) / double(n);
      const double sign = (n - 1) % 2 == 0 ? 1.0 : -1.0;
      const cplx contrib = sign * h_cur * term_pow;
      sum += contrib;
      const double h_next = 2.0 * x * h_cur - 2.0 * double(n - 1) * h_prev;
      h_prev = h_cur;
      h_cur = h_next;
      if (n > 8 && std::abs(contrib) < 1e-18 * std::max(1.0, std::abs(sum))) break;
    }
    return std::erf(x) + pref * sum;
  }
  if (std::abs(w) > 5.0)
    fail(ErrorKind::OutOfDomain, "complex erf implemented for |Im w| <= 1 or |w| <= 5");
  cplx sum(0.0);
  cplx term = w;
  const cplx w2 = w * w;
  for (int n = 0; n < 400; ++n) {
    const cplx contrib = term / double(2 * n + 1);
    sum += contrib;
    if (std::abs(contrib) < 1e-18 * std::abs(sum)) break;
    term *= -w2 / double(n + 1);
  }
  return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

// Physicists' Hermite polynomials H_0..H_3.
template <class T>
T hermite(int n, T x) {
  switch (n) {
    case 0: return T(1.0);
    case 1: return 2.0 * x;
    case 2: return 4.0 * x * x - 2.0;
    default: return 8.0 * x * x * x - 12.0 * x;
  }
}

template <class T>
T closed_form(ProfileKind kind, double u_plus, double eta, double param, T z, int order) {
  using std::exp;
  using std::sqrt;
  using std::tanh;
  switch (kind) {
    case ProfileKind::Exponential: {
      if (order == 0) return u_plus * (1.0 - exp(-eta * z));
      return -u_plus * std::pow(-eta, order) * exp(-eta * z);
    }
    case ProfileKind::ErfHeat: {
      const double s = 2.0 * std::sqrt(param);
      const T w = z / s;
      if (order == 0) {
        if constexpr (std::is_same_v<T, double>) return u_plus * std::erf(w);
        else return u_plus * erf_complex(w);
      }
      const double sign = (order - 1) % 2 == 0 ? 1.0 : -1.0;
      return u_plus * 2.0 / std::sqrt(std::numbers::pi) * std::pow(1.0 / s, order) * sign *
             hermite(order - 1, w) * exp(-w * w);
    }
    case ProfileKind::TanhInflection: {
      const double ta = std::tanh(param);
      const double norm = u_plus / (1.0 + ta);
      const T t = tanh(z - param);
      const T s = 1.0 - t * t;
      switch (order) {
        case 0: return norm * (t + ta);
        case 1: return norm * s;
        case 2: return norm * (-2.0 * t * s);
        case 3: return norm * (-2.0 * s * (1.0 - 3.0 * t * t));
        default: return norm * (8.0 * t * s * (2.0 - 3.0 * t * t));
      }
    }
    case ProfileKind::ChannelParabolic: {
      const double h = param;
      const double k = 4.0 / (h * h);
      switch (order) {
        case 0: return k * z * (h - z);
        case 1: return k * (h - 2.0 * z);
        case 2: return T(-2.0 * k);
        default: return T(0.0);
      }
    }
    case ProfileKind::PoiseuilleCentered: {
      switch (order) {
        case 0: return z * z - 2.0 * z;
        case 1: return 2.0 * z - 2.0;
        case 2: return T(2.0);
        default: return T(0.0);
      }
    }
    case ProfileKind::Tabulated: break;
  }
  fail(ErrorKind::UnsupportedKind, "closed-form evaluation of a tabulated profile");
}

}  // namespace

class TabulatedData {
 public:
  using Spline = Eigen::Spline<double, 1, Eigen::Dynamic>;

  TabulatedData(std::vector<double> z, std::vector<double> u) : z_(std::move(z)), u_(std::move(u)) {
    const auto n = static_cast<Eigen::Index>(z_.size());
    degree_ = static_cast<int>(std::min<Eigen::Index>(5, n - 1));
    z0_ = z_.front();
    span_ = z_.back() - z_.front();
    Eigen::RowVectorXd pts(n), params(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      pts(i) = u_[static_cast<std::size_t>(i)];
      params(i) = (z_[static_cast<std::size_t>(i)] - z0_) / span_;
    }
    spline_ = Eigen::SplineFitting<Spline>::Interpolate(pts, degree_, params);
  }

  // Derivatives up to `order` at z (inside the sample range).
  std::array<double, 6> derivatives(double z, int order) const {
    const double u = std::clamp((z - z0_) / span_, 0.0, 1.0);
    const auto d = spline_.derivatives(u, order);
    std::array<double, 6> out{};
    double scale = 1.0;
    for (int k = 0; k <= order; ++k) {
      out[static_cast<std::size_t>(k)] = d(0, k) * scale;
      scale /= span_;
    }
    return out;
  }

  int degree() const { return degree_; }
  double front() const { return z_.front(); }
  double back() const { return z_.back(); }
  const std::vector<double>& z() const { return z_; }
  const std::vector<double>& u() const { return u_; }

 private:
  std::vector<double> z_, u_;
  int degree_ = 5;
  double z0_ = 0.0, span_ = 1.0;
  Spline spline_;
};

const char* to_string(ProfileKind kind) noexcept {
  switch (kind) {
    case ProfileKind::Exponential: return "Exponential";
    case ProfileKind::ErfHeat: return "ErfHeat";
    case ProfileKind::TanhInflection: return "TanhInflection";
    case ProfileKind::ChannelParabolic: return "ChannelParabolic";
    case ProfileKind::PoiseuilleCentered: return "PoiseuilleCentered";
    case ProfileKind::Tabulated: return "Tabulated";
  }
  return "Unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  for (auto k : {ProfileKind::Exponential, ProfileKind::ErfHeat, ProfileKind::TanhInflection,
                 ProfileKind::ChannelParabolic, ProfileKind::PoiseuilleCentered,
                 ProfileKind::Tabulated})
    if (name == to_string(k)) return k;
  fail(ErrorKind::ConfigError, "unknown profile kind '" + name + "'");
}

ShearProfile ShearProfile::exponential(double u_plus, double eta) {
  if (!(eta > 0)) fail(ErrorKind::InvalidArgument, "Exponential profile needs eta > 0");
  ShearProfile p;
  p.kind_ = ProfileKind::Exponential;
  p.u_plus_ = u_plus;
  p.eta_ = eta;
  p.z_max_ = std::max(kTruncationDecades / eta, kTruncationDecades);
  return p;
}

ShearProfile ShearProfile::erf_heat(double t, double u_plus) {
  if (!(t > 0)) fail(ErrorKind::InvalidArgument, "ErfHeat profile needs t > 0");
  ShearProfile p;
  p.kind_ = ProfileKind::ErfHeat;
  p.u_plus_ = u_plus;
  p.param_ = t;
  // Gaussian tail: any exponential weight is bounded; keep the unit rate.
  p.eta_ = 1.0;
  p.z_max_ = std::max(kTruncationDecades, 2.0 * std::sqrt(t) * 6.5);
  return p;
}

ShearProfile ShearProfile::tanh_inflection(double a, double u_plus) {
  if (!(a > 0)) fail(ErrorKind::InvalidArgument, "TanhInflection profile needs a > 0");
  ShearProfile p;
  p.kind_ = ProfileKind::TanhInflection;
  p.u_plus_ = u_plus;
  p.param_ = a;
  p.eta_ = 2.0;  // 1 - tanh(x) ~ 2 exp(-2x)
  p.z_max_ = kTruncationDecades;
  return p;
}

ShearProfile ShearProfile::channel_parabolic(double height) {
  if (!(height > 0)) fail(ErrorKind::InvalidArgument, "channel height must be positive");
  ShearProfile p;
  p.kind_ = ProfileKind::ChannelParabolic;
  p.domain_ = DomainKind::Channel;
  p.param_ = height;
  p.u_plus_ = 1.0;  // centreline speed
  p.z_max_ = height;
  return p;
}

ShearProfile ShearProfile::poiseuille_centered() {
  ShearProfile p;
  p.kind_ = ProfileKind::PoiseuilleCentered;
  p.domain_ = DomainKind::Channel;
  p.param_ = 2.0;
  p.u_plus_ = -1.0;
  p.z_max_ = 2.0;
  return p;
}

ShearProfile ShearProfile::tabulated(std::vector<double> z, std::vector<double> u) {
  if (z.size() != u.size() || z.size() < 2)
    fail(ErrorKind::InvalidArgument, "tabulated profile needs >= 2 matching samples");
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1])) fail(ErrorKind::InvalidArgument, "tabulated Z must increase strictly");
  if (z.front() != 0.0) fail(ErrorKind::InvalidArgument, "tabulated profile must start at Z = 0");
  ShearProfile p;
  p.kind_ = ProfileKind::Tabulated;
  p.u_plus_ = u.back();
  p.eta_ = 1.0;
  p.z_max_ = std::max(kTruncationDecades, z.back());
  p.table_ = std::make_shared<const TabulatedData>(std::move(z), std::move(u));
  return p;
}

ShearProfile ShearProfile::load_tabulated(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open tabulated profile " + path.string());
  std::vector<double> z, u;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    double a = 0, b = 0;
    if (!(ls >> a)) continue;
    if (!(ls >> b))
      fail(ErrorKind::ConfigError, path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    z.push_back(a);
    u.push_back(b);
  }
  return tabulated(std::move(z), std::move(u));
}

double ShearProfile::height() const noexcept {
  return is_channel() ? param_ : std::numeric_limits<double>::infinity();
}

ShearProfile ShearProfile::with_truncation(double z_max) const {
  if (is_channel()) fail(ErrorKind::UnsupportedKind, "channel profiles have a fixed height");
  if (!(z_max > 0)) fail(ErrorKind::InvalidArgument, "truncation must be positive");
  ShearProfile p = *this;
  p.z_max_ = z_max;
  return p;
}

double ShearProfile::eval(double z, int order) const {
  if (order < 0 || order > 4) fail(ErrorKind::DerivativeUnavailable, "order must be in 0..4");
  if (!(z >= 0.0) || (is_channel() && z > param_ * (1.0 + 1e-14)))
    fail(ErrorKind::OutOfDomain, "Z = " + std::to_string(z) + " outside profile domain");
  if (kind_ == ProfileKind::Tabulated) {
    if (order >= table_->degree())
      fail(ErrorKind::DerivativeUnavailable, "tabulated spline of degree " +
                                                 std::to_string(table_->degree()) +
                                                 " has no derivative of order " + std::to_string(order));
    if (z > table_->back()) return order == 0 ? u_plus_ : 0.0;
    return table_->derivatives(z, order)[static_cast<std::size_t>(order)];
  }
  return closed_form<double>(kind_, u_plus_, eta_, param_, z, order);
}

std::array<double, 5> ShearProfile::derivatives(double z) const {
  if (kind_ == ProfileKind::Tabulated) {
    if (!(z >= 0.0)) fail(ErrorKind::OutOfDomain, "Z = " + std::to_string(z) + " outside profile domain");
    std::array<double, 5> out{};
    if (z > table_->back()) {
      out[0] = u_plus_;
      return out;
    }
    const int order = std::min(4, table_->degree() - 1);
    const auto d = table_->derivatives(z, order);
    for (int k = 0; k <= order; ++k) out[static_cast<std::size_t>(k)] = d[static_cast<std::size_t>(k)];
    return out;
  }
  std::array<double, 5> out{};
  for (int k = 0; k < 5; ++k) out[static_cast<std::size_t>(k)] = eval(z, k);
  return out;
}

cplx ShearProfile::eval(cplx z, int order) const {
  if (order < 0 || order > 4) fail(ErrorKind::DerivativeUnavailable, "order must be in 0..4");
  if (kind_ == ProfileKind::Tabulated) {
    if (z.imag() == 0.0) return eval(z.real(), order);
    fail(ErrorKind::UnsupportedKind, "tabulated profiles cannot be evaluated off the real axis");
  }
  return closed_form<cplx>(kind_, u_plus_, eta_, param_, z, order);
}

std::vector<cplx> ShearProfile::taylor(cplx z0, int count) const {
  std::vector<cplx> c(static_cast<std::size_t>(std::max(count, 0)), cplx(0.0));
  if (count <= 0) return c;
  auto at = [&](int k) -> cplx& { return c[static_cast<std::size_t>(k)]; };
  switch (kind_) {
    case ProfileKind::Exponential: {
      const cplx e = std::exp(-eta_ * z0);
      at(0) = u_plus_ * (1.0 - e);
      cplx f = -u_plus_ * e;
      for (int k = 1; k < count; ++k) {
        f *= -eta_ / double(k);
        at(k) = f;
      }
      break;
    }
    case ProfileKind::TanhInflection: {
      const double ta = std::tanh(param_);
      const double norm = u_plus_ / (1.0 + ta);
      std::vector<cplx> t(static_cast<std::size_t>(count));
      t[0] = std::tanh(z0 - param_);
      for (int k = 0; k + 1 < count; ++k) {
        cplx conv(0.0);
        for (int j = 0; j <= k; ++j) conv += t[static_cast<std::size_t>(j)] * t[static_cast<std::size_t>(k - j)];
        t[static_cast<std::size_t>(k + 1)] = ((k == 0 ? 1.0 : 0.0) - conv) / double(k + 1);
      }
      for (int k = 0; k < count; ++k) at(k) = norm * t[static_cast<std::size_t>(k)];
      at(0) += norm * ta;
      break;
    }
    case ProfileKind::ErfHeat: {
      const double t = param_;
      // U' = u_plus / sqrt(pi t) exp(-(z0 + h)^2 / 4t); expand exp(P(h)).
      const cplx p1 = -z0 / (2.0 * t);
      const double p2 = -1.0 / (4.0 * t);
      std::vector<cplx> e(static_cast<std::size_t>(count));
      e[0] = 1.0;
      for (int k = 0; k + 1 < count; ++k) {
        cplx acc = p1 * e[static_cast<std::size_t>(k)];
        if (k >= 1) acc += 2.0 * p2 * e[static_cast<std::size_t>(k - 1)];
        e[static_cast<std::size_t>(k + 1)] = acc / double(k + 1);
      }
      const cplx pref = u_plus_ / std::sqrt(std::numbers::pi * t) * std::exp(-z0 * z0 / (4.0 * t));
      at(0) = eval(z0, 0);
      for (int k = 1; k < count; ++k) at(k) = pref * e[static_cast<std::size_t>(k - 1)] / double(k);
      break;
    }
    case ProfileKind::ChannelParabolic:
    case ProfileKind::PoiseuilleCentered: {
      for (int k = 0; k < std::min(count, 3); ++k) {
        double fact = 1.0;
        for (int j = 2; j <= k; ++j) fact *= j;
        at(k) = eval(z0, k) / fact;
      }
      break;
    }
    case ProfileKind::Tabulated: {
      if (z0.imag() != 0.0)
        fail(ErrorKind::UnsupportedKind, "tabulated profiles cannot be expanded off the real axis");
      const int order = std::min(table_->degree(), count - 1);
      const auto d = table_->derivatives(z0.real(), order);
      double fact = 1.0;
      for (int k = 0; k <= order; ++k) {
        if (k > 1) fact *= k;
        at(k) = d[static_cast<std::size_t>(k)] / fact;
      }
      break;
    }
  }
  return c;
}

namespace {

// ∫_{s0}^{s1} G(w - x) (a + b w) dw with the heat kernel G of variance 2t.
double kernel_linear(double x, double s0, double s1, double a, double b, double t) {
  const double sq = 2.0 * std::sqrt(t);
  const double w0 = s0 - x;
  const double w1 = s1 - x;
  const double mass = 0.5 * (std::erf(w1 / sq) - std::erf(w0 / sq));
  const double g0 = std::exp(-w0 * w0 / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
  const double g1 = std::exp(-w1 * w1 / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
  const double first_moment = -2.0 * t * (g1 - g0);  // ∫ (w - x) G
  return (a + b * x) * mass + b * first_moment;
}

}  // namespace

ShearProfile ShearProfile::heat_evolve(double t) const {
  if (t < 0) fail(ErrorKind::InvalidArgument, "heat_evolve needs t >= 0");
  if (is_channel()) fail(ErrorKind::UnsupportedKind, "heat_evolve is defined on the half-line only");
  if (t == 0.0) return *this;
  if (kind_ == ProfileKind::ErfHeat) {
    ShearProfile p = erf_heat(param_ + t, u_plus_);
    p.z_max_ = std::max(p.z_max_, z_max_);
    return p;
  }

  // Initial data as a piecewise-linear function; the odd reflection makes the
  // Dirichlet condition at Z = 0 exact.
  std::vector<double> zs, us;
  if (kind_ == ProfileKind::Tabulated) {
    zs = table_->z();
    us = table_->u();
  } else {
    const int n = 16001;
    zs.resize(n);
    us.resize(n);
    for (int i = 0; i < n; ++i) {
      zs[static_cast<std::size_t>(i)] = z_max_ * double(i) / (n - 1);
      us[static_cast<std::size_t>(i)] = eval(zs[static_cast<std::size_t>(i)], 0);
    }
  }
  const double tail = us.back();

  auto evolved = [&](double x) {
    if (x == 0.0) return 0.0;
    double total = 0.0;
    // Constant continuation beyond the last sample, reflected.
    const double sq = 2.0 * std::sqrt(t);
    const double zl = zs.back();
    total += tail * 0.5 * (std::erfc((zl - x) / sq) - std::erfc((zl + x) / sq));
    for (std::size_t j = 0; j + 1 < zs.size(); ++j) {
      const double s0 = zs[j], s1 = zs[j + 1];
      const double b = (us[j + 1] - us[j]) / (s1 - s0);
      const double a = us[j] - b * s0;
      // Skip panels whose kernel weight is negligible.
      // The reflected image lies farther away than the direct one.
      if (s0 - x > 12.0 * std::sqrt(t) || x - s1 > 12.0 * std::sqrt(t)) continue;
      total += kernel_linear(x, s0, s1, a, b, t);
      total -= kernel_linear(-x, s0, s1, a, b, t);
    }
    return total;
  };

  const double zmax = std::max(z_max_, zs.back());
  const int n_out = 801;
  std::vector<double> zo(n_out), uo(n_out);
  for (int i = 0; i < n_out; ++i) {
    // Quadratic clustering toward the wall, where the evolved profile bends.
    const double s = double(i) / (n_out - 1);
    zo[static_cast<std::size_t>(i)] = zmax * s * s;
    uo[static_cast<std::size_t>(i)] = evolved(zo[static_cast<std::size_t>(i)]);
  }
  uo[0] = 0.0;
  ShearProfile p = tabulated(std::move(zo), std::move(uo));
  p.z_max_ = std::max(p.z_max_, z_max_);
  return p;
}

std::array<double, 5> ShearProfile::decay_certificate(int samples) const {
  if (is_channel()) fail(ErrorKind::UnsupportedKind, "decay certificate applies to half-line profiles");
  std::array<double, 5> sup{};
  const double zend = kTruncationDecades / eta_;
  for (int i = 0; i < samples; ++i) {
    const double z = zend * double(i) / (samples - 1);
    const auto d = derivatives(z);
    const double w = std::exp(eta_ * z);
    for (int k = 0; k < 5; ++k) {
      const double v = k == 0 ? d[0] - u_plus_ : d[static_cast<std::size_t>(k)];
      sup[static_cast<std::size_t>(k)] = std::max(sup[static_cast<std::size_t>(k)], std::abs(v) * w);
    }
  }
  return sup;
}

std::string ShearProfile::id() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << to_string(kind_) << "(";
  switch (kind_) {
    case ProfileKind::Exponential: os << "u_plus=" << u_plus_ << ",eta=" << eta_; break;
    case ProfileKind::ErfHeat: os << "u_plus=" << u_plus_ << ",t=" << param_; break;
    case ProfileKind::TanhInflection: os << "u_plus=" << u_plus_ << ",a=" << param_; break;
    case ProfileKind::ChannelParabolic: os << "height=" << param_; break;
    case ProfileKind::PoiseuilleCentered: break;
    case ProfileKind::Tabulated: os << "samples=" << table_->z().size(); break;
  }
  os << ")";
  return os.str();
}

}  // namespace shearstab
