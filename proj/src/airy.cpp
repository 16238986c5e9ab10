#include "shearstab/airy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "shearstab/errors.hpp"

namespace shearstab {

using cplx = std::complex<double>;

namespace {

using quad = __float128;

// Minimal complex arithmetic in binary128, enough for the Maclaurin sums.
struct qcplx {
  quad re = 0, im = 0;
  qcplx() = default;
  qcplx(quad r, quad i = 0) : re(r), im(i) {}
  explicit qcplx(cplx z) : re(z.real()), im(z.imag()) {}
  qcplx operator+(const qcplx& o) const { return {re + o.re, im + o.im}; }
  qcplx operator-(const qcplx& o) const { return {re - o.re, im - o.im}; }
  qcplx operator*(const qcplx& o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
  qcplx operator*(quad s) const { return {re * s, im * s}; }
  qcplx operator/(quad s) const { return {re / s, im / s}; }
  qcplx& operator+=(const qcplx& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  double abs() const { return std::hypot(double(re), double(im)); }
  cplx to_cplx() const { return {double(re), double(im)}; }
};

// Ai(0) and -Ai'(0) as double-double pairs.
const quad kC1 = quad(0.3550280538878172) + quad(2.05233632436212e-17);
const quad kC2 = quad(0.2588194037928068) + quad(-2.522243111610832e-17);
constexpr double kQuadEps = 1e-33;
constexpr double kDoubleEps = 2.2e-16;

struct Series {
  cplx ai, ai1, ai2, aip, aipp;
  double err_ai, err_ai1, err_ai2, err_aip;
};

// Ai = c1 f - c2 g with f = sum c_k z^{3k}, g = sum d_k z^{3k+1}; the
// primitives integrate the same sums termwise from 0.
Series maclaurin(cplx y) {
  const qcplx z(y);
  const qcplx z2 = z * z;
  const qcplx z3 = z2 * z;
  qcplx a(1.0), d(1.0);  // c_k z^{3k}, d_k z^{3k}
  qcplx f, g, f1, g1, f2, g2, fp, gp, fpp, gpp;
  double big = 0.0;
  const double r = std::abs(y);
  const double rr = std::max({1.0, r, r * r, r * r * r});
  qcplx a_prev, d_prev;
  for (int k = 0; k < 500; ++k) {
    const quad q = k;
    f += a;
    g += d * z;
    f1 += a * z / (3 * q + 1);
    g1 += d * z2 / (3 * q + 2);
    f2 += a * z2 / ((3 * q + 1) * (3 * q + 2));
    g2 += d * z3 / ((3 * q + 2) * (3 * q + 3));
    gp += d * (3 * q + 1);
    if (k >= 1) {
      const qcplx ash = a_prev / ((3 * q - 1) * (3 * q));  // c_k z^{3k-3}
      const qcplx dsh = d_prev / ((3 * q) * (3 * q + 1));  // d_k z^{3k-3}
      fp += ash * z2 * (3 * q);
      fpp += ash * z * (3 * q * (3 * q - 1));
      gpp += dsh * z2 * ((3 * q + 1) * 3 * q);
    }
    const double t = std::max(a.abs(), d.abs()) * rr * double(3 * k + 4);
    big = std::max(big, t);
    if (k > 3 && t < 1e-40 * big) break;
    a_prev = a;
    d_prev = d;
    a = a * z3 / ((3 * q + 2) * (3 * q + 3));
    d = d * z3 / ((3 * q + 3) * (3 * q + 4));
  }
  Series s;
  s.ai = (f * kC1 - g * kC2).to_cplx();
  s.ai1 = (qcplx(-quad(1) / 3) + f1 * kC1 - g1 * kC2).to_cplx();
  s.ai2 = (qcplx(kC2) - z / quad(3) + f2 * kC1 - g2 * kC2).to_cplx();
  s.aip = (fp * kC1 - gp * kC2).to_cplx();
  s.aipp = (fpp * kC1 - gpp * kC2).to_cplx();
  auto rel = [&](cplx v) { return kDoubleEps + kQuadEps * big / std::max(std::abs(v), 1e-300); };
  s.err_ai = rel(s.ai);
  s.err_ai1 = rel(s.ai1);
  s.err_ai2 = rel(s.ai2);
  s.err_aip = rel(s.aip);
  return s;
}

// Value m * exp(e), so large exponentials can be combined without overflow.
struct Scaled {
  cplx m;
  cplx e;
  double err;
};

cplx value(const Scaled& s) { return s.m * std::exp(s.e); }

// Exponentially decaying expansions, valid for |arg z| <= 2 pi / 3.
std::array<Scaled, 4> asymptotic(cplx z) {
  const cplx zeta = (2.0 / 3.0) * std::pow(z, 1.5);
  const cplx iz = 1.0 / zeta;
  const double pref = 0.5 / std::sqrt(std::numbers::pi);
  // u_k from the standard recurrence; g_k, h_k for the primitives.
  cplx sf(1.0), sg(1.0), sh(1.0), sv(1.0);
  double uk = 1.0, gk = 1.0, hk = 1.0;
  cplx pw(1.0);
  double last_f = 1.0, last_g = 1.0, last_h = 1.0, last_v = 1.0;
  double err_f = 0, err_g = 0, err_h = 0, err_v = 0;
  bool stop_f = false, stop_g = false, stop_h = false, stop_v = false;
  for (int k = 1; k <= 30; ++k) {
    uk *= double((6 * k - 5) * (6 * k - 3) * (6 * k - 1)) / (double(2 * k - 1) * 216.0 * k);
    const double fk = (k % 2 == 0 ? 1.0 : -1.0) * uk;
    gk = fk - (k - 0.5) * gk;
    hk = gk - (k - 1.0 / 6.0) * hk;
    const double vk = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * fk;
    pw *= iz;
    auto acc = [&](cplx& sum, double coef, double& last, bool& stop, double& err) {
      if (stop) return;
      const cplx term = coef * pw;
      const double mag = std::abs(term);
      if (mag > last) {  // optimal truncation: stop before terms grow
        stop = true;
        err = last;
        return;
      }
      sum += term;
      last = mag;
      err = mag;
    };
    acc(sf, fk, last_f, stop_f, err_f);
    acc(sg, gk, last_g, stop_g, err_g);
    acc(sh, hk, last_h, stop_h, err_h);
    acc(sv, vk, last_v, stop_v, err_v);
  }
  const cplx e = -zeta;
  Scaled ai{pref * std::pow(z, -0.25) * sf, e, err_f / std::abs(sf) + kDoubleEps};
  Scaled ai1{-pref * std::pow(z, -0.75) * sg, e, err_g / std::abs(sg) + kDoubleEps};
  Scaled ai2{pref * std::pow(z, -1.25) * sh, e, err_h / std::abs(sh) + kDoubleEps};
  Scaled aip{-pref * std::pow(z, 0.25) * sv, e, err_v / std::abs(sv) + kDoubleEps};
  return {ai, ai1, ai2, aip};
}

// c0 + c1 * s1 + c2 * s2 in scaled form.
Scaled combine(cplx c0, cplx c1, const Scaled& s1, cplx c2, const Scaled& s2) {
  const double emax = std::max(s1.e.real(), s2.e.real());
  const cplx e(emax, 0.0);
  const cplx m = c1 * s1.m * std::exp(s1.e - e) + c2 * s2.m * std::exp(s2.e - e) + c0 * std::exp(-emax);
  const double err = std::max(s1.err, s2.err);
  return {m, e, err};
}

// All four functions in scaled form, for |z| > series radius.
std::array<Scaled, 4> far_field(cplx z) {
  if (std::abs(std::arg(z)) <= 2.0 * std::numbers::pi / 3.0) return asymptotic(z);
  const cplx w = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const cplx w2 = w * w;
  const auto p = asymptotic(w * z);
  const auto q = asymptotic(w2 * z);
  // Ai(z) + w Ai(wz) + w^2 Ai(w^2 z) = 0 and its integrated forms.
  return {combine(0.0, -w, p[0], -w2, q[0]), combine(-1.0, -1.0, p[1], -1.0, q[1]),
          combine(-z, -w2, p[2], -w, q[2]), combine(0.0, -w2, p[3], -w, q[3])};
}

// The primitives' expansions are divergent with a relative floor near
// exp(-|zeta|); just past the series radius the binary128 series is still
// the more accurate of the two, and is kept while its own estimate says so.
constexpr double kPrimitiveSeriesLimit = 16.0;

bool series_for_primitives(cplx y, const Series& s) {
  if (std::abs(y) <= kAirySeriesRadius) return true;
  if (std::abs(y) > kPrimitiveSeriesLimit) return false;
  const double floor = std::exp(-(2.0 / 3.0) * std::pow(std::abs(y), 1.5));
  return std::max(s.err_ai1, s.err_ai2) < floor;
}

}  // namespace

AiryValue airy_eval(cplx y, AiryKind kind) {
  if (!(std::abs(y) < 1e4)) fail(ErrorKind::OutOfDomain, "Airy evaluation limited to |Y| < 1e4");
  AiryValue out;
  const bool primitive = kind == AiryKind::Ai1 || kind == AiryKind::Ai2;
  bool use_series = std::abs(y) <= kAirySeriesRadius;
  Series s{};
  if (primitive && !use_series && std::abs(y) <= kPrimitiveSeriesLimit) {
    s = maclaurin(y);
    use_series = series_for_primitives(y, s);
  } else if (use_series) {
    s = maclaurin(y);
  }
  if (use_series) {
    switch (kind) {
      case AiryKind::Ai: out.value = s.ai; out.error_estimate = s.err_ai; break;
      case AiryKind::Ai1: out.value = s.ai1; out.error_estimate = s.err_ai1; break;
      case AiryKind::Ai2: out.value = s.ai2; out.error_estimate = s.err_ai2; break;
      case AiryKind::AiPrime: out.value = s.aip; out.error_estimate = s.err_aip; break;
    }
  } else {
    const auto f = far_field(y);
    const Scaled& s = f[static_cast<std::size_t>(kind)];
    out.value = value(s);
    out.error_estimate = s.err;
  }
  out.accuracy_loss = out.error_estimate > 1e-10;
  return out;
}

AiryJet airy_jet(cplx y) {
  if (std::abs(y) <= kAirySeriesRadius) {
    const auto s = maclaurin(y);
    return {s.ai, s.ai1, s.ai2, s.aip, s.aipp};
  }
  const auto f = far_field(y);
  const cplx ai = value(f[0]);
  AiryJet j{ai, value(f[1]), value(f[2]), value(f[3]), y * ai};
  if (std::abs(y) <= kPrimitiveSeriesLimit) {
    const auto s = maclaurin(y);
    if (series_for_primitives(y, s)) {
      j.ai1 = s.ai1;
      j.ai2 = s.ai2;
    }
  }
  return j;
}

cplx tietjens(cplx y) {
  std::optional<Series> near;
  if (std::abs(y) <= kPrimitiveSeriesLimit) {
    near = maclaurin(y);
    if (!series_for_primitives(y, *near)) near.reset();
  }
  if (near) {
    const auto& s = *near;
    if (std::abs(s.ai1) < 1e-14 * std::max(1.0, std::abs(s.ai2)))
      fail(ErrorKind::DenominatorZero, "Ai1 vanishes near this argument");
    return s.ai2 / s.ai1;
  }
  const auto f = far_field(y);
  if (std::abs(f[1].m) < 1e-14 * std::abs(f[2].m))
    fail(ErrorKind::DenominatorZero, "Ai1 vanishes near this argument");
  return f[2].m / f[1].m * std::exp(f[2].e - f[1].e);
}

cplx tietjens_derivative(cplx y) {
  // T' = 1 - T Ai / Ai1.
  cplx ratio;
  if (std::abs(y) <= kPrimitiveSeriesLimit && series_for_primitives(y, maclaurin(y))) {
    const auto s = maclaurin(y);
    ratio = s.ai / s.ai1;
  } else {
    const auto f = far_field(y);
    ratio = f[0].m / f[1].m * std::exp(f[0].e - f[1].e);
  }
  return 1.0 - tietjens(y) * ratio;
}

}  // namespace shearstab
