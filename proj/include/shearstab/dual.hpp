#pragma once

#include <complex>

namespace shearstab {

using cplx = std::complex<double>;

/// Forward-mode derivative carrier over the complex field: `d` holds the
/// derivative of `v` with respect to one complex parameter. Only holomorphic
/// operations are provided, so derivatives propagated through a computation
/// are exact complex derivatives (no conjugation, no modulus).
struct Dual {
  cplx v{};
  cplx d{};

  constexpr Dual() = default;
  constexpr Dual(cplx value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(cplx value, cplx deriv) : v(value), d(deriv) {}

  static constexpr Dual variable(cplx value) { return {value, cplx(1.0)}; }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    const cplx inv = 1.0 / o.v;
    v *= inv;
    d = (d - v * o.d) * inv;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

inline Dual operator*(const Dual& a, cplx s) { return {a.v * s, a.d * s}; }
inline Dual operator*(cplx s, const Dual& a) { return {a.v * s, a.d * s}; }
inline Dual operator*(const Dual& a, double s) { return {a.v * s, a.d * s}; }
inline Dual operator*(double s, const Dual& a) { return {a.v * s, a.d * s}; }
inline Dual operator+(const Dual& a, cplx s) { return {a.v + s, a.d}; }
inline Dual operator+(cplx s, const Dual& a) { return {a.v + s, a.d}; }
inline Dual operator-(const Dual& a, cplx s) { return {a.v - s, a.d}; }
inline Dual operator-(cplx s, const Dual& a) { return {s - a.v, -a.d}; }
inline Dual operator+(const Dual& a, double s) { return {a.v + s, a.d}; }
inline Dual operator+(double s, const Dual& a) { return {a.v + s, a.d}; }
inline Dual operator-(const Dual& a, double s) { return {a.v - s, a.d}; }
inline Dual operator-(double s, const Dual& a) { return {s - a.v, -a.d}; }
inline Dual operator/(const Dual& a, cplx s) { return {a.v / s, a.d / s}; }
inline Dual operator/(const Dual& a, double s) { return {a.v / s, a.d / s}; }
inline Dual operator/(cplx s, const Dual& a) {
  const cplx r = s / a.v;
  return {r, -r * a.d / a.v};
}
inline Dual operator/(double s, const Dual& a) { return cplx(s) / a; }

inline Dual sqrt(const Dual& a) {
  const cplx r = std::sqrt(a.v);
  return {r, a.d / (2.0 * r)};
}
inline Dual exp(const Dual& a) {
  const cplx e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual pow(const Dual& a, double p) {
  const cplx r = std::pow(a.v, p);
  return {r, p * r / a.v * a.d};
}

// Uniform access to the primal value, used by step-size control.
inline cplx primal(const cplx& x) { return x; }
inline std::complex<long double> primal(const std::complex<long double>& x) { return x; }
inline cplx primal(const Dual& x) { return x.v; }

inline cplx derivative(const cplx&) { return {}; }
inline cplx derivative(const Dual& x) { return x.d; }

}  // namespace shearstab
