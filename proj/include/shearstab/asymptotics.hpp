#pragma once

#include <complex>
#include <optional>

#include "shearstab/profiles.hpp"
#include "shearstab/spectral.hpp"

namespace shearstab {

/// Viscous critical layer around z_c, U(z_c) = c, of complex width
/// delta = (i alpha R U'(z_c))^(-1/3) (principal root).
struct CriticalLayer {
  std::complex<double> z_c;
  std::complex<double> delta;
  std::complex<double> u_prime_c;

  std::complex<double> map(std::complex<double> z) const { return (z - z_c) / delta; }
  /// Y at the wall, -z_c / delta.
  std::complex<double> wall_argument() const { return -z_c / delta; }
};

CriticalLayer critical_layer(const ShearProfile& profile, double alpha, double reynolds, std::complex<double> c);

enum class Regime { LowerBranch, Interior };
const char* to_string(Regime r) noexcept;

/// Left-hand side of the dispersion relation: the decaying inviscid
/// solution with its O(alpha) correction, or the bare (U0 - c)/U0' ratio
/// (diagnostic).
enum class InviscidSide { Phi1Alpha, Phi1 };

struct AsymptoticOptions {
  InviscidSide left = InviscidSide::Phi1Alpha;
  int max_iterations = 60;
  double tol = 1e-13;  // relative residual target
  std::optional<std::complex<double>> c_guess;
};

struct AsymptoticPrediction {
  std::complex<double> c_pred;
  std::complex<double> z_c;
  std::complex<double> delta;
  std::complex<double> tietjens_arg;         // -z_c / delta
  std::complex<double> dispersion_residual;  // relative to the larger side
  Regime regime = Regime::Interior;
  bool outside_asymptotic_range = false;     // |z_c / delta| < 1 at the root
  int iterations = 0;
  /// |phi/phi' - [(U0 - c)/U0' + alpha (u_plus - U0)^2 / U0'^2]| relative to |phi/phi'|.
  double expansion_gap = 0.0;
  /// |delta| |T(Y) - (1 + |Y|)^(-1/2)|: size of the error of the algebraic surrogate.
  double surrogate_error = 0.0;
};

/// Newton solution of phi(0)/phi'(0) = delta T(-z_c/delta) for c.
AsymptoticPrediction predict_lower_branch(const ShearProfile& profile, const SpectralParams& params,
                                          const AsymptoticOptions& opts = {});

struct ThresholdOptions {
  double a_lo = 0.1;
  double a_hi = 100.0;
  int scan_points = 61;  // log-spaced bracket scan
  double rel_tol = 1e-10;
};

/// Amplitude A at which Im c_pred changes sign along alpha = A R^(-1/4).
double find_A1c(const ShearProfile& profile, double reynolds, const ThresholdOptions& opts = {});

}  // namespace shearstab
