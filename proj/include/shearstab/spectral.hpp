#pragma once

#include <optional>

namespace shearstab {

/// alpha = A R^(-beta).
struct Scaling {
  double A = 1.0;
  double beta = 0.25;
};

/// Wavenumber and Reynolds number, R = 1 / sqrt(nu).
struct SpectralParams {
  double alpha = 0.0;
  double reynolds = 0.0;
  std::optional<Scaling> scaling;

  static SpectralParams fixed(double alpha, double reynolds);
  static SpectralParams scaled(double A, double beta, double reynolds);
  static SpectralParams from_viscosity(double alpha, double nu);

  double nu() const noexcept { return 1.0 / (reynolds * reynolds); }
  /// Raises InvalidArgument when the invariants do not hold.
  void validate() const;
};

}  // namespace shearstab
