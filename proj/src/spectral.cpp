#include "shearstab/spectral.hpp"

#include <cmath>

#include "shearstab/errors.hpp"

namespace shearstab {

SpectralParams SpectralParams::fixed(double alpha, double reynolds) {
  SpectralParams p;
  p.alpha = alpha;
  p.reynolds = reynolds;
  p.validate();
  return p;
}

SpectralParams SpectralParams::scaled(double A, double beta, double reynolds) {
  if (!(A > 0)) fail(ErrorKind::InvalidArgument, "scaling amplitude A must be positive");
  if (!(beta >= 1.0 / 6.0 - 1e-12 && beta <= 0.25 + 1e-12))
    fail(ErrorKind::InvalidArgument, "scaling exponent beta must lie in [1/6, 1/4]");
  SpectralParams p;
  p.reynolds = reynolds;
  p.alpha = A * std::pow(reynolds, -beta);
  p.scaling = Scaling{A, beta};
  p.validate();
  return p;
}

SpectralParams SpectralParams::from_viscosity(double alpha, double nu) {
  if (!(nu > 0)) fail(ErrorKind::InvalidArgument, "viscosity must be positive");
  return fixed(alpha, 1.0 / std::sqrt(nu));
}

void SpectralParams::validate() const {
  if (!(alpha > 0) || !std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "alpha must be positive");
  if (!(reynolds > 0) || !std::isfinite(reynolds)) fail(ErrorKind::InvalidArgument, "R must be positive");
  if (scaling) {
    const double expect = scaling->A * std::pow(reynolds, -scaling->beta);
    if (std::abs(alpha - expect) > 1e-14 * alpha)
      fail(ErrorKind::InvalidArgument, "alpha is inconsistent with the scaling A R^(-beta)");
  }
}

}  // namespace shearstab
