#pragma once

#include <complex>
#include <vector>

#include "shearstab/eigenpair.hpp"
#include "shearstab/profiles.hpp"
#include "shearstab/spectral.hpp"

namespace shearstab {

struct OSOptions {
  double rtol = 1e-10;  // integrator tolerances on the renormalized compound vector
  double atol = 1e-12;
  double tol = 1e-12;   // Newton target on |D| / conditioning
  double step_tol = 1e-11;  // or a relative Newton step below this
  int max_iterations = 40;
  bool reconstruct = true;  // second pass for the eigenfunction
  double output_fraction = 0.25;  // output spacing in units of the local fast scale
  double output_step = 0.05;      // coarsest output spacing
  double polish_factor = 1e-3;    // tolerance ratio of the final eigenvalue polish
  double eigen_rtol = 1e-16;      // extended-precision eigenfunction pass
};

/// Dispersion function D(c) for fixed (alpha, R).
///
/// The full determinant is value * exp(log_scale); the exponential factor is
/// split off so that |value| stays O(1). derivative_c is scaled the same way.
struct MissDistance {
  std::complex<double> value;
  std::complex<double> derivative_c;
  double conditioning = 1.0;  // sup norm of the renormalized compound vector at the wall
  double log_scale = 0.0;
};

/// Half-line miss distance: integration of the 2x2-minor system of the two
/// decaying far-field solutions from z_max down to the wall.
MissDistance miss_distance(const ShearProfile& profile, const SpectralParams& params,
                           std::complex<double> c, const OSOptions& opts = {});

/// Channel miss distance: shooting from the wall(s) to the midline.
MissDistance miss_distance_channel(const ShearProfile& profile, const SpectralParams& params,
                                   std::complex<double> c, Parity parity, const OSOptions& opts = {});

Eigenpair solve_os(const ShearProfile& profile, const SpectralParams& params,
                   std::complex<double> c_guess, const OSOptions& opts = {});

Eigenpair solve_os_channel(const ShearProfile& profile, const SpectralParams& params,
                           std::complex<double> c_guess, Parity parity, const OSOptions& opts = {});

/// Axis-aligned rectangle in the complex c plane.
struct CRect {
  double re_lo, re_hi, im_lo, im_hi;
};

/// Number of zeros of D inside `rect`, from the accumulated phase of D along
/// the boundary (`samples` points, refined where the phase jumps).
int winding_number(const ShearProfile& profile, const SpectralParams& params, const CRect& rect,
                   int samples = 400, Parity parity = Parity::None, const OSOptions& opts = {});

/// Zeros of D in `rect`, located by recursive winding-number bisection and
/// polished by Newton. Used as the default guess when no asymptotic seed is
/// available.
std::vector<std::complex<double>> scan_zeros(const ShearProfile& profile, const SpectralParams& params,
                                             const CRect& rect, int max_depth = 6,
                                             Parity parity = Parity::None, const OSOptions& opts = {});

/// Real part of the perpendicular gradient of psi = phi(Z) exp(i alpha (X - c t)):
/// u = d psi / dZ, w = -d psi / dX, on pair.grid x x_samples.
struct VelocityField {
  std::vector<double> z;
  std::vector<double> x;
  double t = 0.0;
  std::vector<std::vector<double>> u;  // u[iz][ix]
  std::vector<std::vector<double>> w;
};

VelocityField reconstruct_velocity(const Eigenpair& pair, const SpectralParams& params, double t,
                                   const std::vector<double>& x_samples);

}  // namespace shearstab
