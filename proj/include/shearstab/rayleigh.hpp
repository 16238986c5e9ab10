#pragma once

#include <array>
#include <complex>
#include <vector>

#include "shearstab/eigenpair.hpp"
#include "shearstab/profiles.hpp"

namespace shearstab {

struct RayleighOptions {
  double tol = 1e-12;  // Newton target on |D| relative to the solution scale
  int max_iterations = 50;
  double rtol = 1e-12;
  double output_step = 0.01;  // base spacing of the returned real grid
};

/// Inviscid eigenpair in (alpha, c) starting from `c_guess` with Im c > 0.
Eigenpair solve_rayleigh(const ShearProfile& profile, double alpha, std::complex<double> c_guess,
                         const RayleighOptions& opts = {});

/// Wall value of the decaying solution (the Rayleigh miss distance) and its
/// c-derivative, under the same normalization as decaying_solution_phi1alpha.
struct RayleighMiss {
  std::complex<double> value;
  std::complex<double> derivative_c;
  double scale;  // max |phi| along the path
};
RayleighMiss rayleigh_miss_distance(const ShearProfile& profile, double alpha, std::complex<double> c);

/// (phi, phi') at Z = 0 of the solution decaying like exp(-alpha Z),
/// normalized to (u_plus - c) exp(-alpha Z) at infinity, together with
/// their c-derivatives.
struct Phi1Alpha {
  std::complex<double> phi;
  std::complex<double> dphi;
  std::complex<double> phi_c;   // d phi(0) / dc
  std::complex<double> dphi_c;  // d phi'(0) / dc
};
Phi1Alpha decaying_solution_phi1alpha_full(const ShearProfile& profile, double alpha,
                                           std::complex<double> c);
inline std::pair<std::complex<double>, std::complex<double>> decaying_solution_phi1alpha(
    const ShearProfile& profile, double alpha, std::complex<double> c) {
  const auto r = decaying_solution_phi1alpha_full(profile, alpha, c);
  return {r.phi, r.dphi};
}

enum class LogBranch { BelowCut, AboveCut };

/// Local solution pair near a critical point z_c (U(z_c) = c):
///   regular  phi_a = sum a_k (Z - z_c)^k, a_0 = 0, a_1 = 1
///   singular phi_2 = P1(Z) + (Z - z_c) log(Z - z_c) P2(Z), P1(z_c) = 1
/// with P2 = K phi_a / (Z - z_c), K = U''(z_c) / U'(z_c).
struct FrobeniusSolution {
  std::complex<double> z_c;
  std::complex<double> c;
  double alpha = 0.0;
  double radius = 0.0;
  std::vector<std::complex<double>> P1_coeffs;
  std::vector<std::complex<double>> P2_coeffs;
  std::vector<std::complex<double>> regular_coeffs;  // phi_a
  LogBranch log_branch = LogBranch::BelowCut;

  std::complex<double> log_factor(std::complex<double> z) const;
  /// Value, first and second derivative of phi_2 at z.
  std::array<std::complex<double>, 3> singular(std::complex<double> z) const;
  std::array<std::complex<double>, 3> regular(std::complex<double> z) const;
};

FrobeniusSolution frobenius_pair(const ShearProfile& profile, std::complex<double> c, double alpha,
                                 int n_terms = 30);

/// Real z with U(z) = Re c; raises MultipleCriticalPoints for non-monotone U.
double find_critical_point(const ShearProfile& profile, std::complex<double> c);
/// All real solutions of U(z) = Re c in the (truncated) domain.
std::vector<double> find_critical_points(const ShearProfile& profile, double c_real);
/// Complex root of U(z) = c continued from the real critical point of Re c,
/// or from `guess` when provided.
std::complex<double> find_complex_critical_point(const ShearProfile& profile, std::complex<double> c);
std::complex<double> find_complex_critical_point(const ShearProfile& profile, std::complex<double> c,
                                                 std::complex<double> guess);

}  // namespace shearstab
