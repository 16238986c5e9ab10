#pragma once

#include <complex>
#include <string>
#include <vector>

namespace shearstab {

enum class Parity { None, Even, Odd };

const char* to_string(Parity p) noexcept;

/// Converged eigenvalue with its eigenfunction sampled on a real grid.
struct Eigenpair {
  std::complex<double> c;
  double alpha = 0.0;
  double reynolds = 0.0;  // 0 for inviscid solves
  std::vector<double> grid;
  std::vector<std::complex<double>> phi;
  std::vector<std::complex<double>> phi_prime;
  // Filled by the viscous solvers only.
  std::vector<std::complex<double>> phi_pp;
  std::vector<std::complex<double>> phi_ppp;
  double residual = 0.0;     // relative ODE residual of the eigenfunction
  double bc_residual = 0.0;  // wall and far-field defects relative to max|phi|
  double continuity = 0.0;   // largest relative state jump between integration pieces
  int iterations = 0;
  Parity parity = Parity::None;
  double symmetry_residual = 0.0;  // channel modes only
};

}  // namespace shearstab
