#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace shearstab {

/// Two-point Hermite interpolation: given f, f', ..., f^(m-1) at both ends
/// of a cell of width h, returns f, ..., f^(m-1) of the degree 2m-1
/// interpolant at the cell midpoint. Used to audit sampled eigenfunctions
/// against their ODE between nodes. m <= 6.
std::vector<std::complex<double>> hermite_midpoint(std::size_t m, double h,
                                                   const std::complex<double>* left,
                                                   const std::complex<double>* right);

}  // namespace shearstab
