#pragma once

#include <span>

namespace shearstab {

/// Composite Simpson rule on an arbitrary increasing grid. Pairs of cells
/// use the three-point rule for unequal spacing; an odd leftover cell is
/// closed with the quadratic through its last three nodes.
template <class T>
T simpson(std::span<const double> x, std::span<const T> f) {
  const std::size_t n = x.size();
  T total{};
  if (n < 2) return total;
  if (n == 2) return (x[1] - x[0]) * (f[0] + f[1]) * 0.5;
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) {
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    const double hs = h0 + h1;
    total += hs / 6.0 *
             (f[i] * (2.0 - h1 / h0) + f[i + 1] * (hs * hs / (h0 * h1)) + f[i + 2] * (2.0 - h0 / h1));
  }
  if (i + 1 < n) {
    // Last cell [x_{n-2}, x_{n-1}] from the parabola through three nodes.
    const double h0 = x[n - 2] - x[n - 3];
    const double h1 = x[n - 1] - x[n - 2];
    const double w2 = h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
    const double w1 = h1 * (h1 + 3.0 * h0) / (6.0 * h0);
    const double w0 = -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
    total += f[n - 3] * w0 + f[n - 2] * w1 + f[n - 1] * w2;
  }
  return total;
}

}  // namespace shearstab
