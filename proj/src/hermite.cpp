#include "shearstab/hermite.hpp"

#include <array>
#include <mutex>

#include <Eigen/Dense>

#include "shearstab/errors.hpp"

namespace shearstab {

namespace {

// Inverse of the confluent Vandermonde system on t in [-1, 1] for the
// monomial basis t^0 .. t^(2m-1); one per m, built once.
const Eigen::MatrixXd& hermite_inverse(std::size_t m) {
  static std::array<Eigen::MatrixXd, 7> cache;
  static std::once_flag flags[7];
  std::call_once(flags[m], [m] {
    const auto n = static_cast<Eigen::Index>(2 * m);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t side = 0; side < 2; ++side) {
      const double t = side == 0 ? -1.0 : 1.0;
      for (std::size_t k = 0; k < m; ++k) {
        const auto row = static_cast<Eigen::Index>(side * m + k);
        for (Eigen::Index p = static_cast<Eigen::Index>(k); p < n; ++p) {
          double coef = 1.0;
          for (std::size_t j = 0; j < k; ++j) coef *= double(p) - double(j);
          a(row, p) = coef * std::pow(t, double(p) - double(k));
        }
      }
    }
    cache[m] = a.inverse();
  });
  return cache[m];
}

}  // namespace

std::vector<std::complex<double>> hermite_midpoint(std::size_t m, double h,
                                                   const std::complex<double>* left,
                                                   const std::complex<double>* right) {
  if (m == 0 || m > 6) fail(ErrorKind::InvalidArgument, "hermite_midpoint supports 1..6 derivatives");
  const auto& inv = hermite_inverse(m);
  const auto n = static_cast<Eigen::Index>(2 * m);
  const double half = 0.5 * h;
  Eigen::VectorXcd rhs(n);
  double scale = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    rhs(static_cast<Eigen::Index>(k)) = left[k] * scale;
    rhs(static_cast<Eigen::Index>(m + k)) = right[k] * scale;
    scale *= half;
  }
  const Eigen::VectorXcd coef = inv.cast<std::complex<double>>() * rhs;
  // At t = 0 the k-th derivative is k! * coef_k, rescaled back to x.
  std::vector<std::complex<double>> out(m);
  double fact = 1.0;
  double inv_scale = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (k > 0) fact *= double(k);
    out[k] = fact * coef(static_cast<Eigen::Index>(k)) * inv_scale;
    inv_scale /= half;
  }
  return out;
}

}  // namespace shearstab
