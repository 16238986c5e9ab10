#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace shearstab {

enum class ProfileKind {
  Exponential,       // u_plus (1 - exp(-eta Z))
  ErfHeat,           // u_plus erf(Z / (2 sqrt(t))), self-similar heat solution
  TanhInflection,    // u_plus (tanh(Z - a) + tanh a) / (1 + tanh a)
  ChannelParabolic,  // z (2 - z) / ... scaled to the requested height
  PoiseuilleCentered,  // z^2 - 1 written in wall coordinates, opt-in
  Tabulated,         // quintic spline through (Z, U) samples
};

const char* to_string(ProfileKind kind) noexcept;
ProfileKind profile_kind_from_string(const std::string& name);

enum class DomainKind { HalfLine, Channel };

class TabulatedData;

/// Background shear flow U(Z). Immutable after construction.
class ShearProfile {
 public:
  static ShearProfile exponential(double u_plus = 1.0, double eta = 1.0);
  static ShearProfile erf_heat(double t, double u_plus = 1.0);
  static ShearProfile tanh_inflection(double a, double u_plus = 1.0);
  /// Plane Poiseuille flow with zero velocity at Z = 0 and Z = height and
  /// unit centreline speed.
  static ShearProfile channel_parabolic(double height = 2.0);
  /// The centred form U(z) = z^2 - 1, |z| < 1, re-expressed on [0, 2].
  static ShearProfile poiseuille_centered();
  static ShearProfile tabulated(std::vector<double> z, std::vector<double> u);
  /// Two-column whitespace-separated text, '#' starts a comment.
  static ShearProfile load_tabulated(const std::filesystem::path& path);

  ProfileKind kind() const noexcept { return kind_; }
  DomainKind domain() const noexcept { return domain_; }
  bool is_channel() const noexcept { return domain_ == DomainKind::Channel; }

  /// ∂^order U at real Z, order in 0..4.
  double eval(double z, int order = 0) const;
  /// U, U', ..., U'''' at once.
  std::array<double, 5> derivatives(double z) const;

  /// Analytic continuation to complex Z (closed-form kinds only).
  std::complex<double> eval(std::complex<double> z, int order = 0) const;
  bool supports_complex() const noexcept { return kind_ != ProfileKind::Tabulated; }
  /// Taylor coefficients U_k with U(z0 + h) = sum_k U_k h^k, k < count.
  std::vector<std::complex<double>> taylor(std::complex<double> z0, int count) const;

  double u_plus() const noexcept { return u_plus_; }
  double eta() const noexcept { return eta_; }
  double wall_value() const { return eval(0.0, 0); }
  double wall_shear() const { return eval(0.0, 1); }
  /// Channel height; +infinity on the half-line.
  double height() const noexcept;
  /// Truncation of the half-line, max(40/eta, 40) unless overridden.
  double z_max() const noexcept { return z_max_; }
  ShearProfile with_truncation(double z_max) const;

  double heat_time() const noexcept { return param_; }  // ErfHeat
  double shift() const noexcept { return param_; }      // TanhInflection

  /// Advances the profile by the half-line Dirichlet heat semigroup.
  ShearProfile heat_evolve(double t) const;

  /// max over Z in [0, 40/eta] of |∂^k (U - u_plus)| e^(eta Z), k = 0..4.
  std::array<double, 5> decay_certificate(int samples = 8192) const;

  /// Short human-readable identifier, e.g. "Exponential(u_plus=1,eta=1)".
  std::string id() const;

 private:
  ShearProfile() = default;

  ProfileKind kind_ = ProfileKind::Exponential;
  DomainKind domain_ = DomainKind::HalfLine;
  double u_plus_ = 1.0;
  double eta_ = 1.0;
  double param_ = 0.0;   // t for ErfHeat, a for TanhInflection, height for channels
  double z_max_ = 40.0;
  std::shared_ptr<const TabulatedData> table_;
};

}  // namespace shearstab
