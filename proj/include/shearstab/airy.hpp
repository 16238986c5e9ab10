#pragma once

#include <complex>

namespace shearstab {

enum class AiryKind { Ai, Ai1, Ai2, AiPrime };

/// Ai and its primitives normalized to vanish at +infinity:
///   Ai1(Y) = -int_Y^inf Ai,  Ai2(Y) = -int_Y^inf Ai1.
struct AiryValue {
  std::complex<double> value;
  double error_estimate = 0.0;  // relative
  bool accuracy_loss = false;   // error_estimate > 1e-10
};

AiryValue airy_eval(std::complex<double> y, AiryKind kind);
inline std::complex<double> airy(std::complex<double> y, AiryKind kind) { return airy_eval(y, kind).value; }

/// Ai, Ai', Ai'' from independent evaluations (series region: termwise
/// differentiation; elsewhere Ai'' = Y Ai).
struct AiryJet {
  std::complex<double> ai, ai1, ai2, aip, aipp;
};
AiryJet airy_jet(std::complex<double> y);

/// T(Y) = Ai2(Y) / Ai1(Y); safe for large |Y| where both factors overflow.
std::complex<double> tietjens(std::complex<double> y);
/// dT/dY = (Ai1^2 - Ai2 Ai) / Ai1^2.
std::complex<double> tietjens_derivative(std::complex<double> y);

/// Radius below which the Maclaurin series is used.
inline constexpr double kAirySeriesRadius = 9.0;

}  // namespace shearstab
