#include "shearstab/errors.hpp"

namespace shearstab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::DerivativeUnavailable: return "DerivativeUnavailable";
    case ErrorKind::UnsupportedKind: return "UnsupportedKind";
    case ErrorKind::NoInflection: return "NoInflection";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SpectralCollision: return "SpectralCollision";
    case ErrorKind::SingularPath: return "SingularPath";
    case ErrorKind::DegenerateCriticalPoint: return "DegenerateCriticalPoint";
    case ErrorKind::NoCriticalPoint: return "NoCriticalPoint";
    case ErrorKind::MultipleCriticalPoints: return "MultipleCriticalPoints";
    case ErrorKind::StiffnessOverflow: return "StiffnessOverflow";
    case ErrorKind::WrongBranch: return "WrongBranch";
    case ErrorKind::ParityViolation: return "ParityViolation";
    case ErrorKind::DenominatorZero: return "DenominatorZero";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NoUnstableBand: return "NoUnstableBand";
    case ErrorKind::EdgeNotBracketed: return "EdgeNotBracketed";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace shearstab
