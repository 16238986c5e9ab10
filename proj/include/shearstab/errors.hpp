#pragma once

#include <stdexcept>
#include <string>

namespace shearstab {

enum class ErrorKind {
  OutOfDomain,
  DerivativeUnavailable,
  UnsupportedKind,
  NoInflection,
  SingularDenominator,
  NoConvergence,
  SpectralCollision,
  SingularPath,
  DegenerateCriticalPoint,
  NoCriticalPoint,
  MultipleCriticalPoints,
  StiffnessOverflow,
  WrongBranch,
  ParityViolation,
  DenominatorZero,
  NoRoot,
  NoBracket,
  NoUnstableBand,
  EdgeNotBracketed,
  InsufficientData,
  InvalidArgument,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-readable kind so the
// CLI can map it onto exit codes and JSON error records.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace shearstab
