#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "shearstab/eigenpair.hpp"
#include "shearstab/profiles.hpp"

namespace shearstab {

enum class FjortoftStatus { Passed, Failed, NoInflection };

const char* to_string(FjortoftStatus s) noexcept;

/// Fjortoft test for one inflection point.
struct FjortoftPoint {
  double z_c = 0.0;
  bool passed = false;
  std::optional<double> witness;  // a Z with U''(U - U(z_c)) < 0
  double margin = 0.0;            // min over samples of U''(U - U(z_c))
};

struct CriterionVerdict {
  bool rayleigh_passed = false;
  std::vector<double> inflection_points;
  FjortoftStatus fjortoft = FjortoftStatus::NoInflection;
  bool fjortoft_passed = false;
  std::optional<double> fjortoft_witness;
  std::vector<FjortoftPoint> fjortoft_points;
  double margin = 0.0;  // min |U''| without an inflection, Fjortoft minimum otherwise
};

struct CriteriaOptions {
  int scan_points = 4096;
  double stretch = 3.0;  // tanh clustering strength toward the wall
};

CriterionVerdict check_rayleigh(const ShearProfile& profile, const CriteriaOptions& opts = {});

/// Runs the Rayleigh scan, then samples U''(U - U(z_c)) for each inflection
/// point. A profile without inflection points raises NoInflection; the
/// verdict variant below turns that into fjortoft_passed = false.
CriterionVerdict check_fjortoft(const ShearProfile& profile, const CriteriaOptions& opts = {});
CriterionVerdict evaluate_criteria(const ShearProfile& profile, const CriteriaOptions& opts = {});

/// Residuals of the two integral identities satisfied by Rayleigh
/// eigenpairs, each divided by the integral of |phi'|^2 + alpha^2 |phi|^2.
std::pair<double, double> verify_energy_identities(const ShearProfile& profile, const Eigenpair& pair,
                                                   double alpha);

}  // namespace shearstab
