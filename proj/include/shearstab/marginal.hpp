#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shearstab/eigenpair.hpp"
#include "shearstab/orr_sommerfeld.hpp"
#include "shearstab/profiles.hpp"

namespace shearstab {

/// Runs a batch of independent tasks and returns when all are done. The
/// default runs them in order on the calling thread.
using TaskRunner = std::function<void(std::vector<std::function<void()>>&)>;

void run_sequential(std::vector<std::function<void()>>& tasks);

struct NeutralRow {
  double reynolds = 0.0;
  bool empty = false;  // no unstable band on the tracked branch
  double alpha_low = 0.0;
  double alpha_up = 0.0;
  double alpha_peak = 0.0;   // argmax of alpha Im c
  double growth_peak = 0.0;  // alpha Im c there
  std::complex<double> c_low, c_up, c_peak;
  int solves = 0;
};

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
  int used = 0;  // rows entering the fit, 0 when no fit was possible
};

struct NeutralCurve {
  std::vector<NeutralRow> rows;
  PowerLawFit fit_low;
  PowerLawFit fit_up;
  std::string profile_id;
};

struct MarginalOptions {
  OSOptions os = [] {
    OSOptions o;
    o.reconstruct = false;
    return o;
  }();
  Parity parity = Parity::Even;  // channel modes: the stream function is even
  int points_per_decade = 40;
  double edge_rel_tol = 1e-4;
  double peak_rel_tol = 1e-3;
  int max_march = 120;           // scan steps per direction before EdgeNotBracketed
  double reynolds_step = 0.25;   // decades per continuation step in R
  // Where the branch is first picked up. Half-line: the lower-branch
  // asymptotic seed at amplitude seed_A; channel: a winding-number scan at
  // (seed_alpha, seed_reynolds).
  double seed_A = 2.0;
  double seed_alpha = 1.0;
  double seed_reynolds = 1e4;
  TaskRunner runner = run_sequential;
};

/// The tracked branch at one (alpha, R).
struct BranchPoint {
  double alpha = 0.0;
  double reynolds = 0.0;
  std::complex<double> c;
};

/// Neutral curve over increasing R. Rows without an unstable band are kept
/// with empty = true. Edges are bracketed by a log-alpha scan along the
/// continued branch and bisected on Im c.
NeutralCurve trace_neutral(const ShearProfile& profile, const std::vector<double>& reynolds,
                           const MarginalOptions& opts = {});

/// Eigenvalue of the tracked unstable branch. With no seed the half-line
/// uses the lower-branch asymptotic prediction (params.scaling if set, else
/// A = alpha R^(1/4), beta = 1/4); the channel uses the least stable zero of
/// a winding-number scan.
std::complex<double> growth_at(const ShearProfile& profile, const SpectralParams& params,
                               const MarginalOptions& opts = {},
                               std::optional<std::complex<double>> seed = std::nullopt);

/// Follows the branch from `from` to (alpha, R) in steps of opts.reynolds_step decades.
BranchPoint continue_branch(const ShearProfile& profile, const BranchPoint& from, double alpha,
                            double reynolds, const MarginalOptions& opts = {});

/// Least squares on (log R, log alpha).
PowerLawFit fit_powerlaw(const std::vector<std::pair<double, double>>& rows);

struct CriticalPoint {
  double reynolds = 0.0;
  double alpha = 0.0;
  std::complex<double> c;
};

/// Smallest R at which the tracked branch has max over alpha of Im c = 0,
/// searched in [r_lo, r_hi]; the band must exist at r_hi.
CriticalPoint locate_critical(const ShearProfile& profile, double r_lo, double r_hi,
                              const MarginalOptions& opts = {}, double rel_tol = 1e-4);

/// Instability region in the coordinates (R^(1/5), alpha^2): one entry
/// {R^(1/5), alpha_low^2, alpha_up^2} per non-empty row.
std::vector<std::array<double, 3>> figure_table(const NeutralCurve& curve);

}  // namespace shearstab
