#include "shearstab/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "shearstab/asymptotics.hpp"
#include "shearstab/errors.hpp"

namespace shearstab {

using cplx = std::complex<double>;

void run_sequential(std::vector<std::function<void()>>& tasks) {
  for (auto& t : tasks) t();
}

namespace {

// Drift of the band centre with R, used only to aim continuation. On the
// half-line both edges follow R^(-1/4) until very large R.
double drift_exponent(const ShearProfile& profile) {
  return profile.is_channel() ? -0.5 * (1.0 / 7.0 + 1.0 / 11.0) : -0.25;
}

class Branch {
 public:
  Branch(const ShearProfile& profile, const MarginalOptions& opts) : profile_(profile), opts_(opts) {}

  cplx solve(double alpha, double reynolds, cplx seed) {
    ++solves;
    const auto sp = SpectralParams::fixed(alpha, reynolds);
    const Eigenpair e = profile_.is_channel() ? solve_os_channel(profile_, sp, seed, opts_.parity, opts_.os)
                                              : solve_os(profile_, sp, seed, opts_.os);
    return e.c;
  }

  // Solve seeded by a prediction; rejects a result that jumped away from it.
  std::optional<cplx> try_step(double alpha, double reynolds, cplx seed, double jump = 0.05) {
    try {
      const cplx c = solve(alpha, reynolds, seed);
      if (std::abs(c - seed) > jump * std::max(std::abs(seed), 1e-3)) return std::nullopt;
      return c;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidArgument) throw;
      return std::nullopt;
    }
  }

  BranchPoint follow(const BranchPoint& from, double alpha, double reynolds) {
    const double span = std::max(std::abs(std::log10(reynolds / from.reynolds)) / opts_.reynolds_step,
                                 std::abs(std::log10(alpha / from.alpha)) * opts_.points_per_decade);
    const int n = std::max(1, static_cast<int>(std::ceil(span - 1e-9)));
    BranchPoint prev = from, last = from;
    bool have_prev = false;
    double t_prev = 0.0;
    const double la0 = std::log(from.alpha), lr0 = std::log(from.reynolds);
    const double la1 = std::log(alpha), lr1 = std::log(reynolds);
    double s = 0.0, ds = 1.0 / n;
    int halvings = 0;
    while (s < 1.0 - 1e-12) {
      // Without a secant the first step is a short probe.
      const double t = std::min(1.0, s + (have_prev ? ds : 0.125 * ds));
      const double a = std::exp(la0 + t * (la1 - la0)), r = std::exp(lr0 + t * (lr1 - lr0));
      cplx seed = last.c;
      if (have_prev) seed = last.c + (t - s) / (s - t_prev) * (last.c - prev.c);
      if (auto c = try_step(a, r, seed)) {
        prev = last;
        t_prev = s;
        last = {a, r, *c};
        have_prev = true;
        s = t;
        if (halvings > 0) {
          ds *= 2.0;
          --halvings;
        }
      } else {
        if (++halvings > 6) {
          std::ostringstream os;
          os << "continuation stalled at alpha=" << a << " R=" << r << " from alpha=" << last.alpha
             << " R=" << last.reynolds << " c=" << last.c;
          fail(ErrorKind::NoConvergence, os.str());
        }
        ds *= 0.5;
      }
    }
    return last;
  }

  // One log-alpha step along the branch, shortened when the solve fails or jumps.
  BranchPoint step(const std::vector<BranchPoint>& trace, int dir, const std::string& what) {
    const BranchPoint& last = trace.back();
    const double h = std::log(10.0) / opts_.points_per_decade;
    double step = trace.size() >= 2 ? h : 0.125 * h;  // probe first
    for (int attempt = 0; attempt < 5; ++attempt, step *= 0.5) {
      const double a = last.alpha * std::exp(dir * step);
      cplx seed = last.c;
      if (trace.size() >= 2) {
        const BranchPoint& p = trace[trace.size() - 2];
        seed = last.c + (last.c - p.c) * (std::log(a / last.alpha) / std::log(last.alpha / p.alpha));
      }
      if (auto c = try_step(a, last.reynolds, seed)) return {a, last.reynolds, *c};
    }
    fail(ErrorKind::EdgeNotBracketed, what + ": branch lost at alpha=" + std::to_string(last.alpha) + "\n" +
                                          describe(trace));
  }

  static std::string describe(const std::vector<BranchPoint>& trace) {
    std::ostringstream os;
    os.precision(10);
    os << "scan trace (alpha, Re c, Im c):";
    for (const auto& p : trace) os << "\n  " << p.alpha << " " << p.c.real() << " " << p.c.imag();
    return os.str();
  }

  // March from an unstable point until Im c <= 0; the last entry is outside.
  std::vector<BranchPoint> march_out(const BranchPoint& inside, int dir) {
    std::vector<BranchPoint> trace{inside};
    for (int k = 0; k < opts_.max_march; ++k) {
      trace.push_back(step(trace, dir, dir < 0 ? "lower edge" : "upper edge"));
      if (trace.back().c.imag() <= 0.0) return trace;
    }
    fail(ErrorKind::EdgeNotBracketed,
         std::string(dir < 0 ? "lower" : "upper") + " edge not reached within the scan\n" + describe(trace));
  }

  BranchPoint bisect(BranchPoint in, BranchPoint out) {
    while (std::abs(std::log(out.alpha / in.alpha)) > opts_.edge_rel_tol) {
      const double a = std::sqrt(in.alpha * out.alpha);
      const double w = std::log(a / in.alpha) / std::log(out.alpha / in.alpha);
      const cplx seed = in.c + w * (out.c - in.c);
      const auto c = try_step(a, in.reynolds, seed);
      if (!c) {
        std::ostringstream os;
        os.precision(10);
        os << "edge bisection lost the branch at alpha=" << a << ", R=" << in.reynolds << " between Im c = "
           << in.c.imag() << " and " << out.c.imag();
        fail(ErrorKind::EdgeNotBracketed, os.str());
      }
      (c->imag() > 0.0 ? in : out) = {a, in.reynolds, *c};
    }
    // Linear zero of Im c inside the final bracket.
    const double w = in.c.imag() / (in.c.imag() - out.c.imag());
    const double la = std::log(in.alpha) + w * std::log(out.alpha / in.alpha);
    return {std::exp(la), in.reynolds, in.c + w * (out.c - in.c)};
  }

  // Golden-section maximum of score(point) for log alpha in [lo, hi]; seeds
  // come from the nearest evaluated point.
  template <class Score>
  BranchPoint golden(std::vector<BranchPoint> known, double lo, double hi, double rel_tol, Score score) {
    const double reynolds = known.front().reynolds;
    auto eval = [&](double la) {
      // Interpolate between the closest known points on either side.
      const BranchPoint *below = nullptr, *above = nullptr, *best = &known.front();
      for (const auto& p : known) {
        const double lp = std::log(p.alpha);
        if (std::abs(lp - la) < std::abs(std::log(best->alpha) - la)) best = &p;
        if (lp <= la && (!below || lp > std::log(below->alpha))) below = &p;
        if (lp >= la && (!above || lp < std::log(above->alpha))) above = &p;
      }
      cplx seed = best->c;
      if (below && above && below != above) {
        const double w = (la - std::log(below->alpha)) / std::log(above->alpha / below->alpha);
        seed = below->c + w * (above->c - below->c);
      }
      const double a = std::exp(la);
      if (const auto c = try_step(a, reynolds, seed)) {
        known.push_back({a, reynolds, *c});
        return known.back();
      }
      try {
        known.push_back(follow(*best, a, reynolds));
      } catch (const Error&) {
        std::ostringstream os;
        os.precision(10);
        os << "peak search lost the branch at alpha=" << a << ", R=" << reynolds;
        fail(ErrorKind::NoConvergence, os.str());
      }
      return known.back();
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    BranchPoint p1 = eval(x1), p2 = eval(x2);
    while (b - a > rel_tol) {
      if (score(p1) > score(p2)) {
        b = x2;
        x2 = x1;
        p2 = p1;
        x1 = b - g * (b - a);
        p1 = eval(x1);
      } else {
        a = x1;
        x1 = x2;
        p1 = p2;
        x2 = a + g * (b - a);
        p2 = eval(x2);
      }
    }
    return score(p1) > score(p2) ? p1 : p2;
  }

  // A point of the branch at start.reynolds with Im c > 0, walking uphill in
  // Im c from `start`; NoUnstableBand when Im c peaks below zero.
  BranchPoint find_unstable(const BranchPoint& start) {
    if (start.c.imag() > 0.0) return start;
    std::vector<BranchPoint> up{start}, down{start};
    up.push_back(step(up, +1, "band search"));
    if (up.back().c.imag() > 0.0) return up.back();
    down.push_back(step(down, -1, "band search"));
    if (down.back().c.imag() > 0.0) return down.back();
    // Im c need not be unimodal in alpha: a side is abandoned only after it
    // has kept falling for a fifth of a decade. The side that rose more in
    // the first step goes first.
    const bool up_first = up.back().c.imag() >= down.back().c.imag();
    const int patience = std::max(2, opts_.points_per_decade / 5);
    double best = std::max(up.back().c.imag(), down.back().c.imag());
    for (int pass = 0; pass < 2; ++pass) {
      const bool go_up = (pass == 0) == up_first;
      auto& trace = go_up ? up : down;
      int falling = trace.back().c.imag() < start.c.imag() ? 1 : 0;
      for (int k = 0; k < opts_.max_march && falling < patience; ++k) {
        const double prev = trace.back().c.imag();
        trace.push_back(step(trace, go_up ? 1 : -1, "band search"));
        best = std::max(best, trace.back().c.imag());
        if (trace.back().c.imag() > 0.0) return trace.back();
        falling = trace.back().c.imag() < prev ? falling + 1 : 0;
      }
    }
    std::ostringstream os;
    os << "no unstable band at R=" << start.reynolds << " (max Im c along the branch " << best << ")";
    fail(ErrorKind::NoUnstableBand, os.str());
  }

  // Maximum of Im c over alpha at start.reynolds.
  BranchPoint peak_imag(const BranchPoint& start) {
    std::vector<BranchPoint> up{start};
    up.push_back(step(up, +1, "Im c peak"));
    int dir = 1;
    std::vector<BranchPoint> trace = up;
    if (up.back().c.imag() < start.c.imag()) {
      dir = -1;
      trace = {up.back(), start};
    }
    for (int k = 0; k < opts_.max_march; ++k) {
      trace.push_back(step(trace, dir, "Im c peak"));
      const std::size_t n = trace.size();
      if (trace[n - 1].c.imag() < trace[n - 2].c.imag()) {
        const double lo = std::log(std::min(trace[n - 1].alpha, trace[n - 3].alpha));
        const double hi = std::log(std::max(trace[n - 1].alpha, trace[n - 3].alpha));
        return golden(trace, lo, hi, opts_.peak_rel_tol, [](const BranchPoint& p) { return p.c.imag(); });
      }
    }
    fail(ErrorKind::NoConvergence, "no interior maximum of Im c\n" + describe(trace));
  }

  NeutralRow row(const BranchPoint& inside) {
    NeutralRow out;
    out.reynolds = inside.reynolds;
    const auto down = march_out(inside, -1);
    const auto up = march_out(inside, +1);
    const BranchPoint lo = bisect(down[down.size() - 2], down.back());
    const BranchPoint hi = bisect(up[up.size() - 2], up.back());
    out.alpha_low = lo.alpha;
    out.c_low = lo.c;
    out.alpha_up = hi.alpha;
    out.c_up = hi.c;

    std::vector<BranchPoint> samples(down.rbegin(), down.rend());
    samples.insert(samples.end(), up.begin() + 1, up.end());
    auto growth = [](const BranchPoint& p) { return p.alpha * p.c.imag(); };
    std::size_t best = 1;
    for (std::size_t i = 1; i + 1 < samples.size(); ++i)
      if (growth(samples[i]) > growth(samples[best])) best = i;
    const BranchPoint peak = golden(samples, std::log(samples[best - 1].alpha), std::log(samples[best + 1].alpha),
                                    opts_.peak_rel_tol, growth);
    out.alpha_peak = peak.alpha;
    out.c_peak = peak.c;
    out.growth_peak = growth(peak);
    return out;
  }

  // First point on the branch at the given R.
  BranchPoint pick_up(double reynolds) {
    if (profile_.is_channel()) {
      const auto sp = SpectralParams::fixed(opts_.seed_alpha, opts_.seed_reynolds);
      const BranchPoint seed{opts_.seed_alpha, opts_.seed_reynolds, growth_at(profile_, sp, opts_)};
      const double alpha = opts_.seed_alpha * std::pow(reynolds / opts_.seed_reynolds, drift_exponent(profile_));
      return follow(seed, alpha, reynolds);
    }
    const auto sp = SpectralParams::scaled(opts_.seed_A, 0.25, reynolds);
    return {sp.alpha, reynolds, growth_at(profile_, sp, opts_)};
  }

  int solves = 0;

 private:
  const ShearProfile& profile_;
  const MarginalOptions& opts_;
};

PowerLawFit fit_rows(const std::vector<NeutralRow>& rows, bool upper) {
  std::vector<const NeutralRow*> full;
  for (const auto& r : rows)
    if (!r.empty) full.push_back(&r);
  if (full.size() < 3) return {};
  const double mid = 0.5 * (std::log(full.front()->reynolds) + std::log(full.back()->reynolds));
  std::vector<std::pair<double, double>> pts;
  for (const auto* r : full)
    if (std::log(r->reynolds) >= mid - 1e-12) pts.emplace_back(r->reynolds, upper ? r->alpha_up : r->alpha_low);
  if (pts.size() < 3) {
    pts.clear();
    for (std::size_t i = full.size() - 3; i < full.size(); ++i)
      pts.emplace_back(full[i]->reynolds, upper ? full[i]->alpha_up : full[i]->alpha_low);
  }
  return fit_powerlaw(pts);
}

}  // namespace

cplx growth_at(const ShearProfile& profile, const SpectralParams& params, const MarginalOptions& opts,
               std::optional<cplx> seed) {
  params.validate();
  if (!seed) {
    if (profile.is_channel()) {
      const auto zeros = scan_zeros(profile, params, CRect{0.02, 0.98, -0.2, 0.1}, 5, opts.parity, opts.os);
      if (zeros.empty()) fail(ErrorKind::NoRoot, "no channel eigenvalue in the scan rectangle");
      seed = *std::max_element(zeros.begin(), zeros.end(),
                               [](cplx a, cplx b) { return a.imag() < b.imag(); });
    } else {
      const SpectralParams sp = params.scaling
                                    ? params
                                    : SpectralParams::scaled(params.alpha * std::pow(params.reynolds, 0.25), 0.25,
                                                             params.reynolds);
      seed = predict_lower_branch(profile, sp).c_pred;
    }
  }
  const Eigenpair e = profile.is_channel() ? solve_os_channel(profile, params, *seed, opts.parity, opts.os)
                                           : solve_os(profile, params, *seed, opts.os);
  return e.c;
}

BranchPoint continue_branch(const ShearProfile& profile, const BranchPoint& from, double alpha, double reynolds,
                            const MarginalOptions& opts) {
  Branch b(profile, opts);
  return b.follow(from, alpha, reynolds);
}

PowerLawFit fit_powerlaw(const std::vector<std::pair<double, double>>& rows) {
  if (rows.size() < 3) fail(ErrorKind::InsufficientData, "a power-law fit needs at least 3 rows");
  const double n = static_cast<double>(rows.size());
  double sx = 0, sy = 0;
  for (const auto& [r, a] : rows) {
    if (!(r > 0.0) || !(a > 0.0)) fail(ErrorKind::InvalidArgument, "power-law rows must be positive");
    sx += std::log(r);
    sy += std::log(a);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [r, a] : rows) {
    const double dx = std::log(r) - mx, dy = std::log(a) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) fail(ErrorKind::InsufficientData, "power-law rows share a single R");
  PowerLawFit f;
  f.exponent = sxy / sxx;
  f.prefactor = std::exp(my - f.exponent * mx);
  f.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  f.used = static_cast<int>(rows.size());
  return f;
}

NeutralCurve trace_neutral(const ShearProfile& profile, const std::vector<double>& reynolds,
                           const MarginalOptions& opts) {
  if (reynolds.empty()) fail(ErrorKind::InvalidArgument, "empty Reynolds list");
  for (std::size_t i = 0; i < reynolds.size(); ++i) {
    if (!(reynolds[i] > 0.0)) fail(ErrorKind::InvalidArgument, "Reynolds numbers must be positive");
    if (i > 0 && !(reynolds[i] > reynolds[i - 1])) fail(ErrorKind::InvalidArgument, "R list must increase");
  }
  NeutralCurve curve;
  curve.profile_id = profile.id();
  curve.rows.resize(reynolds.size());

  // Warm-up: the first R with a band, sequentially.
  Branch warm(profile, opts);
  std::size_t w = 0;
  BranchPoint cursor = warm.pick_up(reynolds[0]);
  std::optional<NeutralRow> first;
  for (; w < reynolds.size(); ++w) {
    if (w > 0) {
      const double a = cursor.alpha * std::pow(reynolds[w] / cursor.reynolds, drift_exponent(profile));
      cursor = warm.follow(cursor, a, reynolds[w]);
    }
    try {
      cursor = warm.find_unstable(cursor);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoUnstableBand) throw;
      curve.rows[w].reynolds = reynolds[w];
      curve.rows[w].empty = true;
      continue;
    }
    first = warm.row(cursor);
    first->solves = warm.solves;
    curve.rows[w] = *first;
    break;
  }

  if (first) {
    // Re-aim from the band's log-centre at the warm-up R.
    const double centre = std::sqrt(first->alpha_low * first->alpha_up);
    const BranchPoint anchor = warm.follow({first->alpha_peak, first->reynolds, first->c_peak}, centre, first->reynolds);
    std::vector<std::exception_ptr> errors(reynolds.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t k = w + 1; k < reynolds.size(); ++k) {
      tasks.emplace_back([&, k] {
        NeutralRow& out = curve.rows[k];
        out.reynolds = reynolds[k];
        Branch b(profile, opts);
        try {
          const double a = anchor.alpha * std::pow(reynolds[k] / anchor.reynolds, drift_exponent(profile));
          const BranchPoint start = b.follow(anchor, a, reynolds[k]);
          out = b.row(b.find_unstable(start));
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::NoUnstableBand) {
            out.empty = true;
          } else {
            errors[k] = std::current_exception();
          }
        } catch (...) {
          errors[k] = std::current_exception();
        }
        out.solves = b.solves;
      });
    }
    opts.runner(tasks);
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  curve.fit_low = fit_rows(curve.rows, false);
  curve.fit_up = fit_rows(curve.rows, true);
  return curve;
}

CriticalPoint locate_critical(const ShearProfile& profile, double r_lo, double r_hi, const MarginalOptions& opts,
                              double rel_tol) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) fail(ErrorKind::InvalidArgument, "need 0 < r_lo < r_hi");
  Branch b(profile, opts);
  BranchPoint hi = b.peak_imag(b.find_unstable(b.pick_up(r_hi)));
  const double drift = drift_exponent(profile);
  auto peak_at = [&](const BranchPoint& from, double r) {
    return b.peak_imag(b.follow(from, from.alpha * std::pow(r / from.reynolds, drift), r));
  };
  BranchPoint lo = peak_at(hi, r_lo);
  if (lo.c.imag() > 0.0) {
    std::ostringstream os;
    os << "branch is still unstable at R=" << r_lo;
    fail(ErrorKind::NoBracket, os.str());
  }
  while (std::log(hi.reynolds / lo.reynolds) > rel_tol) {
    const double r = std::sqrt(lo.reynolds * hi.reynolds);
    const BranchPoint mid = peak_at(hi, r);
    (mid.c.imag() > 0.0 ? hi : lo) = mid;
  }
  const double w = hi.c.imag() / (hi.c.imag() - lo.c.imag());
  CriticalPoint out;
  out.reynolds = std::exp(std::log(hi.reynolds) + w * std::log(lo.reynolds / hi.reynolds));
  out.alpha = std::exp(std::log(hi.alpha) + w * std::log(lo.alpha / hi.alpha));
  out.c = hi.c + w * (lo.c - hi.c);
  return out;
}

std::vector<std::array<double, 3>> figure_table(const NeutralCurve& curve) {
  std::vector<std::array<double, 3>> out;
  for (const auto& r : curve.rows)
    if (!r.empty) out.push_back({std::pow(r.reynolds, 0.2), r.alpha_low * r.alpha_low, r.alpha_up * r.alpha_up});
  return out;
}

}  // namespace shearstab
