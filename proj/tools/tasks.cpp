#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "shearstab/airy.hpp"
#include "shearstab/asymptotics.hpp"
#include "shearstab/criteria.hpp"
#include "shearstab/errors.hpp"
#include "shearstab/marginal.hpp"
#include "shearstab/orr_sommerfeld.hpp"
#include "shearstab/rayleigh.hpp"

namespace shearstab::cli {

using cplx = std::complex<double>;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

json pair_of(cplx z) { return json::array({z.real(), z.imag()}); }

json error_record(const Error& e) { return {{"kind", to_string(e.kind())}, {"message", e.what()}}; }

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << "\n";
  }
  Csv& row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      os_ << (first ? "" : ",") << format_double(v);
      first = false;
    }
    os_ << "\n";
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

std::string eigenfunction_csv(const Eigenpair& p) {
  Csv csv({"Z", "re_phi", "im_phi", "re_dphi", "im_dphi"});
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    csv.row({p.grid[i], p.phi[i].real(), p.phi[i].imag(), p.phi_prime[i].real(), p.phi_prime[i].imag()});
  return csv.str();
}

Parity parity_of(const json& p) {
  const auto s = p.get<std::string>();
  return s == "even" ? Parity::Even : s == "odd" ? Parity::Odd : Parity::None;
}

std::vector<double> numbers(const json& v) { return v.get<std::vector<double>>(); }

std::vector<double> reynolds_list(const json& v) {
  if (v.is_array()) return numbers(v);
  const double lo = v["min"].get<double>(), hi = v["max"].get<double>();
  const double per = v["per_decade"].get<double>();
  if (!(lo > 0.0) || !(hi >= lo) || !(per > 0.0)) fail(ErrorKind::ConfigError, "parameters.R: need 0 < min <= max, per_decade > 0");
  const int n = static_cast<int>(std::floor(std::log10(hi / lo) * per + 1e-9));
  std::vector<double> out;
  for (int k = 0; k <= n; ++k) out.push_back(lo * std::pow(10.0, k / per));
  return out;
}

struct Context {
  const json& cfg;
  const json& par;
  const ShearProfile& profile;
  const WorkerPool& pool;
  std::filesystem::path dir;
  std::ostream& log;

  void emit(const std::string& name, const std::string& content) const { write_atomic(dir / name, content); }
  void emit_json(const std::string& name, const json& j) const { emit(name, j.dump(2) + "\n"); }
};

int task_criteria(const Context& cx) {
  CriteriaOptions o;
  o.scan_points = cx.par["scan_points"].get<int>();
  o.stretch = cx.par["stretch"].get<double>();
  const CriterionVerdict v = evaluate_criteria(cx.profile, o);
  json pts = json::array();
  for (const auto& p : v.fjortoft_points)
    pts.push_back({{"z_c", p.z_c},
                   {"passed", p.passed},
                   {"witness", p.witness ? json(*p.witness) : json()},
                   {"margin", p.margin}});
  json out = {{"profile_id", cx.profile.id()},
              {"rayleigh_passed", v.rayleigh_passed},
              {"inflection_points", v.inflection_points},
              {"fjortoft", to_string(v.fjortoft)},
              {"fjortoft_passed", v.fjortoft_passed},
              {"fjortoft_witness", v.fjortoft_witness ? json(*v.fjortoft_witness) : json()},
              {"fjortoft_points", pts},
              {"margin", v.margin}};
  cx.emit_json("criteria.json", out);
  cx.log << "criteria: rayleigh_passed=" << v.rayleigh_passed << " fjortoft_passed=" << v.fjortoft_passed << "\n";
  return 0;
}

int task_rayleigh(const Context& cx) {
  RayleighOptions o;
  o.tol = cx.par["tol"].get<double>();
  o.rtol = cx.par["rtol"].get<double>();
  const auto& g = cx.par["guess"];
  const int nre = g["n_re"].get<int>(), nim = g["n_im"].get<int>();
  if (nre < 1 || nim < 1) fail(ErrorKind::ConfigError, "parameters.guess: n_re and n_im must be positive");
  const auto alphas = numbers(cx.par["alpha"]);

  std::vector<std::vector<Eigenpair>> found(alphas.size());
  std::vector<int> failed(alphas.size(), 0);
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    tasks.emplace_back([&, k] {
      for (int i = 0; i < nre; ++i)
        for (int j = 0; j < nim; ++j) {
          const double re = g["re_lo"].get<double>() +
                            (nre == 1 ? 0.5 : double(i) / (nre - 1)) * (g["re_hi"].get<double>() - g["re_lo"].get<double>());
          const double im = g["im_lo"].get<double>() +
                            (nim == 1 ? 0.5 : double(j) / (nim - 1)) * (g["im_hi"].get<double>() - g["im_lo"].get<double>());
          try {
            Eigenpair p = solve_rayleigh(cx.profile, alphas[k], cplx(re, im), o);
            bool dup = false;
            for (const auto& q : found[k])
              if (std::abs(q.c - p.c) < 1e-8 * std::max(1.0, std::abs(p.c))) dup = true;
            if (!dup) found[k].push_back(std::move(p));
          } catch (const Error&) {
            ++failed[k];
          }
        }
      std::sort(found[k].begin(), found[k].end(), [](const Eigenpair& a, const Eigenpair& b) {
        return a.c.real() != b.c.real() ? a.c.real() < b.c.real() : a.c.imag() < b.c.imag();
      });
    });
  }
  cx.pool.run(tasks);

  json records = json::array();
  int index = 0;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    for (const auto& p : found[k]) {
      const auto [r1, r2] = verify_energy_identities(cx.profile, p, alphas[k]);
      json r = {{"alpha", alphas[k]},         {"re_c", p.c.real()},       {"im_c", p.c.imag()},
                {"growth_rate", alphas[k] * p.c.imag()}, {"iterations", p.iterations},
                {"residual", p.residual},     {"identity_residuals", {r1, r2}}};
      if (cx.par["eigenfunction"].get<bool>()) {
        const std::string name = "rayleigh_phi_" + std::to_string(index) + ".csv";
        cx.emit(name, eigenfunction_csv(p));
        r["eigenfunction"] = name;
      }
      records.push_back(r);
      ++index;
    }
  }
  json failures = json::array();
  for (std::size_t k = 0; k < alphas.size(); ++k) failures.push_back({{"alpha", alphas[k]}, {"failed_guesses", failed[k]}});
  cx.emit_json("rayleigh.json", {{"profile_id", cx.profile.id()}, {"eigenpairs", records}, {"guesses", failures}});
  cx.log << "rayleigh: " << records.size() << " distinct eigenvalue(s)\n";
  return 0;
}

cplx os_seed(const Context& cx, const SpectralParams& sp, Parity parity, const OSOptions& os) {
  const json& guess = cx.par["guess"];
  if (guess.is_array()) return {guess[0].get<double>(), guess[1].get<double>()};
  const bool scan = guess.get<std::string>() == "scan" || cx.profile.is_channel();
  if (!scan) {
    const SpectralParams ps =
        sp.scaling ? sp : SpectralParams::scaled(sp.alpha * std::pow(sp.reynolds, 0.25), 0.25, sp.reynolds);
    return predict_lower_branch(cx.profile, ps).c_pred;
  }
  const double lo = cx.profile.wall_value();
  const double hi = cx.profile.is_channel() ? 1.0 : cx.profile.u_plus();
  const auto zeros = scan_zeros(cx.profile, sp, CRect{lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo), -0.2, 0.1}, 5,
                                parity, os);
  if (zeros.empty()) fail(ErrorKind::NoRoot, "no eigenvalue in the scan rectangle");
  return *std::max_element(zeros.begin(), zeros.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
}

int task_os_solve(const Context& cx) {
  OSOptions os;
  os.rtol = cx.par["rtol"].get<double>();
  os.atol = os.rtol * 1e-2;
  os.tol = cx.par["tol"].get<double>();
  os.reconstruct = cx.par["eigenfunction"].get<bool>();
  const Parity parity = cx.profile.is_channel() ? parity_of(cx.par["parity"]) : Parity::None;
  const double beta = cx.par["beta"].get<double>();

  std::vector<SpectralParams> points;
  for (double R : numbers(cx.par["R"])) {
    for (double a : numbers(cx.par["alpha"])) points.push_back(SpectralParams::fixed(a, R));
    for (double A : numbers(cx.par["A"])) points.push_back(SpectralParams::scaled(A, beta, R));
  }
  for (const auto& p : points) {
    try {
      p.validate();
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, std::string("parameters: ") + e.what());
    }
  }

  std::vector<json> records(points.size());
  std::vector<std::optional<Eigenpair>> pairs(points.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < points.size(); ++k) {
    tasks.emplace_back([&, k] {
      const auto& sp = points[k];
      json r = {{"alpha", sp.alpha}, {"R", sp.reynolds}};
      if (sp.scaling) {
        r["A"] = sp.scaling->A;
        r["beta"] = sp.scaling->beta;
      }
      try {
        const cplx seed = os_seed(cx, sp, parity, os);
        Eigenpair e = cx.profile.is_channel() ? solve_os_channel(cx.profile, sp, seed, parity, os)
                                              : solve_os(cx.profile, sp, seed, os);
        r["re_c"] = e.c.real();
        r["im_c"] = e.c.imag();
        r["growth_rate"] = sp.alpha * e.c.imag();
        if (os.reconstruct)
          r["residuals"] = {{"ode", e.residual}, {"boundary", e.bc_residual}, {"continuity", e.continuity}};
        r["iterations"] = e.iterations;
        if (cx.profile.is_channel()) {
          r["parity"] = to_string(e.parity);
          if (os.reconstruct) r["symmetry_residual"] = e.symmetry_residual;
        }
        pairs[k] = std::move(e);
      } catch (const Error& e) {
        r["error"] = error_record(e);
      }
      records[k] = std::move(r);
    });
  }
  cx.pool.run(tasks);

  int failures = 0;
  json out = json::array();
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (records[k].contains("error")) ++failures;
    if (pairs[k] && os.reconstruct) {
      const std::string name = "os_phi_" + std::to_string(k) + ".csv";
      cx.emit(name, eigenfunction_csv(*pairs[k]));
      records[k]["eigenfunction"] = name;
    }
    out.push_back(records[k]);
  }
  cx.emit_json("os_solve.json", {{"profile_id", cx.profile.id()}, {"eigenvalues", out}});
  cx.log << "os-solve: " << points.size() - failures << " of " << points.size() << " converged\n";
  return failures ? 2 : 0;
}

int task_asymptotics(const Context& cx) {
  AsymptoticOptions o;
  o.tol = cx.par["tol"].get<double>();
  const double beta = cx.par["beta"].get<double>();
  const auto Rs = numbers(cx.par["R"]);
  const auto As = numbers(cx.par["A"]);
  const bool threshold = cx.par["threshold"].get<bool>();

  std::vector<json> recs(Rs.size() * As.size());
  std::vector<json> thr(Rs.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < Rs.size(); ++i)
    for (std::size_t j = 0; j < As.size(); ++j)
      tasks.emplace_back([&, i, j] {
        json r = {{"A", As[j]}, {"beta", beta}, {"R", Rs[i]}};
        try {
          const auto sp = SpectralParams::scaled(As[j], beta, Rs[i]);
          r["alpha"] = sp.alpha;
          const auto p = predict_lower_branch(cx.profile, sp, o);
          r["c_pred"] = pair_of(p.c_pred);
          r["z_c"] = pair_of(p.z_c);
          r["delta"] = pair_of(p.delta);
          r["tietjens_arg"] = pair_of(p.tietjens_arg);
          r["regime"] = to_string(p.regime);
          r["dispersion_residual"] = std::abs(p.dispersion_residual);
          r["outside_asymptotic_range"] = p.outside_asymptotic_range;
          r["iterations"] = p.iterations;
        } catch (const Error& e) {
          r["error"] = error_record(e);
        }
        recs[i * As.size() + j] = std::move(r);
      });
  if (threshold)
    for (std::size_t i = 0; i < Rs.size(); ++i)
      tasks.emplace_back([&, i] {
        json r = {{"R", Rs[i]}};
        try {
          r["A1c"] = find_A1c(cx.profile, Rs[i]);
        } catch (const Error& e) {
          r["error"] = error_record(e);
        }
        thr[i] = std::move(r);
      });
  cx.pool.run(tasks);

  int failures = 0;
  json out = {{"profile_id", cx.profile.id()}, {"predictions", json::array()}};
  for (auto& r : recs) {
    failures += r.contains("error");
    out["predictions"].push_back(r);
  }
  if (threshold) {
    out["threshold"] = json::array();
    for (auto& r : thr) {
      failures += r.contains("error");
      out["threshold"].push_back(r);
    }
  }
  cx.emit_json("asymptotics.json", out);
  cx.log << "asymptotics: " << recs.size() << " prediction(s), " << failures << " failure(s)\n";
  return failures ? 2 : 0;
}

int task_tietjens(const Context& cx) {
  const double theta = cx.par["angle_deg"].get<double>() * std::numbers::pi / 180.0;
  const double r0 = cx.par["r_min"].get<double>(), r1 = cx.par["r_max"].get<double>();
  const int n = cx.par["count"].get<int>();
  if (!(r0 > 0.0) || !(r1 > r0) || n < 2) fail(ErrorKind::ConfigError, "parameters: need 0 < r_min < r_max, count >= 2");
  const cplx dir = std::polar(1.0, theta);
  Csv csv({"r", "re_y", "im_y", "re_t", "im_t"});
  for (int k = 0; k < n; ++k) {
    const double r = r0 * std::pow(r1 / r0, double(k) / (n - 1));
    const cplx y = r * dir;
    const cplx t = tietjens(y);
    csv.row({r, y.real(), y.imag(), t.real(), t.imag()});
  }
  cx.emit("tietjens.csv", csv.str());
  cx.log << "tietjens-table: " << n << " rows\n";
  return 0;
}

int task_neutral(const Context& cx) {
  MarginalOptions o;
  o.os.tol = cx.par["tol"].get<double>();
  o.parity = parity_of(cx.par["parity"]);
  o.points_per_decade = cx.par["points_per_decade"].get<int>();
  o.edge_rel_tol = cx.par["edge_rel_tol"].get<double>();
  o.peak_rel_tol = cx.par["peak_rel_tol"].get<double>();
  o.seed_A = cx.par["seed_A"].get<double>();
  o.seed_alpha = cx.par["seed_alpha"].get<double>();
  o.seed_reynolds = cx.par["seed_reynolds"].get<double>();
  o.runner = [&](std::vector<std::function<void()>>& t) { cx.pool.run(t); };
  const auto Rs = reynolds_list(cx.par["R"]);

  const NeutralCurve nc = trace_neutral(cx.profile, Rs, o);
  Csv csv({"R", "alpha_low", "alpha_up", "alpha_peak", "growth_peak"});
  json rows = json::array();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : nc.rows) {
    if (r.empty) {
      csv.row({r.reynolds, nan, nan, nan, nan});
    } else {
      csv.row({r.reynolds, r.alpha_low, r.alpha_up, r.alpha_peak, r.growth_peak});
    }
    json j = {{"R", r.reynolds}, {"empty", r.empty}};
    if (!r.empty) {
      j["alpha_low"] = r.alpha_low;
      j["alpha_up"] = r.alpha_up;
      j["alpha_peak"] = r.alpha_peak;
      j["growth_peak"] = r.growth_peak;
      j["c_low"] = pair_of(r.c_low);
      j["c_up"] = pair_of(r.c_up);
      j["c_peak"] = pair_of(r.c_peak);
    }
    j["solves"] = r.solves;
    rows.push_back(j);
  }
  auto fit = [](const PowerLawFit& f) {
    if (f.used == 0) return json();
    return json{{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r2", f.r2}, {"rows", f.used}};
  };
  cx.emit("neutral_curve.csv", csv.str());
  cx.emit_json("neutral_fit.json",
               {{"profile_id", nc.profile_id}, {"fit_low", fit(nc.fit_low)}, {"fit_up", fit(nc.fit_up)}, {"rows", rows}});
  if (cx.par["figure"].get<bool>()) {
    Csv fig({"R_pow_1_5", "alpha_low_sq", "alpha_up_sq"});
    for (const auto& t : figure_table(nc)) fig.row({t[0], t[1], t[2]});
    cx.emit("neutral_figure.csv", fig.str());
  }
  cx.log << "neutral-curve: " << nc.rows.size() << " rows";
  if (nc.fit_low.used) cx.log << ", exponents " << nc.fit_low.exponent << " / " << nc.fit_up.exponent;
  cx.log << "\n";
  return 0;
}

}  // namespace

int run(const json& cfg, const WorkerPool& pool, std::ostream& log) {
  std::filesystem::path dir;
  try {
    dir = cfg.at("output").get<std::string>();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
    write_atomic(dir / "manifest.json", cfg.dump(2) + "\n");
  } catch (const Error& e) {
    log << e.what() << "\n";
    return 1;
  }

  try {
    const ShearProfile profile = build_profile(cfg.at("profile"));
    const Context cx{cfg, cfg.at("parameters"), profile, pool, dir, log};
    const std::string task = cfg.at("task").get<std::string>();
    if (task == "criteria") return task_criteria(cx);
    if (task == "rayleigh") return task_rayleigh(cx);
    if (task == "os-solve") return task_os_solve(cx);
    if (task == "asymptotics") return task_asymptotics(cx);
    if (task == "tietjens-table") return task_tietjens(cx);
    if (task == "neutral-curve") return task_neutral(cx);
    fail(ErrorKind::ConfigError, "unknown task '" + task + "'");
  } catch (const Error& e) {
    log << e.what() << "\n";
    if (e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::IoError) return 1;
    try {
      write_atomic(dir / "error.json", error_record(e).dump(2) + "\n");
    } catch (const Error& io) {
      log << io.what() << "\n";
    }
    return 2;
  }
}

}  // namespace shearstab::cli
