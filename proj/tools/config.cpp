#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "shearstab/errors.hpp"

namespace shearstab::cli {

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::ConfigError, what); }

json task_defaults(const std::string& task) {
  if (task == "criteria") return {{"scan_points", 4096}, {"stretch", 3.0}};
  if (task == "rayleigh")
    return {{"alpha", json::array({0.5})},
            {"guess",
             {{"re_lo", 0.0}, {"re_hi", 1.0}, {"im_lo", 1e-3}, {"im_hi", 0.5}, {"n_re", 6}, {"n_im", 4}}},
            {"tol", 1e-12},
            {"rtol", 1e-12},
            {"eigenfunction", true}};
  if (task == "os-solve")
    return {{"alpha", json::array()},
            {"A", json::array()},
            {"beta", 0.25},
            {"R", json::array({1e5})},
            {"guess", "asymptotic"},
            {"parity", "even"},
            {"rtol", 1e-10},
            {"tol", 1e-12},
            {"eigenfunction", false}};
  if (task == "asymptotics")
    return {{"A", json::array({1.0})},
            {"beta", 0.25},
            {"R", json::array({1e6})},
            {"threshold", false},
            {"tol", 1e-13}};
  if (task == "tietjens-table")
    return {{"angle_deg", -150.0}, {"r_min", 0.1}, {"r_max", 20.0}, {"count", 200}};
  if (task == "neutral-curve")
    return {{"R", {{"min", 1e5}, {"max", 1e8}, {"per_decade", 1}}},
            {"parity", "even"},
            {"points_per_decade", 40},
            {"edge_rel_tol", 1e-4},
            {"peak_rel_tol", 1e-3},
            {"tol", 1e-12},
            {"seed_A", 2.0},
            {"seed_alpha", 1.0},
            {"seed_reynolds", 1e4},
            {"figure", true}};
  config_error("unknown task '" + task + "'");
}

json profile_defaults(const std::string& kind) {
  json d = {{"kind", kind}};
  if (kind == "Exponential") {
    d["u_plus"] = 1.0;
    d["eta"] = 1.0;
    d["z_max"] = nullptr;
  } else if (kind == "ErfHeat") {
    d["t"] = 1.0;
    d["u_plus"] = 1.0;
    d["z_max"] = nullptr;
  } else if (kind == "TanhInflection") {
    d["a"] = 1.0;
    d["u_plus"] = 1.0;
    d["z_max"] = nullptr;
  } else if (kind == "ChannelParabolic") {
    d["height"] = 2.0;
  } else if (kind == "PoiseuilleCentered") {
  } else if (kind == "Tabulated") {
    d["path"] = "";
    d["z_max"] = nullptr;
  } else {
    config_error("profile.kind: unknown profile kind '" + kind + "'");
  }
  return d;
}

bool is_number_list(const json& v) {
  if (!v.is_array()) return false;
  for (const auto& x : v)
    if (!x.is_number()) return false;
  return true;
}

// Keys whose value may take more than one shape.
json flexible(const std::string& key, const json& value, const json& fallback, const std::string& where) {
  if (key == "alpha" || key == "A" || (key == "R" && fallback.is_array())) {
    if (value.is_number()) return json::array({value});
    if (is_number_list(value)) return value;
    config_error(where + ": expected a number or a list of numbers");
  }
  if (key == "R") {  // neutral-curve: list or {min, max, per_decade}
    if (is_number_list(value)) return value;
    if (!value.is_object()) config_error(where + ": expected a list of numbers or {min, max, per_decade}");
    json out = fallback;
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (!out.contains(it.key())) config_error("unknown key '" + where + "." + it.key() + "'");
      if (!it.value().is_number()) config_error(where + "." + it.key() + ": expected a number");
      out[it.key()] = it.value();
    }
    return out;
  }
  if (key == "guess" && fallback.is_string()) {
    if (value.is_string()) {
      const auto s = value.get<std::string>();
      if (s != "asymptotic" && s != "scan") config_error(where + ": expected \"asymptotic\", \"scan\" or [re, im]");
      return value;
    }
    if (is_number_list(value) && value.size() == 2) return value;
    config_error(where + ": expected \"asymptotic\", \"scan\" or [re, im]");
  }
  return json();
}

void check_type(const json& value, const json& fallback, const std::string& where) {
  bool ok = true;
  if (fallback.is_boolean()) ok = value.is_boolean();
  else if (fallback.is_number_integer()) ok = value.is_number_integer();
  else if (fallback.is_number()) ok = value.is_number();
  else if (fallback.is_string()) ok = value.is_string();
  else if (fallback.is_null()) ok = value.is_null() || value.is_number();
  if (!ok) config_error(where + ": value has the wrong type");
}

json merge(const json& defaults, const json& user, const std::string& where) {
  if (!user.is_object()) config_error(where + ": expected a table");
  json out = defaults;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!defaults.contains(it.key())) config_error("unknown key '" + path + "'");
    const json& fallback = defaults[it.key()];
    if (json f = flexible(it.key(), it.value(), fallback, path); !f.is_null()) {
      out[it.key()] = f;
    } else if (fallback.is_object()) {
      out[it.key()] = merge(fallback, it.value(), path);
    } else {
      check_type(it.value(), fallback, path);
      out[it.key()] = it.value();
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {"criteria",       "rayleigh",      "os-solve",
                                                 "asymptotics",    "tietjens-table", "neutral-curve"};
  return names;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot read config file " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
}

json resolve_config(const std::string& task, const json& user_in, const Flags& flags) {
  const json user = user_in.is_null() ? json::object() : user_in;
  if (!user.is_object()) config_error("config must be a table");
  for (auto it = user.begin(); it != user.end(); ++it) {
    static const char* keys[] = {"task", "profile", "parameters", "output", "seed"};
    if (std::find(std::begin(keys), std::end(keys), it.key()) == std::end(keys))
      config_error("unknown key '" + it.key() + "'");
  }
  if (user.contains("task")) {
    if (!user["task"].is_string()) config_error("task: expected a string");
    if (user["task"].get<std::string>() != task)
      config_error("config is for task '" + user["task"].get<std::string>() + "', not '" + task + "'");
  }

  json out;
  out["task"] = task;

  const json pblock = user.contains("profile") ? user["profile"] : json::object();
  if (!pblock.is_object()) config_error("profile: expected a table");
  std::string kind = "Exponential";
  if (pblock.contains("kind")) {
    if (!pblock["kind"].is_string()) config_error("profile.kind: expected a string");
    kind = pblock["kind"].get<std::string>();
  }
  json profile = merge(profile_defaults(kind), pblock, "profile");
  if (kind == "Tabulated" && profile["path"].get<std::string>().empty())
    config_error("profile.path: a tabulated profile needs a data file");
  try {
    const ShearProfile built = build_profile(profile);
    if (profile.contains("z_max") && profile["z_max"].is_null()) profile["z_max"] = built.z_max();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IoError) throw;
    config_error(std::string("profile: ") + e.what());
  }
  out["profile"] = profile;

  json params = merge(task_defaults(task), user.contains("parameters") ? user["parameters"] : json::object(),
                      "parameters");
  if (flags.tol) {
    if (!params.contains("tol")) config_error("--tol has no meaning for task '" + task + "'");
    params["tol"] = *flags.tol;
  }
  if (task == "os-solve" && params["alpha"].empty() == params["A"].empty())
    config_error("parameters: os-solve needs exactly one of alpha or A");
  if (params.contains("parity")) {
    const auto p = params["parity"];
    if (!p.is_string() || (p != "even" && p != "odd" && p != "none"))
      config_error("parameters.parity: expected \"even\", \"odd\" or \"none\"");
  }
  out["parameters"] = params;

  std::string output = "out";
  if (user.contains("output")) {
    if (!user["output"].is_string()) config_error("output: expected a string");
    output = user["output"].get<std::string>();
  }
  if (const char* env = std::getenv(kOutputEnv); env && *env) output = env;
  if (flags.out) output = *flags.out;
  out["output"] = output;

  long long seed = 0;
  if (user.contains("seed")) {
    if (!user["seed"].is_number_integer()) config_error("seed: expected an integer");
    seed = user["seed"].get<long long>();
  }
  out["seed"] = seed;
  return out;
}

ShearProfile build_profile(const json& b) {
  const std::string kind = b.at("kind").get<std::string>();
  auto truncated = [&](ShearProfile p) {
    if (b.contains("z_max") && b["z_max"].is_number()) return p.with_truncation(b["z_max"].get<double>());
    return p;
  };
  if (kind == "Exponential")
    return truncated(ShearProfile::exponential(b.at("u_plus").get<double>(), b.at("eta").get<double>()));
  if (kind == "ErfHeat") return truncated(ShearProfile::erf_heat(b.at("t").get<double>(), b.at("u_plus").get<double>()));
  if (kind == "TanhInflection")
    return truncated(ShearProfile::tanh_inflection(b.at("a").get<double>(), b.at("u_plus").get<double>()));
  if (kind == "ChannelParabolic") return ShearProfile::channel_parabolic(b.at("height").get<double>());
  if (kind == "PoiseuilleCentered") return ShearProfile::poiseuille_centered();
  if (kind == "Tabulated") return truncated(ShearProfile::load_tabulated(b.at("path").get<std::string>()));
  config_error("profile.kind: unknown profile kind '" + kind + "'");
}

}  // namespace shearstab::cli
