#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "shearstab/errors.hpp"

using namespace shearstab;
using namespace shearstab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shearstab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "shearstab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

ErrorKind config_kind(const std::string& task, const json& user, const Flags& flags = {}) {
  try {
    resolve_config(task, user, flags);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("resolved configuration fills every default") {
    const auto r = resolve_config("rayleigh", json::object(), {});
    CHECK(r["task"] == "rayleigh");
    CHECK(r["profile"]["kind"] == "Exponential");
    CHECK(r["profile"]["z_max"].is_number());
    CHECK(r["parameters"]["tol"] == 1e-12);
    CHECK(r["output"] == "out");
    CHECK(r["seed"] == 0);
  }

  TEST_CASE("strict schema") {
    CHECK(config_kind("criteria", {{"paramters", json::object()}}) == ErrorKind::ConfigError);
    CHECK(config_kind("criteria", {{"profile", {{"kind", "TanhInflection"}, {"b", 1.0}}}}) == ErrorKind::ConfigError);
    CHECK(config_kind("criteria", {{"profile", {{"kind", "Nope"}}}}) == ErrorKind::ConfigError);
    CHECK(config_kind("rayleigh", {{"parameters", {{"tol", "small"}}}}) == ErrorKind::ConfigError);
    CHECK(config_kind("os-solve", {{"parameters", {{"alpha", 0.1}, {"A", 1.0}}}}) == ErrorKind::ConfigError);
    CHECK(config_kind("os-solve", {{"parameters", {{"parity", "sideways"}}}}) == ErrorKind::ConfigError);
    CHECK(config_kind("asymptotics", {{"task", "criteria"}}) == ErrorKind::ConfigError);
    Flags f;
    f.tol = 1e-9;
    CHECK(config_kind("tietjens-table", json::object(), f) == ErrorKind::ConfigError);
    try {
      resolve_config("criteria", {{"profile", {{"etaa", 2.0}}}}, {});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("profile.etaa") != std::string::npos);
    }
  }

  TEST_CASE("flexible value shapes") {
    const auto r = resolve_config("os-solve", {{"parameters", {{"alpha", 0.15}, {"R", 1e5}, {"guess", {0.13, 0.003}}}}},
                                  {});
    CHECK(r["parameters"]["alpha"] == json::array({0.15}));
    CHECK(r["parameters"]["R"] == json::array({1e5}));
    const auto n = resolve_config("neutral-curve", {{"parameters", {{"R", {{"max", 1e6}}}}}}, {});
    CHECK(n["parameters"]["R"]["min"] == 1e5);
    CHECK(n["parameters"]["R"]["max"] == 1e6);
  }

  TEST_CASE("output directory precedence") {
    Flags f;
    CHECK(resolve_config("criteria", {{"output", "from_config"}}, f)["output"] == "from_config");
    setenv(kOutputEnv, "from_env", 1);
    CHECK(resolve_config("criteria", {{"output", "from_config"}}, f)["output"] == "from_env");
    f.out = "from_flag";
    CHECK(resolve_config("criteria", {{"output", "from_config"}}, f)["output"] == "from_flag");
    unsetenv(kOutputEnv);
  }

  TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    CHECK(invoke({"criteria", "--out", (dir / "ok").string()}) == 0);
    CHECK(fs::exists(dir / "ok" / "criteria.json"));
    CHECK(invoke({"no-such-task"}) == 1);
    write_file(dir / "bad.json", R"({"parameters": {"scan_pointz": 3}})");
    CHECK(invoke({"criteria", "--config", (dir / "bad.json").string(), "--out", (dir / "bad").string()}) == 1);
    write_file(dir / "broken.json", "{ not json");
    CHECK(invoke({"criteria", "--config", (dir / "broken.json").string()}) == 1);
    // A scan without unstable inviscid modes is a result, not a failure.
    write_file(dir / "empty.json",
               R"({"parameters": {"alpha": [0.3], "guess": {"re_lo": 0.2, "re_hi": 0.4, "n_re": 2, "n_im": 2}}})");
    CHECK(invoke({"rayleigh", "--config", (dir / "empty.json").string(), "--out", (dir / "empty").string()}) == 0);
    CHECK(json::parse(slurp(dir / "empty" / "rayleigh.json"))["eigenpairs"].empty());
    // A solver failure is recorded and gives exit status 2.
    write_file(dir / "fail.json", R"({"parameters": {"alpha": 0.15, "guess": [5.0, 0.0]}})");
    CHECK(invoke({"os-solve", "--config", (dir / "fail.json").string(), "--out", (dir / "fail").string()}) == 2);
    CHECK(json::parse(slurp(dir / "fail" / "os_solve.json")).dump().find("error") != std::string::npos);
  }

  TEST_CASE("outputs are deterministic across worker counts") {
    const fs::path dir = scratch("det");
    write_file(dir / "cfg.json", R"({"profile": {"kind": "TanhInflection", "a": 1.0},
                                   "parameters": {"alpha": [0.3, 0.4, 0.5]}})");
    const auto cfg = (dir / "cfg.json").string();
    REQUIRE(invoke({"rayleigh", "--config", cfg, "--jobs", "1", "--out", (dir / "a").string()}) == 0);
    REQUIRE(invoke({"rayleigh", "--config", cfg, "--jobs", "3", "--out", (dir / "b").string()}) == 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      CAPTURE(e.path().filename().string());
      if (e.path().filename() == "manifest.json") {
        json ma = json::parse(slurp(e.path())), mb = json::parse(slurp(dir / "b" / "manifest.json"));
        ma.erase("output");
        mb.erase("output");
        CHECK(ma == mb);
      } else {
        CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
      }
      CHECK(e.path().extension() != ".tmp");
      ++files;
    }
    CHECK(files >= 3);

    // The manifest is a complete configuration that reproduces the run.
    json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    manifest["output"] = (dir / "c").string();
    write_file(dir / "manifest.json", manifest.dump());
    REQUIRE(invoke({"rayleigh", "--config", (dir / "manifest.json").string()}) == 0);
    CHECK(slurp(dir / "a" / "rayleigh.json") == slurp(dir / "c" / "rayleigh.json"));
  }

  TEST_CASE("atomic writes replace the target") {
    const fs::path dir = scratch("atomic");
    write_atomic(dir / "x.txt", "first");
    write_atomic(dir / "x.txt", "second");
    CHECK(slurp(dir / "x.txt") == "second");
    CHECK(!fs::exists(dir / "x.txt.tmp"));
    CHECK_THROWS_AS(write_atomic(dir / "missing" / "deeper" / "\0x", "z"), std::exception);
  }

  TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 5772.22}) CHECK(std::stod(format_double(v)) == v);
  }

  TEST_CASE("task outputs") {
    const fs::path dir = scratch("tasks");
    REQUIRE(invoke({"tietjens-table", "--out", (dir / "t").string()}) == 0);
    std::istringstream t(slurp(dir / "t" / "tietjens.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(t, line)) ++rows;
    CHECK(rows == 201);
    write_file(dir / "os.json", R"({"parameters": {"A": 2.0, "R": [1e6, 1e7]}})");
    REQUIRE(invoke({"os-solve", "--config", (dir / "os.json").string(), "--out", (dir / "o").string()}) == 0);
    const json os = json::parse(slurp(dir / "o" / "os_solve.json"));
    CHECK(os.dump().find("growth_rate") != std::string::npos);
    REQUIRE(invoke({"asymptotics", "--out", (dir / "a").string()}) == 0);
    CHECK(json::parse(slurp(dir / "a" / "asymptotics.json")).dump().find("tietjens_arg") != std::string::npos);
  }
}
