#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shearstab/profiles.hpp"

namespace shearstab::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kOutputEnv = "SHEARSTAB_OUT";

/// Fixed-size pool of worker threads; run() blocks until every task is done.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  void run(std::vector<std::function<void()>>& tasks) const;
  int workers() const noexcept { return workers_; }

 private:
  int workers_;
};

struct Flags {
  std::optional<std::filesystem::path> config;
  int jobs = 1;
  std::optional<std::string> out;
  std::optional<double> tol;
};

const std::vector<std::string>& task_names();

/// Validates `user` against the schema of `task` (unknown keys rejected) and
/// returns the fully resolved configuration with every default filled in.
/// Command-line overrides are applied on top. Raises ConfigError.
json resolve_config(const std::string& task, const json& user, const Flags& flags);

json load_config(const std::filesystem::path& path);

ShearProfile build_profile(const json& block);

/// Runs a resolved configuration. Exit status: 0 success, 1 configuration or
/// I/O error, 2 solver failure (an error record is written to error.json).
int run(const json& resolved, const WorkerPool& pool, std::ostream& log);

/// Full command-line entry point.
int main_entry(int argc, char** argv);

// Output helpers, exposed for the tests.
std::string format_double(double v);
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace shearstab::cli
