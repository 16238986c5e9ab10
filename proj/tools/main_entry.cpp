#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "shearstab/errors.hpp"

namespace shearstab::cli {

int main_entry(int argc, char** argv) {
  CLI::App app{"Shear-flow stability toolkit"};
  app.require_subcommand(1);
  Flags flags;
  std::string config;
  double tol = 0.0;
  std::string out;
  app.add_option("--config", config, "job configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "output directory (overrides the config and $SHEARSTAB_OUT)");
  auto* tol_opt = app.add_option("--tol", tol, "solver tolerance override")->check(CLI::PositiveNumber);
  for (const auto& name : task_names()) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (!config.empty()) flags.config = config;
  if (out_opt->count()) flags.out = out;
  if (tol_opt->count()) flags.tol = tol;
  const std::string task = app.get_subcommands().front()->get_name();

  json resolved;
  try {
    const json user = flags.config ? load_config(*flags.config) : json::object();
    resolved = resolve_config(task, user, flags);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  const WorkerPool pool(flags.jobs);
  return run(resolved, pool, std::cerr);
}

}  // namespace shearstab::cli
