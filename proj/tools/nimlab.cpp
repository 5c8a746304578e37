// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <CLI11.hpp>
#include "nimlab/errors.hpp"
#include "nimlab/experiments.hpp"

namespace
{

enum ExitCode
{
  kPass = 0,
  kCriterionFailed = 1,
  kUsageError = 2,
  kSolverError = 3
};

struct Overrides
{
  std::string config_path;
  std::string out;
  std::string preset;
  std::optional<double> delta_start, delta_stop, k;
  std::optional<int> delta_count, mesh_n, coarse_mesh_n, grid_n, steps;
  std::optional<std::uint64_t> seed;
  bool no_vtk = false;
  bool dump_config = false;
};

void AddOptions(CLI::App &sub, Overrides &o)
{
  sub.add_option("--config", o.config_path, "JSON config file (defaults reproduce the acceptance setup)")
      ->check(CLI::ExistingFile);
  sub.add_option("--out", o.out, "Output directory");
  sub.add_option("--preset", o.preset, "Device preset name");
  sub.add_option("--delta-start", o.delta_start, "Largest loss parameter of the sweep");
  sub.add_option("--delta-stop", o.delta_stop, "Smallest loss parameter of the sweep");
  sub.add_option("--delta-count", o.delta_count, "Number of geometric sweep points");
  sub.add_option("--mesh-n", o.mesh_n, "Angular resolution of the fine mesh");
  sub.add_option("--coarse-mesh-n", o.coarse_mesh_n, "Angular resolution of the floor mesh");
  sub.add_option("--k", o.k, "Wavenumber of the finite-frequency presets");
  sub.add_option("--grid-n", o.grid_n, "Yee grid cells per axis (maxwell-energy)");
  sub.add_option("--steps", o.steps, "Time steps (maxwell-energy)");
  sub.add_option("--seed", o.seed, "Random seed");
  sub.add_flag("--no-vtk", o.no_vtk, "Skip VTK field exports");
  sub.add_flag("--dump-config", o.dump_config, "Print the effective config as JSON and exit");
}

nimlab::ExperimentConfig Resolve(const Overrides &o)
{
  nimlab::ExperimentConfig c =
      o.config_path.empty() ? nimlab::config_from_json(nlohmann::json::object())
                            : nimlab::load_config(o.config_path);
  if (!o.out.empty())
  {
    c.out = o.out;
  }
  if (!o.preset.empty())
  {
    c.preset = o.preset;
  }
  if (o.delta_start) c.delta.start = *o.delta_start;
  if (o.delta_stop) c.delta.stop = *o.delta_stop;
  if (o.delta_count) c.delta.count = *o.delta_count;
  if (o.mesh_n) c.mesh_n = *o.mesh_n;
  if (o.coarse_mesh_n) c.coarse_mesh_n = *o.coarse_mesh_n;
  if (o.k) c.k = *o.k;
  if (o.grid_n) c.maxwell.grid_n = *o.grid_n;
  if (o.steps) c.maxwell.steps = *o.steps;
  if (o.seed) c.seed = *o.seed;
  if (o.no_vtk)
  {
    c.write_vtk = false;
    c.maxwell.write_vtk = false;
  }
  c.Validate();
  return c;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"nimlab: negative-index metamaterial experiments"};
  app.require_subcommand(1);
  Overrides overrides;
  for (const auto &name : nimlab::subcommand_names())
  {
    AddOptions(*app.add_subcommand(name, "Run the " + name + " experiment"), overrides);
  }
  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsageError;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try
  {
    const nimlab::ExperimentConfig config = Resolve(overrides);
    if (overrides.dump_config)
    {
      std::cout << nimlab::to_json(config).dump(2) << '\n';
      return kPass;
    }
    const nimlab::ExperimentOutcome outcome = nimlab::run_experiment(subcommand, config);
    for (const auto &r : outcome.results)
    {
      std::cout << nimlab::describe(r) << '\n';
    }
    std::cout << "summary: " << (config.out / "summary.json").string() << '\n';
    return outcome.Pass() ? kPass : kCriterionFailed;
  }
  catch (const nimlab::InvalidInput &e)
  {
    std::cerr << "nimlab " << subcommand << ": " << e.what() << '\n';
    return kUsageError;
  }
  catch (const nimlab::SolverError &e)
  {
    std::cerr << "nimlab " << subcommand << ": solver error: " << e.what() << '\n';
    return kSolverError;
  }
  catch (const std::exception &e)
  {
    std::cerr << "nimlab " << subcommand << ": solver error: " << e.what() << '\n';
    return kSolverError;
  }
}
