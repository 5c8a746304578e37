// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_EXPERIMENTS_HPP
#define NIMLAB_EXPERIMENTS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>
#include <json.hpp>
#include "nimlab/maxwell.hpp"
#include "nimlab/report.hpp"

namespace nimlab
{

struct DeltaSweep
{
  double start = 1e-1;
  double stop = 1e-3;
  int count = 7;

  // Geometric sequence from start to stop (inclusive).
  std::vector<double> Values() const;
  void Validate() const;
};

struct BumpSourceConfig
{
  double radius = 9.0;
  double radial_half_width = 0.5;
  double angular_half_width = 0.4;
};

struct SuperlensConfig
{
  double m = 4.0;
  double r0 = 1.0;
  double object_a = 2.0;
  double object_sigma = 1.0;
  double outer_radius = 10.0;
  BumpSourceConfig source;
};

struct SuperlensKConfig
{
  double outer_radius_factor = 3.0;  // R = factor * r3, absorbing boundary
  BumpSourceConfig source{10.0, 0.5, 0.4};
};

struct CloakConfig
{
  double r1 = 0.5;
  double r2 = 2.0;
  double r3 = 8.0;
  double outer_radius = 10.0;
  double object_a = 3.0;
  double fade_start = 3.5;  // object coefficient relaxes to I on [fade_start, fade_end]
  double fade_end = 4.0;
};

struct AlrConfig
{
  double r0 = 0.1;
  double r1 = 2.0;
  double r2 = 4.0;
  double outer_radius = 10.0;
  double object_a = 5.0;
  std::array<double, 2> x1{2.0, 0.0};
  std::array<double, 2> x2{4.0, 0.0};
};

struct DefectiveCloakConfig
{
  double r0 = 0.3;
  double r1 = 2.0;
  double r2 = 4.0;
  double outer_radius = 10.0;
  double object_a = 5.0;
  std::array<double, 2> x3{8.0, 0.0};
  double visibility_factor = 5.0;
};

struct PoleConfig
{
  double omega_p = 0.4;
  double omega_0 = 0.5;
  double gamma = 0.05;
};

struct MaxwellConfig
{
  int grid_n = 96;
  double h = 1.0;
  int steps = 500;
  double cfl = 0.9;
  double eps_rel = 1.0;
  double mu_rel = 1.0;
  std::vector<PoleConfig> electric{PoleConfig{}};
  std::vector<PoleConfig> magnetic{PoleConfig{0.3, 0.7, 0.05}};
  double pulse_width = 4.0;  // Gaussian standard deviation in cells
  double source_frequency = 0.3;
  double energy_tolerance = 1e-10;
  // Finite-speed run
  int cone_radius_cells = 30;
  double cone_pulse_sigma_cells = 3.0;
  double cone_pulse_cutoff_sigmas = 8.6;
  double cone_margin_cells = 2.0;
  double cone_threshold = 1e-12;
  std::array<int, 3> cone_grid{120, 64, 64};
  bool write_vtk = false;  // full-grid ASCII snapshots are large
};

struct PassivityConfig
{
  int trials = 100;
  int pole_sets = 50;
  int samples = 400;
  double dt = 0.05;
  double tolerance = 1e-10;
};

struct ExperimentConfig
{
  std::string preset;  // empty: the subcommand's default device
  DeltaSweep delta;
  double k = 1.0;  // wavenumber of the finite-frequency presets
  int mesh_n = 384;
  int coarse_mesh_n = 256;
  double floor_factor = 3.0;
  double alpha = 0.5;
  std::uint64_t seed = 20240611;
  std::filesystem::path out = "nimlab-out";
  bool write_vtk = true;
  SuperlensConfig superlens;
  SuperlensKConfig superlens_k;
  CloakConfig cloak;
  AlrConfig alr;
  DefectiveCloakConfig defective;
  MaxwellConfig maxwell;
  PassivityConfig passivity;

  void Validate() const;
};

nlohmann::ordered_json to_json(const ExperimentConfig &config);

// Overlays `patch` on the defaults; unknown keys and wrong types are rejected.
ExperimentConfig config_from_json(const nlohmann::json &patch);
ExperimentConfig load_config(const std::filesystem::path &path);

struct ExperimentOutcome
{
  std::string subcommand;
  std::vector<CriterionResult> results;

  bool Pass() const;
};

const std::vector<std::string> &subcommand_names();

// Writes the CSV/VTK artifacts and summary.json into config.out.
ExperimentOutcome run_experiment(const std::string &subcommand, const ExperimentConfig &config);

ExperimentOutcome run_superlens_rate(const ExperimentConfig &config);
ExperimentOutcome run_superlens_k(const ExperimentConfig &config);
ExperimentOutcome run_cloak_rate(const ExperimentConfig &config);
ExperimentOutcome run_alr_cloak(const ExperimentConfig &config);
ExperimentOutcome run_defective_cloak(const ExperimentConfig &config);
ExperimentOutcome run_stability_scan(const ExperimentConfig &config);
ExperimentOutcome run_maxwell_energy(const ExperimentConfig &config);
ExperimentOutcome run_maxwell_speed(const ExperimentConfig &config);
ExperimentOutcome run_passivity(const ExperimentConfig &config);
ExperimentOutcome run_selftest(const ExperimentConfig &config);

// Pieces shared with the tests.
double pushforward_oracle_residual(std::uint64_t seed, int fields);
double cloak_identity_defect(std::uint64_t seed, int samples, double r1, double r2, double r3);
struct PoissonStudy
{
  std::vector<double> h;
  std::vector<double> l2_error;
  double slope;
};
PoissonStudy poisson_convergence(const std::vector<int> &angular_counts);

}  // namespace nimlab

#endif  // NIMLAB_EXPERIMENTS_HPP
