// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include "nimlab/errors.hpp"
#include "nimlab/experiments.hpp"
#include "nimlab/report.hpp"

namespace
{

using namespace nimlab;

struct Criterion
{
  int id;
  std::string title;
  std::string subcommand;
  std::vector<std::string> results;  // criterion names in the subcommand summary
  double budget_seconds;             // runtime limit of the criterion (0: none)
};

const std::vector<Criterion> &Criteria()
{
  static const std::vector<Criterion> list{
      {1, "superlens whole-domain rate", "superlens-rate", {"superlens-whole-rate"}, 600.0},
      {2, "superlens exterior rate", "superlens-rate", {"superlens-exterior-rate"}, 600.0},
      {3, "magnification", "superlens-rate", {"superlens-magnification"}, 600.0},
      {4, "finite-frequency superlens", "superlens-k", {"superlens-k-exterior-rate"}, 0.0},
      {5,
       "cloak exterior convergence",
       "cloak-rate",
       {"cloak-exterior-rate", "cloak-exterior-monotone", "cloak-blowup-indicator"},
       0.0},
      {6, "ALR object cloak", "alr-cloak", {"alr-exterior-rate"}, 0.0},
      {7,
       "negative control",
       "defective-cloak",
       {"defective-cloak-visible", "defective-cloak-limit"},
       0.0},
      {8, "stability scaling", "stability-scan", {"stability-scaling"}, 0.0},
      {9,
       "pushforward oracle",
       "selftest",
       {"pushforward-oracle", "cloak-composite-identity"},
       60.0},
      {10,
       "Maxwell energy bound",
       "maxwell-energy",
       {"maxwell-energy-nonincreasing", "maxwell-energy-estimate"},
       300.0},
      {11,
       "finite speed",
       "maxwell-speed",
       {"maxwell-finite-speed-vacuum", "maxwell-finite-speed-lorentz"},
       300.0},
      {12,
       "causality and passivity",
       "passivity",
       {"causality", "passivity", "convolution-positivity"},
       60.0},
      {13, "FEM Poisson baseline", "selftest", {"poisson-l2-rate"}, 0.0},
  };
  return list;
}

struct Run
{
  ExperimentOutcome outcome;
  double seconds = 0.0;
  std::string error;
};

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Runs the acceptance criteria and prints one PASS/FAIL line per criterion"};
  std::filesystem::path out = "acceptance-out";
  std::vector<int> only;
  app.add_option("--out", out, "Directory for the experiment outputs");
  app.add_option("criteria", only, "Criterion numbers to run (default: all)")
      ->check(CLI::Range(1, 13));
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  std::map<std::string, Run> runs;
  bool all_pass = true;
  for (const auto &c : Criteria())
  {
    if (!selected.empty() && !selected.count(c.id))
    {
      continue;
    }
    auto it = runs.find(c.subcommand);
    if (it == runs.end())
    {
      ExperimentConfig config;
      config.out = out / c.subcommand;
      config.write_vtk = false;
      Run run;
      const auto start = std::chrono::steady_clock::now();
      try
      {
        run.outcome = run_experiment(c.subcommand, config);
      }
      catch (const std::exception &e)
      {
        run.error = e.what();
      }
      run.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      it = runs.emplace(c.subcommand, std::move(run)).first;
    }
    const Run &run = it->second;

    bool pass = run.error.empty();
    std::string detail = run.error;
    for (const auto &name : c.results)
    {
      const CriterionResult *found = nullptr;
      for (const auto &r : run.outcome.results)
      {
        if (r.criterion == name)
        {
          found = &r;
        }
      }
      if (!found)
      {
        pass = false;
        if (run.error.empty())
        {
          detail += (detail.empty() ? "" : "; ") + name + " missing";
        }
        continue;
      }
      pass = pass && found->pass;
      detail += (detail.empty() ? "" : "; ") + describe(*found);
    }
    if (c.budget_seconds > 0.0 && run.seconds > c.budget_seconds)
    {
      pass = false;
      detail += "; runtime " + format_double(run.seconds) + " s exceeds " +
                format_double(c.budget_seconds) + " s";
    }
    all_pass = all_pass && pass;
    std::printf("criterion %2d %s: %s [%s, %.1f s] %s\n", c.id, pass ? "PASS" : "FAIL",
                c.title.c_str(), c.subcommand.c_str(), run.seconds, detail.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
