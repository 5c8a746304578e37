// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include "nimlab/errors.hpp"
#include "nimlab/experiments.hpp"

using namespace nimlab;
namespace fs = std::filesystem;

namespace
{

fs::path ScratchDir(const std::string &name)
{
  const fs::path dir = fs::temp_directory_path() / "nimlab-unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string FirstLine(const fs::path &path)
{
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  return line;
}

nlohmann::json ReadJson(const fs::path &path)
{
  std::ifstream is(path);
  return nlohmann::json::parse(is);
}

}  // namespace

TEST_SUITE("experiments")
{
  TEST_CASE("delta sweep values")
  {
    const DeltaSweep sweep;
    const auto v = sweep.Values();
    REQUIRE(v.size() == 7u);
    CHECK(v.front() == doctest::Approx(0.1));
    CHECK(v.back() == doctest::Approx(1e-3));
    for (std::size_t i = 1; i < v.size(); i++)
    {
      CHECK(v[i - 1] / v[i] == doctest::Approx(std::pow(10.0, 1.0 / 3.0)));
    }
    CHECK_THROWS_AS((DeltaSweep{1e-3, 1e-1, 7}.Validate()), InvalidInput);
    CHECK_THROWS_AS((DeltaSweep{1e-1, 1e-3, 2}.Validate()), InvalidInput);
    CHECK_THROWS_AS((DeltaSweep{1.5, 1e-3, 7}.Validate()), InvalidInput);
  }

  TEST_CASE("configuration defaults round-trip through json")
  {
    const ExperimentConfig defaults;
    CHECK_NOTHROW(defaults.Validate());
    const auto j = to_json(defaults);
    CHECK(j.at("mesh_n") == 384);
    CHECK(j.at("delta").at("count") == 7);
    const ExperimentConfig back = config_from_json(j);
    CHECK(to_json(back) == j);
    const ExperimentConfig empty = config_from_json(nlohmann::json::object());
    CHECK(to_json(empty) == j);
  }

  TEST_CASE("configuration overlays and errors")
  {
    const ExperimentConfig c = config_from_json(
        nlohmann::json::parse(R"({"delta": {"count": 5}, "maxwell": {"steps": 10}})"));
    CHECK(c.delta.count == 5);
    CHECK(c.delta.start == doctest::Approx(0.1));
    CHECK(c.maxwell.steps == 10);
    CHECK(c.maxwell.grid_n == 96);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"mesh": 3})")), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"delta": {"begin": 3}})")), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"mesh_n": "many"})")), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"preset": "lens"})")), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"delta": {"count": 2}})")), InvalidInput);
  }

  TEST_CASE("configuration files")
  {
    const fs::path dir = ScratchDir("config");
    {
      std::ofstream os(dir / "c.json");
      os << R"({"preset": "cloak-k", "k": 0.5})";
    }
    const ExperimentConfig c = load_config(dir / "c.json");
    CHECK(c.preset == "cloak-k");
    CHECK(c.k == 0.5);
    {
      std::ofstream os(dir / "bad.json");
      os << "{not json";
    }
    CHECK_THROWS_AS(load_config(dir / "bad.json"), InvalidInput);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), InvalidInput);
  }

  TEST_CASE("subcommand names")
  {
    const auto &names = subcommand_names();
    CHECK(names.size() == 10u);
    CHECK(std::find(names.begin(), names.end(), "selftest") != names.end());
    ExperimentConfig c;
    c.out = ScratchDir("unknown");
    CHECK_THROWS_AS(run_experiment("no-such-command", c), InvalidInput);
    c.preset = "cloak-qs";
    CHECK_THROWS_AS(run_experiment("superlens-rate", c), InvalidInput);
  }

  TEST_CASE("pushforward oracle and composite identity")
  {
    CHECK(pushforward_oracle_residual(7, 4) <= 1e-10);
    CHECK(cloak_identity_defect(7, 200, 2.0, 4.0, 8.0) <= 1e-12);
  }

  TEST_CASE("poisson convergence study")
  {
    const PoissonStudy s = poisson_convergence({16, 32, 64});
    REQUIRE(s.h.size() == 3u);
    CHECK(s.l2_error[2] < s.l2_error[1]);
    CHECK(std::abs(s.slope - 2.0) <= 0.2);
  }

  TEST_CASE("selftest writes a passing summary")
  {
    ExperimentConfig c;
    c.out = ScratchDir("selftest");
    const auto outcome = run_experiment("selftest", c);
    CHECK(outcome.Pass());
    const auto summary = ReadJson(c.out / "summary.json");
    CHECK(summary.at("subcommand") == "selftest");
    CHECK(summary.at("pass") == true);
    for (const auto &r : summary.at("results"))
    {
      CHECK(r.contains("criterion"));
      CHECK(r.contains("measured"));
      CHECK(r.contains("threshold"));
      CHECK(r.contains("pass"));
    }
    CHECK(FirstLine(c.out / "poisson.csv") == "h,l2_error");
  }

  TEST_CASE("passivity experiment")
  {
    ExperimentConfig c;
    c.out = ScratchDir("passivity");
    c.passivity.trials = 10;
    c.passivity.pole_sets = 5;
    const auto outcome = run_passivity(c);
    CHECK(outcome.Pass());
    CHECK(outcome.results.size() == 3u);
  }

  TEST_CASE("small superlens sweep writes its artifacts")
  {
    ExperimentConfig c;
    c.out = ScratchDir("superlens");
    c.mesh_n = 64;
    c.coarse_mesh_n = 48;
    c.delta = {0.1, 0.01, 4};
    c.write_vtk = false;
    const auto outcome = run_superlens_rate(c);
    CHECK(outcome.results.size() == 3u);
    CHECK(FirstLine(c.out / "norms.csv") == "delta,norm_kind,region,value");
    CHECK(FirstLine(c.out / "errors.csv") == "delta,error,region,included");
    CHECK(FirstLine(c.out / "fit_whole.csv") == "slope,intercept,r2,n_points");
    CHECK(fs::exists(c.out / "summary.json"));
    CHECK_FALSE(fs::exists(c.out / "mesh.vtk"));
  }
}
