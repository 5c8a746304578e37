// SPDX-License-Identifier: Apache-2.0

#include "nimlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include "nimlab/diagnostics.hpp"
#include "nimlab/errors.hpp"
#include "nimlab/fem.hpp"
#include "nimlab/media.hpp"
#include "nimlab/transforms.hpp"

namespace nimlab
{

namespace
{

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const Eigen::Matrix2d kI2 = Eigen::Matrix2d::Identity();

//
// Configuration (de)serialization.
//

ojson ToJson(const BumpSourceConfig &c)
{
  return {{"radius", c.radius},
          {"radial_half_width", c.radial_half_width},
          {"angular_half_width", c.angular_half_width}};
}

void FromJson(const json &j, BumpSourceConfig &c)
{
  j.at("radius").get_to(c.radius);
  j.at("radial_half_width").get_to(c.radial_half_width);
  j.at("angular_half_width").get_to(c.angular_half_width);
}

ojson ToJson(const PoleConfig &p)
{
  return {{"omega_p", p.omega_p}, {"omega_0", p.omega_0}, {"gamma", p.gamma}};
}

PoleConfig PoleFromJson(const json &j)
{
  PoleConfig p;
  for (const auto &[key, value] : j.items())
  {
    if (key != "omega_p" && key != "omega_0" && key != "gamma")
    {
      throw InvalidInput("unknown config key in pole: " + key);
    }
  }
  j.at("omega_p").get_to(p.omega_p);
  j.at("omega_0").get_to(p.omega_0);
  j.at("gamma").get_to(p.gamma);
  return p;
}

ojson PolesToJson(const std::vector<PoleConfig> &poles)
{
  ojson arr = ojson::array();
  for (const auto &p : poles)
  {
    arr.push_back(ToJson(p));
  }
  return arr;
}

std::vector<PoleConfig> PolesFromJson(const json &j)
{
  if (!j.is_array())
  {
    throw InvalidInput("pole lists must be JSON arrays");
  }
  std::vector<PoleConfig> poles;
  for (const auto &item : j)
  {
    poles.push_back(PoleFromJson(item));
  }
  return poles;
}

PoleList ToPoles(const std::vector<PoleConfig> &poles)
{
  PoleList out;
  for (const auto &p : poles)
  {
    out.push_back({p.omega_p, p.omega_0, p.gamma});
  }
  return out;
}

void CheckKeys(const json &patch, const json &schema, const std::string &path)
{
  if (!patch.is_object())
  {
    throw InvalidInput("config section '" + path + "' must be a JSON object");
  }
  for (const auto &[key, value] : patch.items())
  {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!schema.contains(key))
    {
      throw InvalidInput("unknown config key: " + full);
    }
    if (schema[key].is_object())
    {
      CheckKeys(value, schema[key], full);
    }
  }
}

//
// Output helpers.
//

std::ofstream OpenOutput(const std::filesystem::path &dir, const std::string &name)
{
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os)
  {
    throw InvalidInput("cannot write " + (dir / name).string());
  }
  return os;
}

void Log(const std::string &message)
{
  std::cerr << "[nimlab] " << message << std::endl;
}

CriterionResult Result(std::string name, double measured, double threshold, std::string comparison,
                       bool pass, std::string detail = {})
{
  return {std::move(name), measured, threshold, std::move(comparison), pass, std::move(detail)};
}

ExperimentOutcome Finish(const std::string &subcommand, const ExperimentConfig &config,
                         std::vector<CriterionResult> results)
{
  write_summary_json(config.out / "summary.json", subcommand, results);
  return {subcommand, std::move(results)};
}

std::size_t FindDelta(const std::vector<double> &deltas, double target)
{
  for (std::size_t i = 0; i < deltas.size(); i++)
  {
    if (std::abs(deltas[i] - target) <= 1e-9 * target)
    {
      return i;
    }
  }
  return deltas.size();
}

//
// Device setups: mesh factory, media, source and boundary condition per preset.
//

struct DeviceSetup
{
  std::string preset;
  Medium device;
  Medium reference;
  SourceTerm source;
  double k = 0.0;
  BoundaryKind boundary = BoundaryKind::Dirichlet;
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  std::function<Mesh(int)> make_mesh;
};

DeviceSetup SuperlensSetup(const ExperimentConfig &config, bool finite_frequency)
{
  const auto &c = config.superlens;
  const DeviceRadii radii = DeviceRadii::Superlens(c.m, c.r0);
  DeviceSetup s;
  s.r1 = radii.r1;
  s.r2 = radii.r2;
  s.r3 = radii.r3;
  const std::vector<double> circles{radii.r0, radii.r1, radii.r2, radii.r3};
  const MatrixField object_a = constant_matrix(c.object_a * kI2);
  if (!finite_frequency)
  {
    s.preset = "superlens-qs";
    auto pair = superlens_quasistatic(object_a, c.m, c.r0);
    s.device = std::move(pair.device);
    s.reference = std::move(pair.reference);
    s.source = angular_bump_source(c.source.radius, c.source.radial_half_width,
                                   c.source.angular_half_width);
    const double outer = c.outer_radius;
    s.make_mesh = [outer, circles](int n) { return build_annular_mesh(outer, circles, n); };
  }
  else
  {
    const auto &ck = config.superlens_k;
    s.preset = "superlens-k";
    auto pair = superlens_finite_freq(object_a, constant_scalar(c.object_sigma), c.m, c.r0);
    s.device = std::move(pair.device);
    s.reference = std::move(pair.reference);
    s.source = angular_bump_source(ck.source.radius, ck.source.radial_half_width,
                                   ck.source.angular_half_width);
    s.k = config.k;
    s.boundary = BoundaryKind::Absorbing;
    const double outer = ck.outer_radius_factor * radii.r3;
    if (!(ck.source.radius + ck.source.radial_half_width < outer))
    {
      throw InvalidInput("finite-frequency source must lie inside the absorbing boundary");
    }
    s.make_mesh = [outer, circles](int n) { return build_annular_mesh(outer, circles, n); };
  }
  if (!(s.source.support_min_radius >= radii.r3))
  {
    throw InvalidInput("source support must lie outside B_{r3}");
  }
  return s;
}

DeviceSetup CloakSetup(const ExperimentConfig &config, bool finite_frequency)
{
  const auto &c = config.cloak;
  DeviceSetup s;
  s.preset = finite_frequency ? "cloak-k" : "cloak-qs";
  s.r1 = c.r1;
  s.r2 = c.r2;
  s.r3 = c.r3;
  const MatrixField cloaked = smooth_radial_step(c.object_a, 1.0, c.fade_start, c.fade_end);
  MatrixField object = [cloaked, r2 = c.r2](const Point2 &x) -> Eigen::Matrix2d
  { return x.norm() > r2 ? cloaked(x) : kI2; };
  s.device = finite_frequency ? cloak_finite_freq(object, constant_scalar(1.0), c.r1, c.r2, c.r3)
                              : cloak(object, c.r1, c.r2, c.r3);
  s.reference = homogeneous_medium();
  s.source = angular_bump_source(config.superlens.source.radius,
                                 config.superlens.source.radial_half_width,
                                 config.superlens.source.angular_half_width);
  if (finite_frequency)
  {
    s.k = config.k;
    s.boundary = BoundaryKind::Absorbing;
  }
  if (!(s.source.support_min_radius >= c.r3) ||
      !(config.superlens.source.radius + config.superlens.source.radial_half_width < c.outer_radius))
  {
    throw InvalidInput("cloak source must lie in B_R outside B_{r3}");
  }
  const std::vector<double> circles{c.r1, c.r2, 2.0 * c.r2, c.r3};
  const double outer = c.outer_radius;
  s.make_mesh = [outer, circles](int n) { return build_annular_mesh(outer, circles, n); };
  return s;
}

DeviceSetup AlrSetup(const ExperimentConfig &config)
{
  const auto &c = config.alr;
  const Point2 x1(c.x1[0], c.x1[1]), x2(c.x2[0], c.x2[1]);
  auto pair = alr_lens_with_objects(constant_matrix(c.object_a * kI2), x1, x2, c.r0, c.r1, c.r2);
  DeviceSetup s;
  s.preset = "alr-objects";
  s.device = std::move(pair.device);
  s.reference = std::move(pair.reference);
  s.r1 = c.r1;
  s.r2 = c.r2;
  s.r3 = c.r2 * c.r2 / c.r1;
  s.source = angular_bump_source(config.superlens.source.radius,
                                 config.superlens.source.radial_half_width,
                                 config.superlens.source.angular_half_width);
  const std::vector<double> circles{c.r1, c.r2, s.r3};
  const double outer = c.outer_radius, r0 = c.r0;
  s.make_mesh = [outer, circles, x1, x2, r0](int n)
  {
    return embed_disk_inclusions(build_annular_mesh(outer, circles, n),
                                 {{x1, r0, HostSide::Inside}, {x2, r0, HostSide::Outside}});
  };
  return s;
}

DeviceSetup DefectiveSetup(const ExperimentConfig &config)
{
  const auto &c = config.defective;
  const Point2 x3(c.x3[0], c.x3[1]);
  auto pair = defective_cloak(constant_matrix(c.object_a * kI2), x3, c.r0, c.r1, c.r2);
  DeviceSetup s;
  s.preset = "defective-cloak";
  s.device = std::move(pair.device);
  s.reference = std::move(pair.reference);
  s.r1 = c.r1;
  s.r2 = c.r2;
  s.r3 = c.r2 * c.r2 / c.r1;
  s.source = angular_bump_source(config.superlens.source.radius,
                                 config.superlens.source.radial_half_width,
                                 config.superlens.source.angular_half_width);
  // The Kelvin image of B(x3, r0) is (to first order) the disk of radius r0 r2^2/r3^2 at F(x3).
  const Point2 image = kelvin_apply(c.r2, x3);
  const double image_radius = c.r0 * c.r2 * c.r2 / (s.r3 * s.r3);
  const std::vector<double> circles{c.r1, c.r2, s.r3};
  const double outer = c.outer_radius, r0 = c.r0;
  s.make_mesh = [outer, circles, x3, r0, image, image_radius](int n)
  {
    return embed_disk_inclusions(build_annular_mesh(outer, circles, n),
                                 {{x3, r0, HostSide::Inside}, {image, image_radius, HostSide::Outside}});
  };
  return s;
}

DeviceSetup SetupForPreset(const std::string &preset, const ExperimentConfig &config)
{
  if (preset == "superlens-qs")
  {
    return SuperlensSetup(config, false);
  }
  if (preset == "superlens-k")
  {
    return SuperlensSetup(config, true);
  }
  if (preset == "cloak-qs")
  {
    return CloakSetup(config, false);
  }
  if (preset == "cloak-k")
  {
    return CloakSetup(config, true);
  }
  if (preset == "alr-objects")
  {
    return AlrSetup(config);
  }
  if (preset == "defective-cloak")
  {
    return DefectiveSetup(config);
  }
  throw InvalidInput("unknown device preset: " + preset);
}

std::string ResolvePreset(const ExperimentConfig &config, const std::string &fallback,
                          const std::vector<std::string> &allowed)
{
  const std::string preset = config.preset.empty() ? fallback : config.preset;
  if (std::find(allowed.begin(), allowed.end(), preset) == allowed.end())
  {
    std::string list;
    for (const auto &a : allowed)
    {
      list += (list.empty() ? "" : ", ") + a;
    }
    throw InvalidInput("preset '" + preset + "' is not valid here (expected one of: " + list + ")");
  }
  return preset;
}

ComplexNodalField Solve(const std::shared_ptr<const Mesh> &mesh, const Medium &medium,
                        const DeviceSetup &s, double delta)
{
  return solve(assemble(mesh, medium, delta, s.k, &s.source, s.boundary));
}

struct Level
{
  std::shared_ptr<const Mesh> mesh;
  ComplexNodalField reference;  // u-hat
};

Level MakeLevel(const DeviceSetup &s, int n)
{
  Level level;
  level.mesh = std::make_shared<const Mesh>(s.make_mesh(n));
  level.reference = Solve(level.mesh, s.reference, s, 0.0);
  return level;
}

//
// Fine/coarse sweep of named error functionals. Floors are floor_factor times the fine-coarse
// discrepancy per delta.
//
using ErrorFunctional = std::function<std::vector<double>(const Level &, const ComplexNodalField &)>;

struct SweepData
{
  std::vector<double> deltas;
  std::vector<std::vector<double>> fine, coarse;  // [delta][functional]
  ComplexNodalField last_fine;
};

SweepData RunSweep(const DeviceSetup &s, const Level &fine, const Level &coarse,
                   const std::vector<double> &deltas, const ErrorFunctional &errors)
{
  SweepData data;
  data.deltas = deltas;
  for (double delta : deltas)
  {
    const auto t0 = std::chrono::steady_clock::now();
    ComplexNodalField uf = Solve(fine.mesh, s.device, s, delta);
    ComplexNodalField uc = Solve(coarse.mesh, s.device, s, delta);
    data.fine.push_back(errors(fine, uf));
    data.coarse.push_back(errors(coarse, uc));
    data.last_fine = std::move(uf);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Log(s.preset + " delta=" + format_double(delta) + " solved in " + format_double(std::round(secs * 10) / 10) + " s");
  }
  return data;
}

struct FitReport
{
  RateFit fit;
  std::vector<RatePoint> points;
  std::vector<double> floors;
};

FitReport FitColumn(const SweepData &data, std::size_t column, double floor_factor, double min_r2)
{
  FitReport r;
  for (std::size_t i = 0; i < data.deltas.size(); i++)
  {
    const double ef = data.fine[i][column], ec = data.coarse[i][column];
    r.points.push_back({data.deltas[i], ef});
    r.floors.push_back(floor_factor * std::abs(ef - ec));
  }
  try
  {
    r.fit = fit_rate(r.points, r.floors, min_r2);
  }
  catch (const InvalidInput &)
  {
    // Fewer than three points above the floor: report an uncertified fit.
    r.fit.min_r2 = min_r2;
    r.fit.included.assign(r.points.size(), 0);
    for (std::size_t i = 0; i < r.points.size(); i++)
    {
      r.fit.included[i] = r.points[i].error >= r.floors[i];
      r.fit.n_points += r.fit.included[i];
    }
    r.fit.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

void AppendErrors(std::vector<ErrorRecord> &records, const FitReport &r, const std::string &region)
{
  for (std::size_t i = 0; i < r.points.size(); i++)
  {
    records.push_back({r.points[i].delta, r.points[i].error, region, r.fit.included[i] != 0});
  }
}

std::string FitDetail(const FitReport &r)
{
  return "slope=" + format_double(r.fit.slope) + " r2=" + format_double(r.fit.r2) +
         " points=" + std::to_string(r.fit.n_points) + "/" + std::to_string(r.points.size());
}

void WriteFieldVtk(const ExperimentConfig &config, const std::string &name,
                   const ComplexNodalField &u)
{
  if (!config.write_vtk)
  {
    return;
  }
  auto os = OpenOutput(config.out, name);
  write_vtk(u, os);
}

// u_0 of the superlens: u-hat outside B_{r2}, u-hat o F on the lens, u-hat(s x) on B_{r1}.
ComplexNodalField SuperlensLimit(const Level &level, double r1, double r2, double r3)
{
  const Mesh &mesh = *level.mesh;
  PointLocator locator(mesh);
  const double tol = 1e-12;
  auto lens = reflect_field(level.reference, locator,
                            [r2](const Point2 &y) { return Point2(kelvin_apply(r2, y)); },
                            [=](const Point2 &y)
                            {
                              const double r = y.norm();
                              return r > r1 * (1 + tol) && r < r2 * (1 - tol);
                            });
  const double scale = r3 * r3 / (r2 * r2);
  auto core = reflect_field(level.reference, locator,
                            [scale](const Point2 &y) { return Point2(scale * y); },
                            [=](const Point2 &y) { return y.norm() <= r1 * (1 + tol); });
  ComplexNodalField u0 = level.reference;
  for (int i = 0; i < mesh.NumVertices(); i++)
  {
    if (lens.defined[i])
    {
      u0.values[i] = lens.field.values[i];
    }
    if (core.defined[i])
    {
      u0.values[i] = core.field.values[i];
    }
  }
  return u0;
}

double Slope(const std::vector<double> &x, const std::vector<double> &y)
{
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; i++)
  {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; i++)
  {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

//
// Random smooth test fields for the pushforward oracle.
//
struct RandomWaveField
{
  std::vector<Eigen::Vector2d> k;
  std::vector<double> amp, phase;

  ScalarTestField Field() const
  {
    auto self = *this;
    return {[self](const Eigen::Vector2d &x)
            {
              double v = 0.0;
              for (std::size_t i = 0; i < self.k.size(); i++)
              {
                v += self.amp[i] * std::sin(self.k[i].dot(x) + self.phase[i]);
              }
              return v;
            },
            [self](const Eigen::Vector2d &x)
            {
              Eigen::Vector2d g = Eigen::Vector2d::Zero();
              for (std::size_t i = 0; i < self.k.size(); i++)
              {
                g += self.amp[i] * std::cos(self.k[i].dot(x) + self.phase[i]) * self.k[i];
              }
              return g;
            }};
  }
};

RandomWaveField RandomField(std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  RandomWaveField f;
  for (int i = 0; i < 4; i++)
  {
    f.k.emplace_back(1.2 * U(rng), 1.2 * U(rng));
    f.amp.push_back(U(rng));
    f.phase.push_back(std::numbers::pi * U(rng));
  }
  return f;
}

//
// Maxwell helpers.
//

double Gaussian(const Vector3 &x, const Vector3 &c, double sigma)
{
  return std::exp(-(x - c).squaredNorm() / (2.0 * sigma * sigma));
}

EMMaterials MaxwellMaterials(const MaxwellConfig &m, bool dispersive)
{
  return EMMaterials::Uniform(m.eps_rel, m.mu_rel, dispersive ? ToPoles(m.electric) : PoleList{},
                              dispersive ? ToPoles(m.magnetic) : PoleList{});
}

}  // namespace

//
// Configuration.
//

std::vector<double> DeltaSweep::Values() const
{
  Validate();
  std::vector<double> out(count);
  for (int i = 0; i < count; i++)
  {
    const double e = std::log10(start) + (std::log10(stop) - std::log10(start)) * i / (count - 1);
    out[i] = std::pow(10.0, e);
  }
  out.front() = start;
  out.back() = stop;
  return out;
}

void DeltaSweep::Validate() const
{
  if (!(start > 0.0 && start < 1.0 && stop > 0.0 && stop < 1.0) || !(stop < start))
  {
    throw InvalidInput("delta sweep must satisfy 0 < stop < start < 1");
  }
  if (count < 4)
  {
    throw InvalidInput("delta sweep needs at least 4 points for rate fits");
  }
}

void ExperimentConfig::Validate() const
{
  delta.Validate();
  if (mesh_n < 16 || coarse_mesh_n < 16 || coarse_mesh_n >= mesh_n)
  {
    throw InvalidInput("need 16 <= coarse_mesh_n < mesh_n");
  }
  if (!(floor_factor > 0.0) || !(alpha > 0.0) || !(k > 0.0))
  {
    throw InvalidInput("floor_factor, alpha and k must be positive");
  }
  static const std::set<std::string> presets{"",         "superlens-qs", "superlens-k",
                                             "cloak-qs", "cloak-k",      "alr-objects",
                                             "defective-cloak"};
  if (!presets.count(preset))
  {
    throw InvalidInput("unknown device preset: " + preset);
  }
  if (maxwell.grid_n < 8 || maxwell.steps < 1 || !(maxwell.h > 0.0) || !(maxwell.cfl > 0.0) ||
      maxwell.cfl > 0.95)
  {
    throw InvalidInput("invalid Maxwell grid settings");
  }
  if (passivity.trials < 1 || passivity.samples < 2 || !(passivity.dt > 0.0))
  {
    throw InvalidInput("invalid passivity settings");
  }
}

nlohmann::ordered_json to_json(const ExperimentConfig &c)
{
  ojson j;
  j["preset"] = c.preset;
  j["delta"] = {{"start", c.delta.start}, {"stop", c.delta.stop}, {"count", c.delta.count}};
  j["k"] = c.k;
  j["mesh_n"] = c.mesh_n;
  j["coarse_mesh_n"] = c.coarse_mesh_n;
  j["floor_factor"] = c.floor_factor;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["write_vtk"] = c.write_vtk;
  j["superlens"] = {{"m", c.superlens.m},
                    {"r0", c.superlens.r0},
                    {"object_a", c.superlens.object_a},
                    {"object_sigma", c.superlens.object_sigma},
                    {"outer_radius", c.superlens.outer_radius},
                    {"source", ToJson(c.superlens.source)}};
  j["superlens_k"] = {{"outer_radius_factor", c.superlens_k.outer_radius_factor},
                      {"source", ToJson(c.superlens_k.source)}};
  j["cloak"] = {{"r1", c.cloak.r1},
                {"r2", c.cloak.r2},
                {"r3", c.cloak.r3},
                {"outer_radius", c.cloak.outer_radius},
                {"object_a", c.cloak.object_a},
                {"fade_start", c.cloak.fade_start},
                {"fade_end", c.cloak.fade_end}};
  j["alr"] = {{"r0", c.alr.r0},
              {"r1", c.alr.r1},
              {"r2", c.alr.r2},
              {"outer_radius", c.alr.outer_radius},
              {"object_a", c.alr.object_a},
              {"x1", c.alr.x1},
              {"x2", c.alr.x2}};
  j["defective"] = {{"r0", c.defective.r0},
                    {"r1", c.defective.r1},
                    {"r2", c.defective.r2},
                    {"outer_radius", c.defective.outer_radius},
                    {"object_a", c.defective.object_a},
                    {"x3", c.defective.x3},
                    {"visibility_factor", c.defective.visibility_factor}};
  const auto &m = c.maxwell;
  j["maxwell"] = {{"grid_n", m.grid_n},
                  {"h", m.h},
                  {"steps", m.steps},
                  {"cfl", m.cfl},
                  {"eps_rel", m.eps_rel},
                  {"mu_rel", m.mu_rel},
                  {"electric", PolesToJson(m.electric)},
                  {"magnetic", PolesToJson(m.magnetic)},
                  {"pulse_width", m.pulse_width},
                  {"source_frequency", m.source_frequency},
                  {"energy_tolerance", m.energy_tolerance},
                  {"cone_radius_cells", m.cone_radius_cells},
                  {"cone_pulse_sigma_cells", m.cone_pulse_sigma_cells},
                  {"cone_pulse_cutoff_sigmas", m.cone_pulse_cutoff_sigmas},
                  {"cone_margin_cells", m.cone_margin_cells},
                  {"cone_threshold", m.cone_threshold},
                  {"cone_grid", m.cone_grid},
                  {"write_vtk", m.write_vtk}};
  j["passivity"] = {{"trials", c.passivity.trials},
                    {"pole_sets", c.passivity.pole_sets},
                    {"samples", c.passivity.samples},
                    {"dt", c.passivity.dt},
                    {"tolerance", c.passivity.tolerance}};
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json &patch)
{
  const ExperimentConfig defaults;
  const json schema = json::parse(to_json(defaults).dump());
  CheckKeys(patch, schema, "");
  json j = schema;
  j.merge_patch(patch);
  ExperimentConfig c;
  try
  {
    j.at("preset").get_to(c.preset);
    j.at("delta").at("start").get_to(c.delta.start);
    j.at("delta").at("stop").get_to(c.delta.stop);
    j.at("delta").at("count").get_to(c.delta.count);
    j.at("k").get_to(c.k);
    j.at("mesh_n").get_to(c.mesh_n);
    j.at("coarse_mesh_n").get_to(c.coarse_mesh_n);
    j.at("floor_factor").get_to(c.floor_factor);
    j.at("alpha").get_to(c.alpha);
    j.at("seed").get_to(c.seed);
    c.out = j.at("out").get<std::string>();
    j.at("write_vtk").get_to(c.write_vtk);
    const auto &s = j.at("superlens");
    s.at("m").get_to(c.superlens.m);
    s.at("r0").get_to(c.superlens.r0);
    s.at("object_a").get_to(c.superlens.object_a);
    s.at("object_sigma").get_to(c.superlens.object_sigma);
    s.at("outer_radius").get_to(c.superlens.outer_radius);
    FromJson(s.at("source"), c.superlens.source);
    const auto &sk = j.at("superlens_k");
    sk.at("outer_radius_factor").get_to(c.superlens_k.outer_radius_factor);
    FromJson(sk.at("source"), c.superlens_k.source);
    const auto &cl = j.at("cloak");
    cl.at("r1").get_to(c.cloak.r1);
    cl.at("r2").get_to(c.cloak.r2);
    cl.at("r3").get_to(c.cloak.r3);
    cl.at("outer_radius").get_to(c.cloak.outer_radius);
    cl.at("object_a").get_to(c.cloak.object_a);
    cl.at("fade_start").get_to(c.cloak.fade_start);
    cl.at("fade_end").get_to(c.cloak.fade_end);
    const auto &a = j.at("alr");
    a.at("r0").get_to(c.alr.r0);
    a.at("r1").get_to(c.alr.r1);
    a.at("r2").get_to(c.alr.r2);
    a.at("outer_radius").get_to(c.alr.outer_radius);
    a.at("object_a").get_to(c.alr.object_a);
    a.at("x1").get_to(c.alr.x1);
    a.at("x2").get_to(c.alr.x2);
    const auto &d = j.at("defective");
    d.at("r0").get_to(c.defective.r0);
    d.at("r1").get_to(c.defective.r1);
    d.at("r2").get_to(c.defective.r2);
    d.at("outer_radius").get_to(c.defective.outer_radius);
    d.at("object_a").get_to(c.defective.object_a);
    d.at("x3").get_to(c.defective.x3);
    d.at("visibility_factor").get_to(c.defective.visibility_factor);
    const auto &m = j.at("maxwell");
    m.at("grid_n").get_to(c.maxwell.grid_n);
    m.at("h").get_to(c.maxwell.h);
    m.at("steps").get_to(c.maxwell.steps);
    m.at("cfl").get_to(c.maxwell.cfl);
    m.at("eps_rel").get_to(c.maxwell.eps_rel);
    m.at("mu_rel").get_to(c.maxwell.mu_rel);
    c.maxwell.electric = PolesFromJson(m.at("electric"));
    c.maxwell.magnetic = PolesFromJson(m.at("magnetic"));
    m.at("pulse_width").get_to(c.maxwell.pulse_width);
    m.at("source_frequency").get_to(c.maxwell.source_frequency);
    m.at("energy_tolerance").get_to(c.maxwell.energy_tolerance);
    m.at("cone_radius_cells").get_to(c.maxwell.cone_radius_cells);
    m.at("cone_pulse_sigma_cells").get_to(c.maxwell.cone_pulse_sigma_cells);
    m.at("cone_pulse_cutoff_sigmas").get_to(c.maxwell.cone_pulse_cutoff_sigmas);
    m.at("cone_margin_cells").get_to(c.maxwell.cone_margin_cells);
    m.at("cone_threshold").get_to(c.maxwell.cone_threshold);
    m.at("cone_grid").get_to(c.maxwell.cone_grid);
    m.at("write_vtk").get_to(c.maxwell.write_vtk);
    const auto &p = j.at("passivity");
    p.at("trials").get_to(c.passivity.trials);
    p.at("pole_sets").get_to(c.passivity.pole_sets);
    p.at("samples").get_to(c.passivity.samples);
    p.at("dt").get_to(c.passivity.dt);
    p.at("tolerance").get_to(c.passivity.tolerance);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
  std::ifstream is(path);
  if (!is)
  {
    throw InvalidInput("cannot open config file " + path.string());
  }
  json j;
  try
  {
    j = json::parse(is);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw InvalidInput("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

bool ExperimentOutcome::Pass() const
{
  return std::all_of(results.begin(), results.end(), [](const auto &r) { return r.pass; });
}

const std::vector<std::string> &subcommand_names()
{
  static const std::vector<std::string> names{
      "superlens-rate", "superlens-k",    "cloak-rate",     "alr-cloak", "defective-cloak",
      "stability-scan", "maxwell-energy", "maxwell-speed", "passivity", "selftest"};
  return names;
}

ExperimentOutcome run_experiment(const std::string &subcommand, const ExperimentConfig &config)
{
  config.Validate();
  static const std::map<std::string, ExperimentOutcome (*)(const ExperimentConfig &)> table{
      {"superlens-rate", run_superlens_rate}, {"superlens-k", run_superlens_k},
      {"cloak-rate", run_cloak_rate},         {"alr-cloak", run_alr_cloak},
      {"defective-cloak", run_defective_cloak}, {"stability-scan", run_stability_scan},
      {"maxwell-energy", run_maxwell_energy}, {"maxwell-speed", run_maxwell_speed},
      {"passivity", run_passivity},           {"selftest", run_selftest}};
  const auto it = table.find(subcommand);
  if (it == table.end())
  {
    throw InvalidInput("unknown subcommand: " + subcommand);
  }
  return it->second(config);
}

//
// Frequency-domain experiments.
//

ExperimentOutcome run_superlens_rate(const ExperimentConfig &config)
{
  const std::string preset = ResolvePreset(config, "superlens-qs", {"superlens-qs"});
  const DeviceSetup s = SetupForPreset(preset, config);
  std::vector<double> deltas = config.delta.Values();

  const Level fine = MakeLevel(s, config.mesh_n), coarse = MakeLevel(s, config.coarse_mesh_n);
  Log("superlens mesh: " + std::to_string(fine.mesh->NumTriangles()) + " triangles");
  const ComplexNodalField u0_fine = SuperlensLimit(fine, s.r1, s.r2, s.r3);
  const ComplexNodalField u0_coarse = SuperlensLimit(coarse, s.r1, s.r2, s.r3);
  const RegionPredicate exterior = region::outside(s.r3);

  std::vector<NormRecord> norms;
  ErrorFunctional errors = [&](const Level &level, const ComplexNodalField &u)
  {
    const ComplexNodalField &u0 = level.mesh == fine.mesh ? u0_fine : u0_coarse;
    return std::vector<double>{subdomain_norm(u - u0, region::everywhere(), NormKind::H1),
                               subdomain_norm(u - level.reference, exterior, NormKind::H1)};
  };
  const SweepData data = RunSweep(s, fine, coarse, deltas, errors);

  const FitReport whole = FitColumn(data, 0, config.floor_factor, 0.98);
  const FitReport ext = FitColumn(data, 1, config.floor_factor, 0.98);

  // Magnification semantics at delta = 1e-2 and 1e-3 (solved separately if not in the sweep).
  const double ref_ext = subdomain_norm(fine.reference, exterior, NormKind::H1);
  auto relative_at = [&](double delta)
  {
    const std::size_t i = FindDelta(data.deltas, delta);
    if (i < data.deltas.size())
    {
      return data.fine[i][1] / ref_ext;
    }
    const ComplexNodalField u = Solve(fine.mesh, s.device, s, delta);
    return subdomain_norm(u - fine.reference, exterior, NormKind::H1) / ref_ext;
  };
  const double d2 = relative_at(1e-2), d3 = relative_at(1e-3);

  for (std::size_t i = 0; i < data.deltas.size(); i++)
  {
    norms.push_back({data.deltas[i], NormKind::H1, "whole-vs-limit", data.fine[i][0]});
    norms.push_back({data.deltas[i], NormKind::H1, "exterior-vs-magnified", data.fine[i][1]});
    norms.push_back({data.deltas[i], NormKind::H1, "whole-vs-limit-coarse", data.coarse[i][0]});
    norms.push_back({data.deltas[i], NormKind::H1, "exterior-vs-magnified-coarse", data.coarse[i][1]});
  }
  {
    auto os = OpenOutput(config.out, "norms.csv");
    write_norm_csv(norms, os);
  }
  {
    std::vector<ErrorRecord> records;
    AppendErrors(records, whole, "whole");
    AppendErrors(records, ext, "exterior");
    auto os = OpenOutput(config.out, "errors.csv");
    write_error_csv(records, os);
  }
  {
    auto os = OpenOutput(config.out, "fit_whole.csv");
    write_fit_csv(whole.fit, os);
  }
  {
    auto os = OpenOutput(config.out, "fit_exterior.csv");
    write_fit_csv(ext.fit, os);
  }
  if (config.write_vtk)
  {
    auto os = OpenOutput(config.out, "mesh.vtk");
    write_vtk(*fine.mesh, os);
  }
  WriteFieldVtk(config, "u_delta_min.vtk", data.last_fine);
  WriteFieldVtk(config, "u_limit.vtk", u0_fine);

  std::vector<CriterionResult> results;
  results.push_back(Result("superlens-whole-rate", whole.fit.slope, 0.35, "in [0.35, 0.65], r2 >= 0.98",
                           whole.fit.Certified() && whole.fit.slope >= 0.35 && whole.fit.slope <= 0.65,
                           FitDetail(whole)));
  results.push_back(Result("superlens-exterior-rate", ext.fit.slope, 0.8, "in [0.8, 1.2], r2 >= 0.98",
                           ext.fit.Certified() && ext.fit.slope >= 0.8 && ext.fit.slope <= 1.2,
                           FitDetail(ext)));
  const double bound = std::min(10.0 * 0.1 * d2, 0.05);
  results.push_back(Result("superlens-magnification", d3, bound, "<=", d3 <= bound,
                           "relative exterior H1 distance: delta=1e-2 " + format_double(d2) +
                               ", delta=1e-3 " + format_double(d3)));
  return Finish("superlens-rate", config, std::move(results));
}

ExperimentOutcome run_superlens_k(const ExperimentConfig &config)
{
  const std::string preset = ResolvePreset(config, "superlens-k", {"superlens-k"});
  const DeviceSetup s = SetupForPreset(preset, config);
  const Level fine = MakeLevel(s, config.mesh_n), coarse = MakeLevel(s, config.coarse_mesh_n);
  const RegionPredicate exterior = region::outside(s.r3);
  const SweepData data = RunSweep(s, fine, coarse, config.delta.Values(),
                                  [&](const Level &level, const ComplexNodalField &u)
                                  {
                                    return std::vector<double>{subdomain_norm(
                                        u - level.reference, exterior, NormKind::H1)};
                                  });
  const FitReport ext = FitColumn(data, 0, config.floor_factor, 0.98);

  std::vector<NormRecord> norms;
  for (std::size_t i = 0; i < data.deltas.size(); i++)
  {
    norms.push_back({data.deltas[i], NormKind::H1, "exterior-vs-magnified", data.fine[i][0]});
    norms.push_back({data.deltas[i], NormKind::H1, "exterior-vs-magnified-coarse", data.coarse[i][0]});
  }
  {
    auto os = OpenOutput(config.out, "norms.csv");
    write_norm_csv(norms, os);
  }
  {
    std::vector<ErrorRecord> records;
    AppendErrors(records, ext, "exterior");
    auto os = OpenOutput(config.out, "errors.csv");
    write_error_csv(records, os);
  }
  {
    auto os = OpenOutput(config.out, "fit_exterior.csv");
    write_fit_csv(ext.fit, os);
  }
  WriteFieldVtk(config, "u_delta_min.vtk", data.last_fine);
  WriteFieldVtk(config, "u_reference.vtk", fine.reference);

  std::vector<CriterionResult> results;
  results.push_back(Result("superlens-k-exterior-rate", ext.fit.slope, 0.7, "in [0.7, 1.3]",
                           ext.fit.Certified() && ext.fit.slope >= 0.7 && ext.fit.slope <= 1.3,
                           FitDetail(ext) + " k=" + format_double(s.k)));
  return Finish("superlens-k", config, std::move(results));
}

ExperimentOutcome run_cloak_rate(const ExperimentConfig &config)
{
  const std::string preset = ResolvePreset(config, "cloak-qs", {"cloak-qs", "cloak-k"});
  const DeviceSetup s = SetupForPreset(preset, config);
  const Level fine = MakeLevel(s, config.mesh_n), coarse = MakeLevel(s, config.coarse_mesh_n);
  const RegionPredicate exterior = region::outside(s.r3);
  const RegionPredicate layer = region::annulus(s.r1, s.r2);
  std::vector<double> gradient_energy;
  const SweepData data = RunSweep(
      s, fine, coarse, config.delta.Values(),
      [&](const Level &level, const ComplexNodalField &u)
      {
        const double g = subdomain_norm(u, layer, NormKind::H1Semi);
        return std::vector<double>{subdomain_norm(u - level.reference, exterior, NormKind::H1),
                                   g * g};
      });
  const FitReport ext = FitColumn(data, 0, config.floor_factor, 0.95);

  bool decreasing = true;
  std::vector<double> grad;
  for (std::size_t i = 0; i < data.deltas.size(); i++)
  {
    grad.push_back(data.fine[i][1]);
    if (i > 0 && !(data.fine[i][0] < data.fine[i - 1][0]))
    {
      decreasing = false;
    }
  }
  const double blowup_slope = Slope(data.deltas, grad);

  // Singularity-removed field at the smallest delta (diagnostic output).
  {
    const ComplexNodalField &u = data.last_fine;
    PointLocator locator(*fine.mesh);
    const double inner = middle_annulus_inner_radius(s.r2, SingularityVariant::Cloak);
    const double tol = 1e-12;
    const RegionPredicate middle = [&](const Point2 &y)
    { return y.norm() >= inner * (1 - tol) && y.norm() <= s.r3 * (1 + tol); };
    const RegionPredicate inside = [&](const Point2 &y) { return y.norm() <= s.r3 * (1 + tol); };
    const double r2 = s.r2, scale = s.r2 * s.r2 / (s.r3 * s.r3);
    auto u1 = reflect_field(u, locator, [r2](const Point2 &y) { return Point2(kelvin_apply(r2, y)); },
                            middle);
    auto u2 = reflect_field(u, locator, [scale](const Point2 &y) { return Point2(scale * y); },
                            inside);
    const ComplexNodalField removed =
        remove_localized_singularity(u, u1, u2, s.r2, s.r3, SingularityVariant::Cloak);
    std::vector<NormRecord> norms;
    for (std::size_t i = 0; i < data.deltas.size(); i++)
    {
      norms.push_back({data.deltas[i], NormKind::H1, "exterior-vs-homogeneous", data.fine[i][0]});
      norms.push_back({data.deltas[i], NormKind::H1Semi, "layer-gradient-energy", data.fine[i][1]});
    }
    norms.push_back({data.deltas.back(), NormKind::H1, "singularity-removed-vs-homogeneous",
                     subdomain_norm(removed - fine.reference, region::everywhere(), NormKind::H1)});
    auto os = OpenOutput(config.out, "norms.csv");
    write_norm_csv(norms, os);
    WriteFieldVtk(config, "u_singularity_removed.vtk", removed);
  }
  {
    std::vector<ErrorRecord> records;
    AppendErrors(records, ext, "exterior");
    auto os = OpenOutput(config.out, "errors.csv");
    write_error_csv(records, os);
  }
  {
    auto os = OpenOutput(config.out, "fit_exterior.csv");
    write_fit_csv(ext.fit, os);
  }
  WriteFieldVtk(config, "u_delta_min.vtk", data.last_fine);

  std::vector<CriterionResult> results;
  results.push_back(Result("cloak-exterior-rate", ext.fit.slope, config.alpha, ">= alpha, r2 >= 0.95",
                           ext.fit.Certified() && ext.fit.slope >= config.alpha, FitDetail(ext)));
  results.push_back(Result("cloak-exterior-monotone", decreasing ? 1.0 : 0.0, 1.0, "==", decreasing,
                           "exterior error strictly decreasing across the sweep"));
  results.push_back(Result("cloak-blowup-indicator", blowup_slope, -0.5, ">=", blowup_slope >= -0.5,
                           "log-log slope of the layer gradient energy in delta"));
  return Finish("cloak-rate", config, std::move(results));
}

namespace
{

struct AlrRun
{
  SweepData data;
  FitReport ext;
  Level fine;
};

double AlrExteriorL2AtDelta(const ExperimentConfig &config, double delta)
{
  const DeviceSetup s = AlrSetup(config);
  auto mesh = std::make_shared<const Mesh>(s.make_mesh(config.mesh_n));
  const ComplexNodalField ref = Solve(mesh, s.reference, s, 0.0);
  const ComplexNodalField u = Solve(mesh, s.device, s, delta);
  return subdomain_norm(u - ref, region::outside(s.r3), NormKind::L2);
}

}  // namespace

ExperimentOutcome run_alr_cloak(const ExperimentConfig &config)
{
  const std::string preset = ResolvePreset(config, "alr-objects", {"alr-objects"});
  const DeviceSetup s = SetupForPreset(preset, config);
  const Level fine = MakeLevel(s, config.mesh_n), coarse = MakeLevel(s, config.coarse_mesh_n);
  const RegionPredicate exterior = region::outside(s.r3);
  const SweepData data = RunSweep(s, fine, coarse, config.delta.Values(),
                                  [&](const Level &level, const ComplexNodalField &u)
                                  {
                                    const ComplexNodalField d = u - level.reference;
                                    return std::vector<double>{
                                        subdomain_norm(d, exterior, NormKind::H1),
                                        subdomain_norm(d, exterior, NormKind::L2)};
                                  });
  const FitReport ext = FitColumn(data, 0, config.floor_factor, 0.95);
  std::vector<NormRecord> norms;
  for (std::size_t i = 0; i < data.deltas.size(); i++)
  {
    norms.push_back({data.deltas[i], NormKind::H1, "exterior-vs-homogeneous", data.fine[i][0]});
    norms.push_back({data.deltas[i], NormKind::L2, "exterior-vs-homogeneous", data.fine[i][1]});
  }
  {
    auto os = OpenOutput(config.out, "norms.csv");
    write_norm_csv(norms, os);
  }
  {
    std::vector<ErrorRecord> records;
    AppendErrors(records, ext, "exterior");
    auto os = OpenOutput(config.out, "errors.csv");
    write_error_csv(records, os);
  }
  {
    auto os = OpenOutput(config.out, "fit_exterior.csv");
    write_fit_csv(ext.fit, os);
  }
  if (config.write_vtk)
  {
    auto os = OpenOutput(config.out, "mesh.vtk");
    write_vtk(*fine.mesh, os);
  }
  WriteFieldVtk(config, "u_delta_min.vtk", data.last_fine);

  std::vector<CriterionResult> results;
  results.push_back(Result("alr-exterior-rate", ext.fit.slope, config.alpha, ">= alpha, r2 >= 0.95",
                           ext.fit.Certified() && ext.fit.slope >= config.alpha, FitDetail(ext)));
  return Finish("alr-cloak", config, std::move(results));
}

ExperimentOutcome run_defective_cloak(const ExperimentConfig &config)
{
  const std::string preset = ResolvePreset(config, "defective-cloak", {"defective-cloak"});
  const DeviceSetup s = SetupForPreset(preset, config);
  auto mesh = std::make_shared<const Mesh>(s.make_mesh(config.mesh_n));
  const ComplexNodalField visible = Solve(mesh, s.reference, s, 0.0);
  const ComplexNodalField homogeneous = Solve(mesh, homogeneous_medium(), s, 0.0);
  const RegionPredicate exterior = region::outside(s.r3);
  const std::vector<double> deltas = config.delta.Values();

  std::vector<NormRecord> norms;
  std::vector<double> to_visible, to_homogeneous;
  ComplexNodalField last;
  for (double delta : deltas)
  {
    last = Solve(mesh, s.device, s, delta);
    to_visible.push_back(subdomain_norm(last - visible, exterior, NormKind::L2));
    to_homogeneous.push_back(subdomain_norm(last - homogeneous, exterior, NormKind::L2));
    norms.push_back({delta, NormKind::L2, "exterior-vs-visible-object", to_visible.back()});
    norms.push_back({delta, NormKind::L2, "exterior-vs-homogeneous", to_homogeneous.back()});
    Log("defective-cloak delta=" + format_double(delta) + " done");
  }
  const double alr_distance = AlrExteriorL2AtDelta(config, deltas.back());
  norms.push_back({deltas.back(), NormKind::L2, "alr-exterior-vs-homogeneous", alr_distance});
  {
    auto os = OpenOutput(config.out, "norms.csv");
    write_norm_csv(norms, os);
  }
  {
    std::vector<ErrorRecord> records;
    for (std::size_t i = 0; i < deltas.size(); i++)
    {
      records.push_back({deltas[i], to_visible[i], "exterior-vs-visible-object", true});
      records.push_back({deltas[i], to_homogeneous[i], "exterior-vs-homogeneous", true});
    }
    auto os = OpenOutput(config.out, "errors.csv");
    write_error_csv(records, os);
  }
  WriteFieldVtk(config, "u_delta_min.vtk", last);

  const double ratio = to_homogeneous.back() / alr_distance;
  const double visible_slope = Slope(deltas, to_visible);
  const bool shrinking = visible_slope > 0.0 && to_visible.back() < to_visible.front();
  std::vector<CriterionResult> results;
  results.push_back(Result("defective-cloak-visible", ratio, config.defective.visibility_factor,
                           ">=", ratio >= config.defective.visibility_factor,
                           "exterior L2 distance to the homogeneous solution " +
                               format_double(to_homogeneous.back()) + " vs cloaked objects " +
                               format_double(alr_distance)));
  results.push_back(Result("defective-cloak-limit", visible_slope, 0.0, ">", shrinking,
                           "log-log slope of the distance to the visible-object solution; first " +
                               format_double(to_visible.front()) + ", last " +
                               format_double(to_visible.back())));
  return Finish("defective-cloak", config, std::move(results));
}

ExperimentOutcome run_stability_scan(const ExperimentConfig &config)
{
  const std::string preset =
      ResolvePreset(config, "superlens-qs",
                    {"superlens-qs", "superlens-k", "cloak-qs", "cloak-k", "alr-objects",
                     "defective-cloak"});
  const DeviceSetup s = SetupForPreset(preset, config);
  auto mesh = std::make_shared<const Mesh>(s.make_mesh(config.mesh_n));
  const std::vector<double> deltas = config.delta.Values();
  const auto points = stability_ratio(mesh, s.device, deltas, s.source, s.k, s.boundary);
  {
    auto os = OpenOutput(config.out, "stability.csv");
    os << "delta,ratio,skipped\n";
    for (const auto &p : points)
    {
      os << format_double(p.delta) << ',' << format_double(p.ratio) << ',' << (p.skipped ? 1 : 0)
         << '\n';
    }
  }
  if (points.front().skipped)
  {
    throw SolverError("source pairing vanishes at the first delta");
  }
  const double first = points.front().ratio;
  double worst = 0.0;
  for (const auto &p : points)
  {
    if (!p.skipped)
    {
      worst = std::max(worst, p.ratio / first);
    }
  }
  std::vector<CriterionResult> results;
  results.push_back(Result("stability-scaling", worst, 10.0, "<=", worst <= 10.0,
                           "max ratio relative to delta=" + format_double(deltas.front()) +
                               " on preset " + preset));
  return Finish("stability-scan", config, std::move(results));
}

//
// Time-domain experiments.
//

ExperimentOutcome run_maxwell_energy(const ExperimentConfig &config)
{
  const auto &m = config.maxwell;
  const YeeGrid grid{m.grid_n, m.grid_n, m.grid_n, m.h, GridBoundary::Periodic};
  const EMMaterials materials = MaxwellMaterials(m, true);
  const double dt = max_stable_dt(grid, materials, m.cfl);
  const double L = m.grid_n * m.h;
  const Vector3 center(0.5 * L, 0.5 * L, 0.5 * L);
  const double sigma = m.pulse_width * m.h;
  const EllipticityBounds bounds = material_bounds(grid, materials);
  const double C = 1.0 / std::sqrt(std::min(bounds.eps_min, bounds.mu_min));

  std::vector<CriterionResult> results;

  // Free evolution of a Gaussian pulse in the damped medium.
  {
    EMState state = fdtd_init(
        grid, materials,
        [&](const Vector3 &x) -> Vector3 { return Vector3(0.3, 0.0, 1.0) * Gaussian(x, center, sigma); },
        VectorField3{}, dt);
    auto os = OpenOutput(config.out, "energy_free.csv");
    write_energy_header(os);
    auto probe = OpenOutput(config.out, "probe_free.csv");
    write_probe_header(probe);
    const int pi = m.grid_n / 2 + m.grid_n / 8, pj = m.grid_n / 2, pk = m.grid_n / 2;
    const double e0 = energy(state);
    write_energy_row(os, 0.0, e0, e0);
    write_probe_row(probe, state, pi, pj, pk);
    double w_prev = 0.0, w_first = 0.0, worst = -std::numeric_limits<double>::infinity();
    double e_max_ratio = 0.0;
    for (int n = 0; n < m.steps; n++)
    {
      fdtd_step(state);
      const double w = state.discrete_energy;
      if (n == 0)
      {
        w_first = w;
      }
      else
      {
        worst = std::max(worst, (w - w_prev) / w_first);
      }
      w_prev = w;
      const double e = energy(state);
      e_max_ratio = std::max(e_max_ratio, e / e0);
      write_energy_row(os, state.Time(), w, w_first);
      write_probe_row(probe, state, pi, pj, pk);
    }
    results.push_back(Result("maxwell-energy-nonincreasing", worst, m.energy_tolerance, "<=",
                             worst <= m.energy_tolerance,
                             "max relative step increase of the discrete energy over " +
                                 std::to_string(m.steps) + " steps; dt=" + format_double(dt) +
                                 ", max <Mu,u>/<Mu0,u0> = " + format_double(e_max_ratio)));
    if (m.write_vtk)
    {
      auto vtk = OpenOutput(config.out, "fields_free.vtk");
      write_vtk(state, vtk);
    }
  }

  // Forced run from rest: <Mu,u>^{1/2} <= <Mu0,u0>^{1/2} + C sum ||f|| dt.
  {
    EMState state = fdtd_init(grid, materials, VectorField3{}, VectorField3{}, dt);
    CurrentSource src;
    src.component = Component::Ez;
    const double ramp = 10.0 / m.source_frequency, omega = m.source_frequency;
    src.waveform = [omega, ramp](double t)
    { return std::sin(omega * t) * (1.0 - std::exp(-(t * t) / (ramp * ramp))); };
    const int c0 = m.grid_n / 2;
    for (int i = -2; i <= 2; i++)
    {
      for (int j = -2; j <= 2; j++)
      {
        for (int k = -2; k <= 2; k++)
        {
          const double r2 = i * i + j * j + k * k;
          src.cells.push_back({c0 + i, c0 + j, c0 + k});
          src.weights.push_back(std::exp(-r2 / 2.0));
        }
      }
    }
    const std::vector<CurrentSource> sources{src};
    auto os = OpenOutput(config.out, "energy_forced.csv");
    write_energy_header(os);
    double accumulated = 0.0, worst = -std::numeric_limits<double>::infinity();
    const double root0 = std::sqrt(energy(state));
    write_energy_row(os, 0.0, energy(state), root0 * root0);
    for (int n = 0; n < m.steps; n++)
    {
      accumulated += source_norm(sources, (n + 0.5) * dt, grid.h) * dt;
      fdtd_step(state, sources);
      const double bound = root0 + C * accumulated;
      const double e = energy(state);
      worst = std::max(worst, (std::sqrt(e) - bound) / bound);
      write_energy_row(os, state.Time(), e, bound * bound);
    }
    results.push_back(Result("maxwell-energy-estimate", worst, m.energy_tolerance, "<=",
                             worst <= m.energy_tolerance,
                             "max over steps of sqrt(<Mu,u>) / (sqrt(<Mu0,u0>) + C int ||f||) - 1, C=" +
                                 format_double(C)));
  }
  return Finish("maxwell-energy", config, std::move(results));
}

ExperimentOutcome run_maxwell_speed(const ExperimentConfig &config)
{
  const auto &m = config.maxwell;
  const YeeGrid grid{m.cone_grid[0], m.cone_grid[1], m.cone_grid[2], m.h, GridBoundary::Periodic};
  const double R = m.cone_radius_cells * m.h;
  const double sigma = m.cone_pulse_sigma_cells * m.h;
  const double cutoff = m.cone_pulse_cutoff_sigmas * sigma;
  const Vector3 a(std::round(0.2 * grid.nx) * m.h, 0.5 * grid.ny * m.h, 0.5 * grid.nz * m.h);
  // Pulse support edge at distance R from a.
  const Vector3 pulse = a + Vector3(R + cutoff, 0.0, 0.0);
  if (pulse.x() + cutoff >= grid.nx * m.h || grid.nx * m.h - (R + cutoff) < R + cutoff)
  {
    throw InvalidInput("light-cone grid too short for the pulse and the ball");
  }
  auto E0 = [&](const Vector3 &x) -> Vector3
  {
    const double r = (x - pulse).norm();
    return r < cutoff ? Vector3(0.0, 0.0, Gaussian(x, pulse, sigma)) : Vector3::Zero();
  };

  std::vector<CriterionResult> results;
  for (const bool dispersive : {false, true})
  {
    const std::string name = dispersive ? "lorentz" : "vacuum";
    const EMMaterials materials = MaxwellMaterials(m, dispersive);
    const double dt = max_stable_dt(grid, materials, m.cfl);
    const LightCone cone = make_light_cone(grid, materials, a, R);
    EMState state = fdtd_init(grid, materials, E0, VectorField3{}, dt);
    std::vector<ConeSample> history{sample_light_cone(state, cone, 0.0)};
    auto probe = OpenOutput(config.out, "probe_" + name + ".csv");
    write_probe_header(probe);
    const int pi = static_cast<int>(std::lround(a.x() / m.h));
    const int pj = grid.ny / 2, pk = grid.nz / 2;
    write_probe_row(probe, state, pi, pj, pk);
    const double t_end = R / cone.speed;
    while (state.Time() + dt < t_end)
    {
      fdtd_step(state);
      history.push_back(sample_light_cone(state, cone, m.cone_margin_cells * m.h));
      write_probe_row(probe, state, pi, pj, pk);
    }
    const CertificateResult cert = light_cone_certificate(history, cone, m.cone_threshold, state);
    results.push_back(Result("maxwell-finite-speed-" + name, cert.max_violation, m.cone_threshold,
                             "<=", cert.certified && cert.hypotheses_hold,
                             cert.message + "; c=" + format_double(cone.speed) + ", steps=" +
                                 std::to_string(state.step)));
  }
  return Finish("maxwell-speed", config, std::move(results));
}

ExperimentOutcome run_passivity(const ExperimentConfig &config)
{
  const auto &p = config.passivity;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto random_poles = [&](int count)
  {
    PoleList poles;
    for (int i = 0; i < count; i++)
    {
      poles.push_back({0.1 + U(rng), 0.2 + 2.0 * U(rng), 0.01 + 0.5 * U(rng)});
    }
    return poles;
  };

  // Causality.
  bool causal = true;
  for (int s = 0; s < p.pole_sets; s++)
  {
    const PoleList poles = random_poles(1 + s % 3);
    for (int i = 1; i <= 200; i++)
    {
      const double t = -10.0 * i / 200.0;
      causal = causal && chi_time_scalar(poles, t) == 0.0 && lambda_time_scalar(poles, t) == 0.0;
    }
  }

  // Passivity on a frequency grid.
  std::vector<double> omegas;
  for (int i = 0; i <= 4000; i++)
  {
    omegas.push_back(-20.0 + 40.0 * i / 4000.0);
  }
  double passivity_min = std::numeric_limits<double>::infinity();
  bool passive = true;
  for (int s = 0; s < p.pole_sets; s++)
  {
    const auto report = passivity_check(random_poles(1 + s % 3), random_poles(1 + (s + 1) % 3), omegas);
    passive = passive && report.pass;
    passivity_min = std::min(passivity_min, report.min_value);
  }

  // Convolution positivity on random band-limited signals.
  auto os = OpenOutput(config.out, "convolution.csv");
  os << "trial,value,norm2,relative\n";
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < p.trials; trial++)
  {
    const PoleList poles = random_poles(1 + trial % 3);
    Eigen::MatrixXd v(p.samples, 3);
    for (int c = 0; c < 3; c++)
    {
      std::vector<double> freq(6), amp(6), phase(6);
      for (int q = 0; q < 6; q++)
      {
        freq[q] = 3.0 * U(rng);
        amp[q] = 2.0 * U(rng) - 1.0;
        phase[q] = 2.0 * std::numbers::pi * U(rng);
      }
      for (int n = 0; n < p.samples; n++)
      {
        double value = 0.0;
        for (int q = 0; q < 6; q++)
        {
          value += amp[q] * std::sin(freq[q] * n * p.dt + phase[q]);
        }
        v(n, c) = value;
      }
    }
    double norm2 = 0.0;
    for (int n = 0; n < p.samples; n++)
    {
      const double w = (n == 0 || n == p.samples - 1) ? 0.5 : 1.0;
      norm2 += w * p.dt * v.row(n).squaredNorm();
    }
    const double value = convolution_positivity_test(poles, v, p.dt);
    worst = std::min(worst, value / norm2);
    os << trial << ',' << format_double(value) << ',' << format_double(norm2) << ','
       << format_double(value / norm2) << '\n';
  }

  std::vector<CriterionResult> results;
  results.push_back(Result("causality", causal ? 0.0 : 1.0, 0.0, "==", causal,
                           "chi_time and lambda_time vanish identically for t < 0"));
  results.push_back(Result("passivity", passivity_min, -1e-12, ">=", passive,
                           "min Re lambda-hat over " + std::to_string(p.pole_sets) + " pole sets"));
  results.push_back(Result("convolution-positivity", worst, -p.tolerance, ">=", worst >= -p.tolerance,
                           "min over " + std::to_string(p.trials) +
                               " trials of int <lambda*v, v> / ||v||^2"));
  return Finish("passivity", config, std::move(results));
}

//
// Self test: cheap example checks plus the pushforward oracle and the Poisson baseline.
//

double pushforward_oracle_residual(std::uint64_t seed, int fields)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  const Diffeo2 F = kelvin_diffeomorphism<double, 2>(4.0);
  for (int trial = 0; trial < fields; trial++)
  {
    const RandomWaveField uf = RandomField(rng), pf = RandomField(rng);
    Eigen::Matrix2d B;
    B << 1.5 + 0.5 * U(rng), 0.3 * U(rng), 0.0, 1.5 + 0.5 * U(rng);
    B(1, 0) = B(0, 1);
    const double c1 = 0.2 * U(rng), c2 = 0.2 * U(rng);
    MatrixCoefficient2 a = [B, c1, c2](const Eigen::Vector2d &x) -> Eigen::Matrix2d
    {
      Eigen::Matrix2d m = B;
      m(0, 0) += c1 * std::sin(x.x());
      m(1, 1) += c2 * std::cos(x.y());
      return m;
    };
    const double s1 = 0.3 * U(rng);
    RealCoefficient2 sigma = [s1](const Eigen::Vector2d &x) { return 1.0 + s1 * std::sin(x.x() * x.y()); };
    worst = std::max(worst, weak_form_transport_check(a, sigma, uf.Field(), pf.Field(), F, 2.0, 4.0, 48));
  }
  return worst;
}

double cloak_identity_defect(std::uint64_t seed, int samples, double r1, double r2, double r3)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto F2 = kelvin_diffeomorphism<double, 2>(r2);
  const auto G2 = kelvin_diffeomorphism<double, 2>(r3);
  const auto F3 = kelvin_diffeomorphism<double, 3>(r2);
  const auto G3 = kelvin_diffeomorphism<double, 3>(r3);
  double worst = 0.0;
  for (int i = 0; i < samples; i++)
  {
    // Core of radius r1, away from the origin.
    const double r = r1 * (0.05 + 0.95 * U(rng));
    const double theta = 2.0 * std::numbers::pi * U(rng), phi = std::acos(2.0 * U(rng) - 1.0);
    {
      const Eigen::Vector2d x(r * std::cos(theta), r * std::sin(theta));
      const auto [core_a, core_sigma] = cloak_core_scaling(r2, r3, 2);
      const auto f = pushforward(Eigen::Matrix2d(core_a * kI2), core_sigma, F2.Sample(x));
      const auto g = pushforward(f.a, f.sigma, G2.Sample(F2.map(x)));
      worst = std::max({worst, (g.a - kI2).norm(), std::abs(g.sigma - 1.0)});
    }
    {
      const Eigen::Vector3d x(r * std::sin(phi) * std::cos(theta), r * std::sin(phi) * std::sin(theta),
                              r * std::cos(phi));
      const auto [core_a, core_sigma] = cloak_core_scaling(r2, r3, 3);
      const Eigen::Matrix3d I3 = Eigen::Matrix3d::Identity();
      const auto f = pushforward(Eigen::Matrix3d(core_a * I3), core_sigma, F3.Sample(x));
      const auto g = pushforward(f.a, f.sigma, G3.Sample(F3.map(x)));
      worst = std::max({worst, (g.a - I3).norm(), std::abs(g.sigma - 1.0)});
    }
  }
  return worst;
}

PoissonStudy poisson_convergence(const std::vector<int> &angular_counts)
{
  PoissonStudy study;
  Medium medium = homogeneous_medium();
  SourceTerm f{constant_scalar(1.0), region::everywhere(), 0.0};
  const ScalarField exact = [](const Point2 &x) { return Complex((x.squaredNorm() - 1.0) / 4.0); };
  for (int n : angular_counts)
  {
    auto mesh = std::make_shared<const Mesh>(build_annular_mesh(1.0, {}, n));
    const ComplexNodalField u = solve(assemble(mesh, medium, 0.0, 0.0, &f, BoundaryKind::Dirichlet));
    const ComplexNodalField ue = ComplexNodalField::Interpolate(mesh, exact);
    study.h.push_back(2.0 * std::numbers::pi / n);  // boundary spacing; mesh->h includes the centre fan
    study.l2_error.push_back(subdomain_norm(u - ue, region::everywhere(), NormKind::L2));
  }
  study.slope = Slope(study.h, study.l2_error);
  return study;
}

ExperimentOutcome run_selftest(const ExperimentConfig &config)
{
  std::vector<CriterionResult> results;
  auto check = [&](const std::string &name, double measured, double threshold, bool pass)
  { results.push_back(Result("example-" + name, measured, threshold, "<=", pass)); };

  // Radii and media.
  {
    const DeviceRadii r = DeviceRadii::Superlens(4.0, 1.0);
    const double err = std::abs(r.r1 - 2) + std::abs(r.r2 - 4) + std::abs(r.r3 - 8);
    check("superlens-radii", err, 1e-14, err <= 1e-14);
    const auto [a3, s3] = cloak_core_scaling(4.0, 8.0, 3);
    const double core = std::abs(a3 - 4.0) + std::abs(s3 - 64.0);
    check("cloak-core-3d", core, 1e-12, core <= 1e-12);
  }
  // Lorentz kernels.
  {
    const PoleList pole{{1.0, 2.0, 0.5}};
    const double at_zero = std::abs(chi_freq_scalar(pole, 0.0) - 0.25);
    check("chi-freq-static", at_zero, 1e-15, at_zero <= 1e-15);
    const double lam = std::abs(lambda_freq_scalar(pole, 2.0).real() - 1.0);
    check("lambda-freq-resonance", lam, 1e-14, lam <= 1e-14);
    const double neg = std::abs(chi_time_scalar(pole, -1.0)) + std::abs(chi_time_scalar(pole, 0.0));
    check("chi-time-causal", neg, 0.0, neg == 0.0);
  }
  // Yee grid.
  {
    const YeeGrid grid{64, 64, 64, 1.0, GridBoundary::Periodic};
    const double dt = max_stable_dt(grid, EMMaterials::Vacuum());
    const double err = std::abs(dt - 0.95 / std::sqrt(3.0));
    check("cfl-bound", err, 1e-14, err <= 1e-14);
    const YeeGrid small{8, 8, 8, 1.0, GridBoundary::Periodic};
    EMState zero = fdtd_init(small, EMMaterials::Vacuum(), VectorField3{}, VectorField3{}, 0.5);
    fdtd_step(zero);
    check("zero-state-energy", energy(zero), 0.0, energy(zero) == 0.0);
    EMState constant = fdtd_init(small, EMMaterials::Uniform(2.0, 1.0, {}, {}),
                                 [](const Vector3 &) { return Vector3(1.0, -2.0, 0.5); },
                                 VectorField3{}, 0.3);
    const double expected = 2.0 * 5.25 * 512.0;
    const double cerr = std::abs(energy(constant) - expected) / expected;
    check("constant-field-energy", cerr, 1e-14, cerr <= 1e-14);
  }
  // Convolution pairing.
  {
    const double z = convolution_positivity_test({{1.0, 1.0, 0.1}}, Eigen::MatrixXd::Zero(100, 3), 0.1);
    check("convolution-zero", std::abs(z), 0.0, z == 0.0);
  }

  // Pushforward oracle and composite identity.
  const double oracle = pushforward_oracle_residual(config.seed, 20);
  results.push_back(Result("pushforward-oracle", oracle, 1e-8, "<=", oracle <= 1e-8,
                           "max weak-form residual over 20 random smooth fields"));
  const double identity = cloak_identity_defect(config.seed + 1, 1000, 0.5, 2.0, 8.0);
  results.push_back(Result("cloak-composite-identity", identity, 1e-12, "<=", identity <= 1e-12,
                           "max |G_* F_* A - I| over 1000 points (d = 2 and 3)"));

  const PoissonStudy poisson = poisson_convergence({16, 32, 64, 128});
  {
    auto os = OpenOutput(config.out, "poisson.csv");
    os << "h,l2_error\n";
    for (std::size_t i = 0; i < poisson.h.size(); i++)
    {
      os << format_double(poisson.h[i]) << ',' << format_double(poisson.l2_error[i]) << '\n';
    }
  }
  results.push_back(Result("poisson-l2-rate", poisson.slope, 2.0, "in [1.8, 2.2]",
                           std::abs(poisson.slope - 2.0) <= 0.2, "u = (|x|^2 - 1)/4 on the unit disk"));
  return Finish("selftest", config, std::move(results));
}

}  // namespace nimlab
