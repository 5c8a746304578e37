// SPDX-License-Identifier: Apache-2.0

#include "nimlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include "nimlab/errors.hpp"
#include "nimlab/report.hpp"

namespace nimlab
{

bool PartialField::Covers(const RegionPredicate &vertex_region) const
{
  const Mesh &mesh = *field.mesh;
  for (int i = 0; i < mesh.NumVertices(); i++)
  {
    if (vertex_region(mesh.vertices[i]) && !defined[i])
    {
      return false;
    }
  }
  return true;
}

PartialField reflect_field(const ComplexNodalField &u, const PointLocator &locator,
                           const PointMap &preimage, const RegionPredicate &target_region)
{
  const Mesh &mesh = *u.mesh;
  if (&locator.GetMesh() != &mesh)
  {
    throw InvalidInput("point locator was built for a different mesh");
  }
  PartialField out{ComplexNodalField::Zero(u.mesh), std::vector<char>(mesh.NumVertices(), 0)};
  for (int i = 0; i < mesh.NumVertices(); i++)
  {
    const Point2 &y = mesh.vertices[i];
    if (!target_region(y))
    {
      continue;
    }
    const Point2 x = preimage(y);
    const auto hit = locator.Locate(x);
    if (!hit)
    {
      throw InvalidInput("preimage lies outside the meshed source region");
    }
    const auto &tri = mesh.triangles[hit->triangle];
    out.field.values[i] = hit->barycentric[0] * u.values[tri[0]] +
                          hit->barycentric[1] * u.values[tri[1]] +
                          hit->barycentric[2] * u.values[tri[2]];
    out.defined[i] = 1;
  }
  return out;
}

PartialField reflect_field(const ComplexNodalField &u, const PointMap &preimage,
                           const RegionPredicate &target_region)
{
  const PointLocator locator(*u.mesh);
  return reflect_field(u, locator, preimage, target_region);
}

PartialField reflect_field(const ComplexNodalField &u, const KelvinMap<double> &map,
                           const RegionPredicate &target_region)
{
  const double rho = map.pivot_radius;
  return reflect_field(u, [rho](const Point2 &y) -> Point2 { return kelvin_apply(rho, y); },
                       target_region);
}

double middle_annulus_inner_radius(double r2, SingularityVariant variant)
{
  return variant == SingularityVariant::Cloak ? 2.0 * r2 : r2;
}

ComplexNodalField remove_localized_singularity(const ComplexNodalField &u_delta,
                                               const PartialField &u1, const PartialField &u2,
                                               double r2, double r3, SingularityVariant variant)
{
  if (u1.field.mesh != u_delta.mesh || u2.field.mesh != u_delta.mesh)
  {
    throw InvalidInput("region mismatch: fields live on different meshes");
  }
  const double inner = middle_annulus_inner_radius(r2, variant);
  if (!(inner < r3))
  {
    throw InvalidInput("region mismatch: empty middle annulus");
  }
  const Mesh &mesh = *u_delta.mesh;
  const double tol = 1e-12;
  ComplexNodalField out = u_delta;
  for (int i = 0; i < mesh.NumVertices(); i++)
  {
    const double r = mesh.vertices[i].norm();
    if (r >= r3 * (1.0 - tol))
    {
      continue;
    }
    if (r >= inner * (1.0 - tol))
    {
      if (!u1.defined[i] || !u2.defined[i])
      {
        throw InvalidInput("region mismatch: u1 and u2 must be defined on the middle annulus");
      }
      out.values[i] = u_delta.values[i] - (u1.field.values[i] - u2.field.values[i]);
    }
    else
    {
      if (!u2.defined[i])
      {
        throw InvalidInput("region mismatch: u2 must be defined inside the middle annulus");
      }
      out.values[i] = u2.field.values[i];
    }
  }
  return out;
}

RateFit fit_rate(const std::vector<RatePoint> &points, const std::vector<double> &floors,
                 double min_r2)
{
  if (floors.size() != points.size())
  {
    throw InvalidInput("one floor per point expected");
  }
  RateFit fit;
  fit.min_r2 = min_r2;
  fit.included.assign(points.size(), 0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int n = 0;
  for (std::size_t i = 0; i < points.size(); i++)
  {
    const auto &p = points[i];
    if (!(p.delta > 0.0) || !(p.error > 0.0) || p.error < floors[i])
    {
      continue;
    }
    fit.included[i] = 1;
    const double x = std::log(p.delta), y = std::log(p.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    n++;
  }
  fit.n_points = n;
  if (n < 3)
  {
    throw InvalidInput("rate fit needs at least 3 points above the floor");
  }
  const double mx = sx / n, my = sy / n;
  const double vxx = sxx / n - mx * mx, vxy = sxy / n - mx * my, vyy = syy / n - my * my;
  if (!(vxx > 0.0))
  {
    throw InvalidInput("rate fit needs distinct delta values");
  }
  fit.slope = vxy / vxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = vyy > 0.0 ? std::clamp(vxy * vxy / (vxx * vyy), 0.0, 1.0) : 1.0;
  return fit;
}

RateFit fit_rate(const std::vector<RatePoint> &points, double floor, double min_r2)
{
  return fit_rate(points, std::vector<double>(points.size(), floor), min_r2);
}

BlowupIndicator blowup_indicator(const ComplexNodalField &u_delta, double delta,
                                 const RegionPredicate &lens_region)
{
  const double g = subdomain_norm(u_delta, lens_region, NormKind::H1Semi);
  return {g * g, delta * g * g};
}

void write_error_csv(const std::vector<ErrorRecord> &records, std::ostream &os)
{
  os << "delta,error,region,included\n";
  for (const auto &r : records)
  {
    os << format_double(r.delta) << ',' << format_double(r.error) << ',' << r.region << ','
       << (r.included ? 1 : 0) << '\n';
  }
}

void write_fit_csv(const RateFit &fit, std::ostream &os)
{
  os << "slope,intercept,r2,n_points\n";
  os << format_double(fit.slope) << ',' << format_double(fit.intercept) << ','
     << format_double(fit.r2) << ',' << fit.n_points << '\n';
}

}  // namespace nimlab
