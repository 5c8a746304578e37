// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_DIAGNOSTICS_HPP
#define NIMLAB_DIAGNOSTICS_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>
#include "nimlab/fem.hpp"
#include "nimlab/transforms.hpp"

namespace nimlab
{

// Nodal field defined only on a subset of the vertices.
struct PartialField
{
  ComplexNodalField field;
  std::vector<char> defined;

  bool Covers(const RegionPredicate &vertex_region) const;
};

using PointMap = std::function<Point2(const Point2 &)>;

// target(y) = u(preimage(y)) for the vertices y with target_region(y); u is evaluated by P1
// interpolation on its own mesh.
PartialField reflect_field(const ComplexNodalField &u, const PointLocator &locator,
                           const PointMap &preimage, const RegionPredicate &target_region);
PartialField reflect_field(const ComplexNodalField &u, const PointMap &preimage,
                           const RegionPredicate &target_region);
// Kelvin reflection: the preimage of y is F(y).
PartialField reflect_field(const ComplexNodalField &u, const KelvinMap<double> &map,
                           const RegionPredicate &target_region);

enum class SingularityVariant
{
  Lens,   // middle annulus B_{r3} \ B_{r2}
  Cloak,  // middle annulus B_{r3} \ B_{2 r2}
  Alr     // annulus fallback B_{r3} \ B_{r2}
};

// u_delta outside B_{r3}; u_delta - (u1 - u2) on the middle annulus; u2 inside it.
ComplexNodalField remove_localized_singularity(const ComplexNodalField &u_delta,
                                               const PartialField &u1, const PartialField &u2,
                                               double r2, double r3, SingularityVariant variant);

double middle_annulus_inner_radius(double r2, SingularityVariant variant);

struct RatePoint
{
  double delta;
  double error;
};

struct RateFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<char> included;
  int n_points = 0;
  double min_r2 = 0.98;

  // Slopes are only certified when the fit explains the data.
  bool Certified() const { return n_points >= 3 && r2 >= min_r2; }
};

// Least squares on (log delta, log error) over the points with error >= floor.
RateFit fit_rate(const std::vector<RatePoint> &points, double floor, double min_r2 = 0.98);
// Per-point floors.
RateFit fit_rate(const std::vector<RatePoint> &points, const std::vector<double> &floors,
                 double min_r2 = 0.98);

struct BlowupIndicator
{
  double gradient_energy;  // ||grad u||^2 over the lens
  double power;            // delta * gradient_energy
};

BlowupIndicator blowup_indicator(const ComplexNodalField &u_delta, double delta,
                                 const RegionPredicate &lens_region);

struct ErrorRecord
{
  double delta;
  double error;
  std::string region;
  bool included;
};

void write_error_csv(const std::vector<ErrorRecord> &records, std::ostream &os);
void write_fit_csv(const RateFit &fit, std::ostream &os);

}  // namespace nimlab

#endif  // NIMLAB_DIAGNOSTICS_HPP
