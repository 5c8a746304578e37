// SPDX-License-Identifier: Apache-2.0

#include "nimlab/media.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include "nimlab/errors.hpp"
#include "nimlab/transforms.hpp"

namespace nimlab
{

namespace
{

const Eigen::Matrix2d kIdentity = Eigen::Matrix2d::Identity();

bool RelativelyEqual(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

Region Background()
{
  return {"background", region::everywhere(), constant_matrix(kIdentity), constant_scalar(1.0),
          Sign::Positive, 2, false};
}

// (F^{-1})_* of (a, sigma) for the Kelvin map F through the circle of radius rho, evaluated at
// y from x = F(y).
std::pair<MatrixField, ScalarField> KelvinPushed(const MatrixField &a, const ScalarField &sigma,
                                                 double rho)
{
  const auto F = kelvin_diffeomorphism<double, 2>(rho);
  MatrixField pa = [a, F](const Point2 &y) -> Eigen::Matrix2d
  {
    const Point2 x = F.map(y);
    return pushforward(a(x), 1.0, F.Sample(x)).a;
  };
  ScalarField ps = [sigma, F](const Point2 &y) -> Complex
  {
    const Point2 x = F.map(y);
    return pushforward(kIdentity, sigma(x), F.Sample(x)).sigma;
  };
  return {pa, ps};
}

void CheckObject(const MatrixField &a, const RegionPredicate &where, double extent)
{
  const EllipticityReport report = sample_ellipticity(a, where, extent);
  if (!(report.min_eigenvalue > 0.0))
  {
    throw InvalidInput("object coefficient is not uniformly elliptic");
  }
}

void CheckSigma(const ScalarField &sigma, const RegionPredicate &where, double extent)
{
  const int n = 41;
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      const Point2 x(-extent + 2.0 * extent * i / (n - 1), -extent + 2.0 * extent * j / (n - 1));
      if (!where(x))
      {
        continue;
      }
      const Complex s = sigma(x);
      if (!(s.real() > 0.0) || s.imag() < 0.0)
      {
        throw InvalidInput("object sigma must satisfy Re > 0 and Im >= 0");
      }
    }
  }
}

void CheckLensRadii(double r1, double r2, double r3)
{
  if (!(0.0 < r1 && r1 < r2 && r2 < r3))
  {
    throw InvalidInput("radii must satisfy 0 < r1 < r2 < r3");
  }
  if (!RelativelyEqual(r3, r2 * r2 / r1, 1e-12))
  {
    throw InvalidInput("radii must satisfy r3 = r2^2 / r1");
  }
}

Medium BuildCloak(const MatrixField &cloaked_a, const ScalarField &cloaked_sigma, double r1,
                  double r2, double r3, int dimension)
{
  CheckLensRadii(r1, r2, r3);
  if (dimension != 2 && dimension != 3)
  {
    throw InvalidInput("dimension must be 2 or 3");
  }
  if (!(2.0 * r2 < r3))
  {
    throw InvalidInput("cloaked region B_{2 r2} must lie inside B_{r3}");
  }
  const int n_r = 24, n_theta = 64;
  for (int i = 0; i <= n_r; i++)
  {
    const double r = 2.0 * r2 + (r3 - 2.0 * r2) * i / n_r;
    for (int j = 0; j < n_theta; j++)
    {
      const double theta = 2.0 * std::numbers::pi * j / n_theta;
      if ((cloaked_a(Point2(r * std::cos(theta), r * std::sin(theta))) - kIdentity).norm() > 1e-12)
      {
        throw InvalidInput("cloaked coefficient must equal I outside B_{2 r2}");
      }
    }
  }
  CheckObject(cloaked_a, region::annulus(r2, r3), r3);

  const auto [core_a, core_sigma] = cloak_core_scaling(r2, r3, dimension);
  const auto [lens_a, lens_sigma] = KelvinPushed(cloaked_a, cloaked_sigma, r2);
  Medium medium;
  medium.dimension = dimension;
  medium.regions.push_back({"cloaked-annulus", region::annulus(r2, r3), cloaked_a, cloaked_sigma,
                            Sign::Positive, 4, false});
  medium.regions.push_back(
      {"complementary-layer", region::annulus(r1, r2), lens_a, lens_sigma, Sign::Lens, 4, false});
  medium.regions.push_back({"core", region::inside(r1), constant_matrix(core_a * kIdentity),
                            constant_scalar(core_sigma), Sign::Positive, 2, false});
  medium.regions.push_back(Background());
  return medium;
}

}  // namespace

DeviceRadii DeviceRadii::Superlens(double m, double r0, int dimension)
{
  if (!(m > 1.0) || !(r0 > 0.0))
  {
    throw InvalidInput("superlens needs m > 1 and r0 > 0");
  }
  DeviceRadii radii;
  radii.r0 = r0;
  radii.r1 = std::sqrt(m) * r0;
  radii.r2 = m * r0;
  radii.r3 = radii.r2 * radii.r2 / radii.r1;
  radii.m = m;
  radii.dimension = dimension;
  radii.Validate();
  return radii;
}

DeviceRadii DeviceRadii::SuperlensAlternate(double m, double r0, double r1, int dimension)
{
  if (!(m > 1.0) || !(r0 > 0.0))
  {
    throw InvalidInput("superlens needs m > 1 and r0 > 0");
  }
  if (r1 < std::pow(m, 0.25) * r0)
  {
    throw InvalidInput("alternate superlens needs r1 >= m^(1/4) r0");
  }
  DeviceRadii radii;
  radii.r0 = r0;
  radii.r1 = r1;
  radii.r2 = std::sqrt(m) * r1;
  radii.r3 = radii.r2 * radii.r2 / radii.r1;
  radii.m = m;
  radii.dimension = dimension;
  radii.Validate();
  return radii;
}

DeviceRadii DeviceRadii::FromLens(double r0, double r1, double r2, int dimension)
{
  DeviceRadii radii;
  radii.r0 = r0;
  radii.r1 = r1;
  radii.r2 = r2;
  radii.r3 = r2 * r2 / r1;
  radii.m = radii.r3 * radii.r3 / (r2 * r2);
  radii.dimension = dimension;
  radii.Validate();
  return radii;
}

void DeviceRadii::Validate() const
{
  if (!(0.0 < r0 && r0 < r1 && r1 < r2 && r2 < r3))
  {
    throw InvalidInput("radii must satisfy 0 < r0 < r1 < r2 < r3");
  }
  if (!RelativelyEqual(r3, r2 * r2 / r1, 1e-12))
  {
    throw InvalidInput("radii must satisfy r3 = r2^2 / r1");
  }
  if (dimension != 2 && dimension != 3)
  {
    throw InvalidInput("dimension must be 2 or 3");
  }
}

int Medium::Locate(const Point2 &x) const
{
  for (std::size_t i = 0; i < regions.size(); i++)
  {
    if (regions[i].contains(x))
    {
      return static_cast<int>(i);
    }
  }
  return -1;
}

const Region &Medium::At(const Point2 &x) const
{
  const int i = Locate(x);
  if (i < 0)
  {
    throw InvalidInput("medium does not cover the point");
  }
  return regions[i];
}

bool Medium::HasLens() const
{
  for (const auto &r : regions)
  {
    if (r.sign == Sign::Lens)
    {
      return true;
    }
  }
  return false;
}

Complex Medium::SignFactor(Sign sign, double delta)
{
  return sign == Sign::Lens ? Complex(-1.0, -delta) : Complex(1.0, 0.0);
}

Eigen::Matrix2cd Medium::EffectiveA(const Point2 &x, double delta) const
{
  const Region &r = At(x);
  return SignFactor(r.sign, delta) * r.a(x).cast<Complex>();
}

Complex Medium::EffectiveSigma(const Point2 &x, double delta) const
{
  const Region &r = At(x);
  return SignFactor(r.sign, delta) * r.sigma(x);
}

SourceTerm angular_bump_source(double radius, double radial_half_width, double angular_half_width,
                               double amplitude)
{
  if (!(radial_half_width > 0.0 && radial_half_width < radius) || !(angular_half_width > 0.0) ||
      angular_half_width > std::numbers::pi)
  {
    throw InvalidInput("invalid bump source geometry");
  }
  auto bump = [](double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; };
  SourceTerm f;
  f.value = [=](const Point2 &x) -> Complex
  {
    const double s = (x.norm() - radius) / radial_half_width;
    const double q = std::atan2(x.y(), x.x()) / angular_half_width;
    return amplitude * bump(s) * bump(q);
  };
  f.support = [=](const Point2 &x)
  {
    return std::abs(x.norm() - radius) < radial_half_width &&
           std::abs(std::atan2(x.y(), x.x())) < angular_half_width;
  };
  f.support_min_radius = radius - radial_half_width;
  return f;
}

MatrixField constant_matrix(const Eigen::Matrix2d &a)
{
  return [a](const Point2 &) { return a; };
}

ScalarField constant_scalar(Complex s)
{
  return [s](const Point2 &) { return s; };
}

MatrixField smooth_radial_step(double inner_value, double outer_value, double fade_start,
                               double fade_end)
{
  if (!(fade_end > fade_start))
  {
    throw InvalidInput("smooth_radial_step needs fade_start < fade_end");
  }
  return [=](const Point2 &x) -> Eigen::Matrix2d
  {
    const double t = std::clamp((x.norm() - fade_start) / (fade_end - fade_start), 0.0, 1.0);
    const double step = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    return (inner_value + (outer_value - inner_value) * step) * kIdentity;
  };
}

EllipticityReport sample_ellipticity(const MatrixField &a, const RegionPredicate &where,
                                     double extent, int samples_per_axis)
{
  EllipticityReport report{std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < samples_per_axis; i++)
  {
    for (int j = 0; j < samples_per_axis; j++)
    {
      const Point2 x(-extent + 2.0 * extent * i / (samples_per_axis - 1),
                     -extent + 2.0 * extent * j / (samples_per_axis - 1));
      if (!where(x))
      {
        continue;
      }
      const Eigen::Matrix2d ax = a(x);
      if ((ax - ax.transpose()).norm() > 1e-12 * (1.0 + ax.norm()))
      {
        throw InvalidInput("coefficient is not symmetric");
      }
      const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(ax).eigenvalues();
      report.min_eigenvalue = std::min(report.min_eigenvalue, ev.minCoeff());
      report.max_eigenvalue = std::max(report.max_eigenvalue, ev.maxCoeff());
    }
  }
  return report;
}

EllipticityReport sample_ellipticity(const Medium &medium, double extent, int samples_per_axis)
{
  EllipticityReport report{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t k = 0; k < medium.regions.size(); k++)
  {
    RegionPredicate claims = [&medium, k](const Point2 &x)
    { return medium.Locate(x) == static_cast<int>(k); };
    const auto r = sample_ellipticity(medium.regions[k].a, claims, extent, samples_per_axis);
    report.min_eigenvalue = std::min(report.min_eigenvalue, r.min_eigenvalue);
    report.max_eigenvalue = std::max(report.max_eigenvalue, r.max_eigenvalue);
  }
  return report;
}

std::pair<double, double> cloak_core_scaling(double r2, double r3, int dimension)
{
  const double q = r3 * r3 / (r2 * r2);
  return {std::pow(q, dimension - 2), std::pow(q, dimension)};
}

MediumPair superlens_quasistatic(const MatrixField &object_a, double m, double r0)
{
  const DeviceRadii radii = DeviceRadii::Superlens(m, r0);
  CheckObject(object_a, region::inside(r0), r0);

  MediumPair out;
  out.device.regions.push_back(
      {"object", region::inside(r0), object_a, constant_scalar(1.0), Sign::Positive, 4, false});
  out.device.regions.push_back({"lens", region::annulus(radii.r1, radii.r2),
                                constant_matrix(kIdentity), constant_scalar(1.0), Sign::Lens, 2,
                                false});
  out.device.regions.push_back(Background());

  MatrixField magnified = [object_a, m](const Point2 &x) { return object_a(x / m); };
  out.reference.regions.push_back({"magnified-object", region::inside(radii.r2), magnified,
                                   constant_scalar(1.0), Sign::Positive, 4, false});
  out.reference.regions.push_back(Background());
  return out;
}

MediumPair superlens_finite_freq(const MatrixField &object_a, const ScalarField &object_sigma,
                                 double m, double r0, int dimension)
{
  const DeviceRadii radii = DeviceRadii::Superlens(m, r0, dimension);
  CheckObject(object_a, region::inside(r0), r0);
  CheckSigma(object_sigma, region::inside(r0), r0);

  const double d = dimension;
  const auto [lens_a, lens_sigma] =
      KelvinPushed(constant_matrix(kIdentity), constant_scalar(1.0), radii.r2);
  MediumPair out;
  out.device.dimension = dimension;
  out.device.regions.push_back(
      {"object", region::inside(r0), object_a, object_sigma, Sign::Positive, 4, false});
  // The dilation G o F sends (m^{d-2} I, m^d) on B_{r1} \ B_{r0} to (I, 1) on B_{r3} \ B_{r2}.
  out.device.regions.push_back({"core-layer", region::annulus(r0, radii.r1),
                                constant_matrix(std::pow(m, d - 2.0) * kIdentity),
                                constant_scalar(std::pow(m, d)), Sign::Positive, 2, false});
  out.device.regions.push_back(
      {"lens", region::annulus(radii.r1, radii.r2), lens_a, lens_sigma, Sign::Lens, 4, false});
  out.device.regions.push_back(Background());

  MatrixField ref_a = [object_a, m, d](const Point2 &x)
  { return (std::pow(m, 2.0 - d) * object_a(x / m)).eval(); };
  ScalarField ref_sigma = [object_sigma, m, d](const Point2 &x)
  { return std::pow(m, -d) * object_sigma(x / m); };
  out.reference.dimension = dimension;
  out.reference.regions.push_back(
      {"magnified-object", region::inside(radii.r2), ref_a, ref_sigma, Sign::Positive, 4, false});
  out.reference.regions.push_back(Background());
  return out;
}

Medium cloak(const MatrixField &cloaked_a, double r1, double r2, double r3, int dimension)
{
  return BuildCloak(cloaked_a, constant_scalar(1.0), r1, r2, r3, dimension);
}

Medium cloak_finite_freq(const MatrixField &cloaked_a, const ScalarField &cloaked_sigma, double r1,
                         double r2, double r3, int dimension)
{
  CheckSigma(cloaked_sigma, region::annulus(r2, r3), r3);
  return BuildCloak(cloaked_a, cloaked_sigma, r1, r2, r3, dimension);
}

MediumPair alr_lens_with_objects(const MatrixField &object_a, const Point2 &x1, const Point2 &x2,
                                 double r0, double r1, double r2)
{
  const DeviceRadii radii = DeviceRadii::FromLens(r0, r1, r2);
  const double r3 = radii.r3;
  if (!RelativelyEqual(x1.norm(), r1, 1e-9) || !RelativelyEqual(x2.norm(), r2, 1e-9))
  {
    throw InvalidInput("object centres must lie on the circles r1 and r2");
  }
  if (!(r0 < std::min({r1, r2 - r1, r3 - r2})))
  {
    throw InvalidInput("object radius must be smaller than the layer widths");
  }
  if ((x1 - x2).norm() < 2.0 * r0)
  {
    throw InvalidInput("object disks overlap");
  }
  RegionPredicate c1 = [x1, r0, r1](const Point2 &x)
  { return (x - x1).norm() < r0 && x.norm() < r1; };
  RegionPredicate c2 = [x2, r0, r2, r3](const Point2 &x)
  {
    const double r = x.norm();
    return (x - x2).norm() < r0 && r > r2 && r < r3;
  };
  CheckObject(object_a, [c1, c2](const Point2 &x) { return c1(x) || c2(x); }, r3);

  MediumPair out;
  out.device.regions.push_back(
      {InclusionName(0), c1, object_a, constant_scalar(1.0), Sign::Positive, 2, true});
  out.device.regions.push_back(
      {InclusionName(1), c2, object_a, constant_scalar(1.0), Sign::Positive, 2, true});
  out.device.regions.push_back({"lens", region::annulus(r1, r2), constant_matrix(kIdentity),
                                constant_scalar(1.0), Sign::Lens, 2, false});
  out.device.regions.push_back(Background());
  out.reference = homogeneous_medium();
  return out;
}

MediumPair defective_cloak(const MatrixField &object_a, const Point2 &x3, double r0, double r1,
                           double r2)
{
  const DeviceRadii radii = DeviceRadii::FromLens(r0, r1, r2);
  const double r3 = radii.r3;
  if (!RelativelyEqual(x3.norm(), r3, 1e-9))
  {
    throw InvalidInput("defect centre must lie on the circle r3");
  }
  if (!(r0 < r3 - r2))
  {
    throw InvalidInput("object radius must be smaller than the cloaked layer width");
  }
  RegionPredicate object = [x3, r0, r3](const Point2 &x)
  { return (x - x3).norm() < r0 && x.norm() < r3; };
  CheckObject(object_a, object, r3);

  const auto [core_a, core_sigma] = cloak_core_scaling(r2, r3, 2);
  const double rho = r2;
  RegionPredicate image = [object, rho, r1, r2](const Point2 &y)
  {
    const double r = y.norm();
    return r > r1 && r < r2 && object(kelvin_apply(rho, y));
  };
  const auto [image_a, image_sigma] = KelvinPushed(object_a, constant_scalar(1.0), rho);
  const auto [lens_a, lens_sigma] =
      KelvinPushed(constant_matrix(kIdentity), constant_scalar(1.0), rho);

  MediumPair out;
  out.device.regions.push_back(
      {InclusionName(0), object, object_a, constant_scalar(1.0), Sign::Positive, 2, true});
  out.device.regions.push_back({"object-1-image", image, image_a, image_sigma, Sign::Lens, 4, true});
  out.device.regions.push_back({"cloaked-annulus", region::annulus(r2, r3),
                                constant_matrix(kIdentity), constant_scalar(1.0), Sign::Positive, 2,
                                false});
  out.device.regions.push_back(
      {"complementary-layer", region::annulus(r1, r2), lens_a, lens_sigma, Sign::Lens, 4, false});
  out.device.regions.push_back({"core", region::inside(r1), constant_matrix(core_a * kIdentity),
                                constant_scalar(core_sigma), Sign::Positive, 2, false});
  out.device.regions.push_back(Background());

  out.reference.regions.push_back(
      {InclusionName(0), object, object_a, constant_scalar(1.0), Sign::Positive, 2, true});
  out.reference.regions.push_back(Background());
  return out;
}

Medium homogeneous_medium()
{
  Medium medium;
  medium.regions.push_back(Background());
  return medium;
}

}  // namespace nimlab
