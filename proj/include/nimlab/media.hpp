// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_MEDIA_HPP
#define NIMLAB_MEDIA_HPP

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>
#include <Eigen/Dense>
#include "nimlab/geometry.hpp"

namespace nimlab
{

using Complex = std::complex<double>;
using MatrixField = std::function<Eigen::Matrix2d(const Point2 &)>;
using ScalarField = std::function<Complex(const Point2 &)>;

//
// Radii ladder r0 < r1 < r2 < r3 with r3 = r2^2 / r1. `m` is the magnification of the
// superlens presets and `dimension` only enters the scaling formulas.
//
struct DeviceRadii
{
  double r0 = 0.0, r1 = 0.0, r2 = 0.0, r3 = 0.0;
  double m = 1.0;
  int dimension = 2;

  // r1 = sqrt(m) r0, r2 = m r0.
  static DeviceRadii Superlens(double m, double r0, int dimension = 2);
  // r1 >= m^(1/4) r0 chosen freely, r2 = sqrt(m) r1.
  static DeviceRadii SuperlensAlternate(double m, double r0, double r1, int dimension = 2);
  static DeviceRadii FromLens(double r0, double r1, double r2, int dimension = 2);

  void Validate() const;
};

enum class Sign
{
  Positive,
  Lens  // multiplied by s_delta = -1 - i delta
};

struct Region
{
  std::string name;
  RegionPredicate contains;
  MatrixField a;
  ScalarField sigma;
  Sign sign = Sign::Positive;
  int quadrature_degree = 2;
  bool must_be_meshed = false;  // small objects: an empty element set is an error
};

//
// Ordered region list; the first region whose predicate holds claims the point.
//
struct Medium
{
  std::vector<Region> regions;
  int dimension = 2;

  int Locate(const Point2 &x) const;  // -1 if no region contains x
  const Region &At(const Point2 &x) const;
  bool HasLens() const;
  static Complex SignFactor(Sign sign, double delta);
  Eigen::Matrix2cd EffectiveA(const Point2 &x, double delta) const;
  Complex EffectiveSigma(const Point2 &x, double delta) const;
};

struct SourceTerm
{
  ScalarField value;
  RegionPredicate support;
  double support_min_radius = 0.0;  // declared: f vanishes on B_{support_min_radius}
};

// Smooth bump centred on the circle of radius `radius` at angle 0: a radial C-infinity bump
// of half-width `radial_half_width` times an angular bump of half-width `angular_half_width`.
SourceTerm angular_bump_source(double radius, double radial_half_width, double angular_half_width,
                               double amplitude = 1.0);

MatrixField constant_matrix(const Eigen::Matrix2d &a);
ScalarField constant_scalar(Complex s);

// Isotropic radial profile equal to `inner_value` for |x| <= fade_start and to
// `outer_value` for |x| >= fade_end, joined by a C2 quintic step.
MatrixField smooth_radial_step(double inner_value, double outer_value, double fade_start,
                               double fade_end);

// Sampled ellipticity: smallest and largest eigenvalue over sample points.
struct EllipticityReport
{
  double min_eigenvalue;
  double max_eigenvalue;
  double Contrast() const { return std::max(max_eigenvalue, 1.0 / min_eigenvalue); }
};

EllipticityReport sample_ellipticity(const MatrixField &a, const RegionPredicate &where,
                                     double extent, int samples_per_axis = 41);
EllipticityReport sample_ellipticity(const Medium &medium, double extent,
                                     int samples_per_axis = 81);

// Core coefficients (r3^2/r2^2)^(d-2) and (r3^2/r2^2)^d of the complementary-media cloak.
std::pair<double, double> cloak_core_scaling(double r2, double r3, int dimension);

struct MediumPair
{
  Medium device;
  Medium reference;
};

MediumPair superlens_quasistatic(const MatrixField &object_a, double m, double r0);

MediumPair superlens_finite_freq(const MatrixField &object_a, const ScalarField &object_sigma,
                                 double m, double r0, int dimension = 2);

Medium cloak(const MatrixField &cloaked_a, double r1, double r2, double r3, int dimension = 2);

Medium cloak_finite_freq(const MatrixField &cloaked_a, const ScalarField &cloaked_sigma, double r1,
                         double r2, double r3, int dimension = 2);

MediumPair alr_lens_with_objects(const MatrixField &object_a, const Point2 &x1, const Point2 &x2,
                                 double r0, double r1, double r2);

MediumPair defective_cloak(const MatrixField &object_a, const Point2 &x3, double r0, double r1,
                           double r2);

// Homogeneous medium A = I, Sigma = 1.
Medium homogeneous_medium();

}  // namespace nimlab

#endif  // NIMLAB_MEDIA_HPP
