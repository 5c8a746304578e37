// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_QUADRATURE_HPP
#define NIMLAB_QUADRATURE_HPP

#include <vector>
#include <Eigen/Dense>

namespace nimlab
{

struct GaussRule1D
{
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

GaussRule1D gauss_legendre(int n);

// Symmetric triangle rule in barycentric coordinates; weights sum to 1.
struct TriangleRule
{
  std::vector<Eigen::Vector3d> barycentric;
  std::vector<double> weights;
};

// Exact for polynomials of total degree `degree` (supported: 1, 2, 4).
const TriangleRule &triangle_rule(int degree);

struct QuadratureRule2
{
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;

  void Append(const QuadratureRule2 &other);
};

// Gauss-Legendre in the radius times the uniform (trapezoidal) rule in the angle.
QuadratureRule2 annulus_quadrature(const Eigen::Vector2d &center, double inner, double outer,
                                   int order);

// Collapsed (Duffy) tensor Gauss rule on a triangle.
QuadratureRule2 triangle_quadrature(const Eigen::Vector2d &a, const Eigen::Vector2d &b,
                                    const Eigen::Vector2d &c, int order);

}  // namespace nimlab

#endif  // NIMLAB_QUADRATURE_HPP
