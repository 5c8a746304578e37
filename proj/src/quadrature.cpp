// SPDX-License-Identifier: Apache-2.0

#include "nimlab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include "nimlab/errors.hpp"

namespace nimlab
{

GaussRule1D gauss_legendre(int n)
{
  if (n < 1)
  {
    throw InvalidInput("Gauss-Legendre rule needs at least one node");
  }
  GaussRule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; i++)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double pn = (n == 1) ? x : p1;
      const double pn1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

const TriangleRule &triangle_rule(int degree)
{
  static const TriangleRule rule1 = {{Eigen::Vector3d(1.0 / 3, 1.0 / 3, 1.0 / 3)}, {1.0}};
  static const TriangleRule rule2 = {{Eigen::Vector3d(2.0 / 3, 1.0 / 6, 1.0 / 6),
                                      Eigen::Vector3d(1.0 / 6, 2.0 / 3, 1.0 / 6),
                                      Eigen::Vector3d(1.0 / 6, 1.0 / 6, 2.0 / 3)},
                                     {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  static const TriangleRule rule4 = []
  {
    const double a = 0.445948490915965, b = 1.0 - 2.0 * a, wa = 0.223381589678011;
    const double c = 0.091576213509771, d = 1.0 - 2.0 * c, wc = 0.109951743655322;
    return TriangleRule{{Eigen::Vector3d(a, a, b), Eigen::Vector3d(a, b, a),
                         Eigen::Vector3d(b, a, a), Eigen::Vector3d(c, c, d),
                         Eigen::Vector3d(c, d, c), Eigen::Vector3d(d, c, c)},
                        {wa, wa, wa, wc, wc, wc}};
  }();
  switch (degree)
  {
    case 1:
      return rule1;
    case 2:
      return rule2;
    case 4:
      return rule4;
    default:
      throw InvalidInput("unsupported triangle quadrature degree");
  }
}

void QuadratureRule2::Append(const QuadratureRule2 &other)
{
  points.insert(points.end(), other.points.begin(), other.points.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

QuadratureRule2 annulus_quadrature(const Eigen::Vector2d &center, double inner, double outer,
                                   int order)
{
  if (!(outer > inner) || inner < 0.0)
  {
    throw InvalidInput("annulus quadrature needs 0 <= inner < outer");
  }
  const GaussRule1D g = gauss_legendre(order);
  const int n_theta = 4 * order + 4;
  QuadratureRule2 q;
  const double half = 0.5 * (outer - inner), mid = 0.5 * (outer + inner);
  for (int i = 0; i < order; i++)
  {
    const double r = mid + half * g.nodes[i];
    const double wr = half * g.weights[i] * r;
    for (int j = 0; j < n_theta; j++)
    {
      const double theta = 2.0 * std::numbers::pi * (j + 0.5) / n_theta;
      q.points.push_back(center + r * Eigen::Vector2d(std::cos(theta), std::sin(theta)));
      q.weights.push_back(wr * 2.0 * std::numbers::pi / n_theta);
    }
  }
  return q;
}

QuadratureRule2 triangle_quadrature(const Eigen::Vector2d &a, const Eigen::Vector2d &b,
                                    const Eigen::Vector2d &c, int order)
{
  const GaussRule1D g = gauss_legendre(order);
  const double jac = std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  QuadratureRule2 q;
  for (int i = 0; i < order; i++)
  {
    const double u = 0.5 * (g.nodes[i] + 1.0);
    for (int j = 0; j < order; j++)
    {
      const double v = 0.5 * (g.nodes[j] + 1.0);
      const double s = u, t = v * (1.0 - u);
      q.points.push_back(a + s * (b - a) + t * (c - a));
      q.weights.push_back(0.25 * g.weights[i] * g.weights[j] * (1.0 - u) * jac);
    }
  }
  return q;
}

}  // namespace nimlab
