// SPDX-License-Identifier: Apache-2.0

#include "nimlab/transforms.hpp"

#include <algorithm>
#include <numeric>

namespace nimlab
{

namespace
{

void CheckDistinctImages(const Diffeo2 &T, const QuadratureRule2 &source)
{
  std::vector<Eigen::Vector2d> images;
  images.reserve(source.points.size());
  double scale = 0.0;
  for (const auto &x : source.points)
  {
    images.push_back(T.map(x));
    scale = std::max(scale, images.back().norm());
  }
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j)
            {
              return images[i].x() < images[j].x() ||
                     (images[i].x() == images[j].x() && images[i].y() < images[j].y());
            });
  const double tol = 1e-13 * (1.0 + scale);
  for (std::size_t k = 0; k < order.size(); k++)
  {
    for (std::size_t l = k + 1; l < order.size(); l++)
    {
      if (images[order[l]].x() - images[order[k]].x() > tol)
      {
        break;
      }
      if ((images[order[l]] - images[order[k]]).norm() <= tol)
      {
        throw InvalidInput("non-bijective sampling detected: duplicate images");
      }
    }
  }
}

}  // namespace

double weak_form_transport_check(const MatrixCoefficient2 &a, const RealCoefficient2 &sigma,
                                 const ScalarTestField &u, const ScalarTestField &phi,
                                 const Diffeo2 &T, const QuadratureRule2 &source,
                                 const QuadratureRule2 &image)
{
  CheckDistinctImages(T, source);

  double lhs = 0.0;
  for (std::size_t q = 0; q < source.points.size(); q++)
  {
    const Eigen::Vector2d &x = source.points[q];
    lhs += source.weights[q] * (u.gradient(x).dot(a(x) * phi.gradient(x)) -
                                sigma(x) * u.value(x) * phi.value(x));
  }

  double rhs = 0.0;
  for (std::size_t q = 0; q < image.points.size(); q++)
  {
    const Eigen::Vector2d x = T.inverse(image.points[q]);
    const auto sample = T.Sample(x);
    const auto pushed = pushforward(a(x), sigma(x), sample);
    const Eigen::Matrix2d jt_inv = sample.jacobian.transpose().inverse();
    const Eigen::Vector2d grad_v = jt_inv * u.gradient(x);
    const Eigen::Vector2d grad_psi = jt_inv * phi.gradient(x);
    rhs += image.weights[q] *
           (grad_v.dot(pushed.a * grad_psi) - pushed.sigma * u.value(x) * phi.value(x));
  }
  return std::abs(lhs - rhs);
}

double weak_form_transport_check(const MatrixCoefficient2 &a, const RealCoefficient2 &sigma,
                                 const ScalarTestField &u, const ScalarTestField &phi,
                                 const Diffeo2 &T, double inner, double outer,
                                 int quadrature_order)
{
  const double r_in = T.map(Eigen::Vector2d(inner, 0.0)).norm();
  const double r_out = T.map(Eigen::Vector2d(outer, 0.0)).norm();
  const auto source = annulus_quadrature(Eigen::Vector2d::Zero(), inner, outer, quadrature_order);
  const auto image = annulus_quadrature(Eigen::Vector2d::Zero(), std::min(r_in, r_out),
                                        std::max(r_in, r_out), quadrature_order);
  return weak_form_transport_check(a, sigma, u, phi, T, source, image);
}

}  // namespace nimlab
