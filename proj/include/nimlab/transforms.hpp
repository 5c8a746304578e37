// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_TRANSFORMS_HPP
#define NIMLAB_TRANSFORMS_HPP

#include <cmath>
#include <functional>
#include <Eigen/Dense>
#include "nimlab/errors.hpp"
#include "nimlab/quadrature.hpp"

namespace nimlab
{

template <typename Scalar, int Dim>
using PointT = Eigen::Matrix<Scalar, Dim, 1>;

template <typename Scalar, int Dim>
using TensorT = Eigen::Matrix<Scalar, Dim, Dim>;

// Inversion x -> rho^2 x / |x|^2 through the sphere of radius rho.
template <typename Scalar = double>
struct KelvinMap
{
  Scalar pivot_radius;
};

template <typename Derived>
typename Derived::PlainObject kelvin_apply(typename Derived::Scalar rho,
                                           const Eigen::MatrixBase<Derived> &x)
{
  const auto r2 = x.squaredNorm();
  if (r2 == 0)
  {
    throw InvalidInput("Kelvin map is undefined at the origin");
  }
  return (rho * rho / r2) * x;
}

// DF(x) = rho^2/|x|^2 (I - 2 x x^T / |x|^2).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime>
kelvin_jacobian(typename Derived::Scalar rho, const Eigen::MatrixBase<Derived> &x)
{
  using Scalar = typename Derived::Scalar;
  constexpr int Dim = Derived::RowsAtCompileTime;
  const Scalar r2 = x.squaredNorm();
  if (r2 == 0)
  {
    throw InvalidInput("Kelvin map is undefined at the origin");
  }
  TensorT<Scalar, Dim> jac = TensorT<Scalar, Dim>::Identity() - (Scalar(2) / r2) * x * x.transpose();
  return (rho * rho / r2) * jac;
}

template <typename Scalar, int Dim>
struct DiffeoSample
{
  PointT<Scalar, Dim> x;
  PointT<Scalar, Dim> y;
  TensorT<Scalar, Dim> jacobian;
  Scalar determinant;
};

// A diffeomorphism given by its forward map, inverse, and Jacobian.
template <typename Scalar, int Dim>
struct Diffeomorphism
{
  using Point = PointT<Scalar, Dim>;
  using Tensor = TensorT<Scalar, Dim>;

  std::function<Point(const Point &)> map;
  std::function<Point(const Point &)> inverse;
  std::function<Tensor(const Point &)> jacobian;

  DiffeoSample<Scalar, Dim> Sample(const Point &x) const
  {
    Tensor jac = jacobian(x);
    return {x, map(x), jac, jac.determinant()};
  }
};

template <typename Scalar, int Dim>
Diffeomorphism<Scalar, Dim> identity_diffeomorphism()
{
  using D = Diffeomorphism<Scalar, Dim>;
  return {[](const typename D::Point &x) { return x; },
          [](const typename D::Point &y) { return y; },
          [](const typename D::Point &) { return D::Tensor::Identity().eval(); }};
}

template <typename Scalar, int Dim>
Diffeomorphism<Scalar, Dim> kelvin_diffeomorphism(Scalar rho)
{
  using D = Diffeomorphism<Scalar, Dim>;
  auto f = [rho](const typename D::Point &x) -> typename D::Point { return kelvin_apply(rho, x); };
  return {f, f,
          [rho](const typename D::Point &x) -> typename D::Tensor
          { return kelvin_jacobian(rho, x); }};
}

template <typename Scalar, int Dim>
Diffeomorphism<Scalar, Dim> affine_diffeomorphism(const TensorT<Scalar, Dim> &A,
                                                  const PointT<Scalar, Dim> &b)
{
  using D = Diffeomorphism<Scalar, Dim>;
  const TensorT<Scalar, Dim> Ainv = A.inverse();
  return {[A, b](const typename D::Point &x) -> typename D::Point { return A * x + b; },
          [Ainv, b](const typename D::Point &y) -> typename D::Point { return Ainv * (y - b); },
          [A](const typename D::Point &) -> typename D::Tensor { return A; }};
}

template <typename Scalar, int Dim>
Diffeomorphism<Scalar, Dim> scaling_diffeomorphism(Scalar s)
{
  return affine_diffeomorphism<Scalar, Dim>(s * TensorT<Scalar, Dim>::Identity(),
                                            PointT<Scalar, Dim>::Zero());
}

// outer o inner, with the chain rule for the Jacobian.
template <typename Scalar, int Dim>
Diffeomorphism<Scalar, Dim> compose(const Diffeomorphism<Scalar, Dim> &outer,
                                    const Diffeomorphism<Scalar, Dim> &inner)
{
  using D = Diffeomorphism<Scalar, Dim>;
  return {[outer, inner](const typename D::Point &x) -> typename D::Point
          { return outer.map(inner.map(x)); },
          [outer, inner](const typename D::Point &y) -> typename D::Point
          { return inner.inverse(outer.inverse(y)); },
          [outer, inner](const typename D::Point &x) -> typename D::Tensor
          { return outer.jacobian(inner.map(x)) * inner.jacobian(x); }};
}

template <typename Scalar, int Dim, typename Sigma>
struct PushedCoefficients
{
  TensorT<Scalar, Dim> a;
  Sigma sigma;
};

//
// T_* a = DT a DT^T / |det DT| and T_* sigma = sigma / |det DT|, both at y = T(x).
//
template <typename Scalar, int Dim, typename Sigma>
PushedCoefficients<Scalar, Dim, Sigma> pushforward(const TensorT<Scalar, Dim> &a,
                                                   const Sigma &sigma,
                                                   const DiffeoSample<Scalar, Dim> &sample)
{
  using std::abs;
  using std::pow;
  const Scalar scale = pow(sample.jacobian.norm(), Dim);
  if (!(abs(sample.determinant) > Scalar(1e-14) * scale) || !std::isfinite(sample.determinant))
  {
    throw InvalidInput("pushforward through a singular Jacobian");
  }
  if ((a - a.transpose()).norm() > Scalar(1e-12) * (Scalar(1) + a.norm()))
  {
    throw InvalidInput("pushforward expects a symmetric coefficient");
  }
  const Scalar inv_det = Scalar(1) / abs(sample.determinant);
  TensorT<Scalar, Dim> pushed = inv_det * (sample.jacobian * a * sample.jacobian.transpose());
  pushed = (Scalar(0.5) * (pushed + pushed.transpose())).eval();
  return {pushed, sigma * inv_det};
}

template <typename Scalar, int Dim, typename Sigma>
PushedCoefficients<Scalar, Dim, Sigma>
pushforward(const std::function<TensorT<Scalar, Dim>(const PointT<Scalar, Dim> &)> &a,
            const std::function<Sigma(const PointT<Scalar, Dim> &)> &sigma,
            const Diffeomorphism<Scalar, Dim> &T, const PointT<Scalar, Dim> &x)
{
  return pushforward(a(x), sigma(x), T.Sample(x));
}

struct ScalarTestField
{
  std::function<double(const Eigen::Vector2d &)> value;
  std::function<Eigen::Vector2d(const Eigen::Vector2d &)> gradient;
};

using Diffeo2 = Diffeomorphism<double, 2>;
using MatrixCoefficient2 = std::function<Eigen::Matrix2d(const Eigen::Vector2d &)>;
using RealCoefficient2 = std::function<double(const Eigen::Vector2d &)>;

//
// |int_D (a grad u . grad phi - sigma u phi) - int_{T(D)} (T_*a grad v . grad psi - T_*sigma v psi)|
// with v = u o T^-1 and psi = phi o T^-1. `source` integrates over D, `image` over T(D),
// each with its own nodes.
//
double weak_form_transport_check(const MatrixCoefficient2 &a, const RealCoefficient2 &sigma,
                                 const ScalarTestField &u, const ScalarTestField &phi,
                                 const Diffeo2 &T, const QuadratureRule2 &source,
                                 const QuadratureRule2 &image);

// Annulus D = B_outer \ B_inner around the origin and a radial map T sending it onto
// another annulus.
double weak_form_transport_check(const MatrixCoefficient2 &a, const RealCoefficient2 &sigma,
                                 const ScalarTestField &u, const ScalarTestField &phi,
                                 const Diffeo2 &T, double inner, double outer,
                                 int quadrature_order);

}  // namespace nimlab

#endif  // NIMLAB_TRANSFORMS_HPP
