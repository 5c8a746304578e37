// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include "nimlab/errors.hpp"
#include "nimlab/quadrature.hpp"
#include "nimlab/transforms.hpp"

using namespace nimlab;
using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace
{

Vector2d RandomPoint(std::mt19937 &rng, double rmin, double rmax)
{
  std::uniform_real_distribution<double> r(rmin, rmax), th(0.0, 2.0 * 3.141592653589793);
  const double rr = r(rng), tt = th(rng);
  return {rr * std::cos(tt), rr * std::sin(tt)};
}

Matrix2d RandomSpd(std::mt19937 &rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix2d b;
  b << u(rng), u(rng), u(rng), u(rng);
  return b * b.transpose() + 0.5 * Matrix2d::Identity();
}

ScalarTestField Polynomial(double c0, double c1, double c2)
{
  return {[=](const Vector2d &x) { return c0 + c1 * x.x() * x.y() + c2 * x.x() * x.x(); },
          [=](const Vector2d &x) -> Vector2d
          { return {c1 * x.y() + 2.0 * c2 * x.x(), c1 * x.x()}; }};
}

}  // namespace

TEST_SUITE("transforms")
{
  TEST_CASE("kelvin map examples")
  {
    CHECK((kelvin_apply(4.0, Vector2d(2.0, 0.0)) - Vector2d(8.0, 0.0)).norm() < 1e-15);
    CHECK((kelvin_apply(4.0, Vector2d(4.0, 0.0)) - Vector2d(4.0, 0.0)).norm() < 1e-15);
    for (int j = 0; j < 32; j++)
    {
      const double t = 0.2 * j;
      const Vector2d x(2.0 * std::cos(t), 2.0 * std::sin(t));
      CHECK(kelvin_apply(4.0, x).norm() == doctest::Approx(8.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(kelvin_apply(4.0, Vector2d::Zero()), InvalidInput);
    CHECK_THROWS_AS(kelvin_jacobian(4.0, Vector2d::Zero()), InvalidInput);
  }

  TEST_CASE("kelvin map is an involution")
  {
    std::mt19937 rng(7);
    for (int i = 0; i < 200; i++)
    {
      const Vector2d x = RandomPoint(rng, 0.1, 20.0);
      const Vector2d back = kelvin_apply(3.0, kelvin_apply(3.0, x));
      CHECK((back - x).norm() <= 1e-13 * x.norm());
    }
    const Vector3d x3(0.3, -1.2, 2.0);
    CHECK((kelvin_apply(2.0, kelvin_apply(2.0, x3)) - x3).norm() <= 1e-13 * x3.norm());
  }

  TEST_CASE("kelvin jacobian")
  {
    const Matrix2d j = kelvin_jacobian(1.0, Vector2d(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix2d> es(j);
    CHECK(es.eigenvalues()[0] == doctest::Approx(-1.0));
    CHECK(es.eigenvalues()[1] == doctest::Approx(1.0));

    std::mt19937 rng(11);
    for (int i = 0; i < 50; i++)
    {
      const Vector2d x = RandomPoint(rng, 0.5, 5.0);
      Matrix2d fd;
      const double step = 1e-5;
      for (int c = 0; c < 2; c++)
      {
        Vector2d e = Vector2d::Zero();
        e[c] = step;
        fd.col(c) = (kelvin_apply(2.0, Vector2d(x + e)) - kelvin_apply(2.0, Vector2d(x - e))) /
                    (2.0 * step);
      }
      CHECK((fd - kelvin_jacobian(2.0, x)).norm() < 1e-6);
      const Vector2d on(2.0 * x.normalized());
      CHECK(std::abs(kelvin_jacobian(2.0, on).determinant()) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("pushforward through the identity")
  {
    const auto id = identity_diffeomorphism<double, 2>();
    Matrix2d a;
    a << 2.0, 0.3, 0.3, 1.5;
    const auto p = pushforward(a, 0.7, id.Sample(Vector2d(0.4, -0.2)));
    CHECK((p.a - a).norm() < 1e-15);
    CHECK(p.sigma == doctest::Approx(0.7));
  }

  TEST_CASE("kelvin pushforward of the identity is the identity in 2D")
  {
    const auto F = kelvin_diffeomorphism<double, 2>(4.0);
    std::mt19937 rng(3);
    for (int i = 0; i < 100; i++)
    {
      const auto p = pushforward(Matrix2d::Identity().eval(), 1.0, F.Sample(RandomPoint(rng, 1, 9)));
      CHECK((p.a - Matrix2d::Identity()).norm() < 1e-13);
    }
  }

  TEST_CASE("composite of complementary kelvin maps cancels on the cloak")
  {
    // G o F is the dilation x -> (r3/r2)^2 x. Pushing the complementary layer
    // F^-1_* I forward by F and then by G gives back I, and the core scaling cancels.
    const double r1 = 2.0, r2 = 4.0, r3 = 8.0;
    const auto F = kelvin_diffeomorphism<double, 2>(r2);
    const auto G = kelvin_diffeomorphism<double, 2>(r3);
    const auto GF = compose(G, F);
    std::mt19937 rng(5);
    for (int i = 0; i < 100; i++)
    {
      const Vector2d x = RandomPoint(rng, 0.1, r1);
      const auto p = pushforward(Matrix2d::Identity().eval(), 1.0, GF.Sample(x));
      CHECK((p.a - Matrix2d::Identity()).norm() < 1e-12);
      const double q = r3 * r3 / (r2 * r2);
      CHECK(p.sigma * q * q == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("pushforward is functorial")
  {
    std::mt19937 rng(9);
    const auto F = kelvin_diffeomorphism<double, 2>(2.0);
    Matrix2d A;
    A << 1.3, 0.4, -0.2, 0.9;
    const auto T2 = affine_diffeomorphism<double, 2>(A, Vector2d(0.5, -1.0));
    const auto T21 = compose(T2, F);
    for (int i = 0; i < 50; i++)
    {
      const Vector2d x = RandomPoint(rng, 0.5, 4.0);
      const Matrix2d a = RandomSpd(rng);
      const auto once = pushforward(a, 1.5, T21.Sample(x));
      const auto first = pushforward(a, 1.5, F.Sample(x));
      const auto twice = pushforward(first.a, first.sigma, T2.Sample(F.map(x)));
      CHECK((once.a - twice.a).norm() <= 1e-12 * once.a.norm());
      CHECK(once.sigma == doctest::Approx(twice.sigma).epsilon(1e-12));
    }
  }

  TEST_CASE("pushforward preserves symmetry and ellipticity")
  {
    std::mt19937 rng(13);
    const auto F = kelvin_diffeomorphism<double, 2>(3.0);
    for (int i = 0; i < 100; i++)
    {
      const auto p = pushforward(RandomSpd(rng), 1.0, F.Sample(RandomPoint(rng, 0.3, 6.0)));
      CHECK((p.a - p.a.transpose()).norm() == 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix2d>(p.a).eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("pushforward errors")
  {
    DiffeoSample<double, 2> singular{Vector2d(1, 0), Vector2d(1, 0), Matrix2d::Zero(), 0.0};
    singular.jacobian(0, 0) = 1.0;
    CHECK_THROWS_AS(pushforward(Matrix2d::Identity().eval(), 1.0, singular), InvalidInput);
    Matrix2d nonsym;
    nonsym << 1.0, 0.5, 0.0, 1.0;
    const auto id = identity_diffeomorphism<double, 2>();
    CHECK_THROWS_AS(pushforward(nonsym, 1.0, id.Sample(Vector2d(1, 0))), InvalidInput);
  }

  TEST_CASE("composed maps send the object circle to the magnified circle")
  {
    const double m = 4.0, r0 = 1.0, r1 = 2.0, r2 = 4.0, r3 = r2 * r2 / r1;
    const auto GF = compose(kelvin_diffeomorphism<double, 2>(r3),
                            kelvin_diffeomorphism<double, 2>(r2));
    for (int j = 0; j < 16; j++)
    {
      const double t = 0.4 * j;
      CHECK(GF.map(Vector2d(r0 * std::cos(t), r0 * std::sin(t))).norm() ==
            doctest::Approx(m * r0).epsilon(1e-14));
    }
  }

  TEST_CASE("weak form transport: identity")
  {
    const auto u = Polynomial(1.0, 0.5, -0.3), phi = Polynomial(-0.2, 1.0, 0.4);
    MatrixCoefficient2 a = [](const Vector2d &) { return Matrix2d::Identity().eval(); };
    RealCoefficient2 sigma = [](const Vector2d &) { return 1.0; };
    CHECK(weak_form_transport_check(a, sigma, u, phi, identity_diffeomorphism<double, 2>(), 1.0,
                                    2.0, 8) < 1e-13);
  }

  TEST_CASE("weak form transport: kelvin map")
  {
    const auto u = Polynomial(1.0, 0.5, -0.3), phi = Polynomial(-0.2, 1.0, 0.4);
    MatrixCoefficient2 a = [](const Vector2d &x) -> Matrix2d
    {
      Matrix2d m;
      m << 2.0 + x.x() * x.x(), 0.2, 0.2, 1.0 + x.y() * x.y();
      return m;
    };
    RealCoefficient2 sigma = [](const Vector2d &x) { return 1.0 + 0.1 * x.x(); };
    const auto F = kelvin_diffeomorphism<double, 2>(4.0);
    const double scale = 1.0 + weak_form_transport_check(
        a, sigma, u, phi, identity_diffeomorphism<double, 2>(), 2.0, 4.0, 48);
    CHECK(weak_form_transport_check(a, sigma, u, phi, F, 2.0, 4.0, 48) <= 1e-10 * scale);
    CHECK(weak_form_transport_check(a, sigma, u, phi, F, 2.0, 4.0, 8) <= 1e-2 * scale);
  }

  TEST_CASE("weak form transport: random affine maps")
  {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    const auto u = Polynomial(0.3, 1.0, 0.2), phi = Polynomial(1.0, -0.4, 0.7);
    const Vector2d a0(0.0, 0.0), b0(1.0, 0.0), c0(0.2, 1.1);
    for (int trial = 0; trial < 10; trial++)
    {
      const Matrix2d spd = RandomSpd(rng);
      MatrixCoefficient2 a = [spd](const Vector2d &) { return spd; };
      RealCoefficient2 sigma = [](const Vector2d &) { return 0.8; };
      Matrix2d A;
      do
      {
        A << u01(rng), u01(rng), u01(rng), u01(rng);
      } while (std::abs(A.determinant()) < 0.2);
      const Vector2d b(u01(rng), u01(rng));
      const auto T = affine_diffeomorphism<double, 2>(A, b);
      const auto source = triangle_quadrature(a0, b0, c0, 6);
      const auto image = triangle_quadrature(T.map(a0), T.map(b0), T.map(c0), 6);
      CHECK(weak_form_transport_check(a, sigma, u, phi, T, source, image) <= 1e-10);
    }
  }
}
