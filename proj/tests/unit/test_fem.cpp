// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include "nimlab/errors.hpp"
#include "nimlab/fem.hpp"

using namespace nimlab;
using Eigen::Matrix2d;

namespace
{

std::shared_ptr<const Mesh> MakeMesh(double outer, std::vector<double> radii, int n)
{
  return std::make_shared<const Mesh>(build_annular_mesh(outer, radii, n));
}

double PoissonError(int n)
{
  auto mesh = MakeMesh(1.0, {}, n);
  SourceTerm f{constant_scalar(1.0), region::everywhere(), 0.0};
  const auto u = solve(assemble(mesh, homogeneous_medium(), 0.0, 0.0, &f, BoundaryKind::Dirichlet));
  const auto exact = ComplexNodalField::Interpolate(
      mesh, [](const Point2 &x) { return Complex((x.squaredNorm() - 1.0) / 4.0); });
  return subdomain_norm(u - exact, region::everywhere(), NormKind::L2);
}

std::vector<char> ConstrainedMask(const LinearSystem &sys)
{
  std::vector<char> mask(sys.matrix.rows(), 0);
  for (int i : sys.constrained)
  {
    mask[i] = 1;
  }
  return mask;
}

// Max |A_ij - B_ij| over rows that are not Dirichlet rows.
double FreeRowDifference(const LinearSystem &a, const SparseMatrixRow &b)
{
  const auto mask = ConstrainedMask(a);
  const SparseMatrixRow d = a.matrix - b;
  double worst = 0.0;
  for (int r = 0; r < d.outerSize(); r++)
  {
    if (mask[r])
    {
      continue;
    }
    for (SparseMatrixRow::InnerIterator it(d, r); it; ++it)
    {
      if (!mask[it.col()])
      {
        worst = std::max(worst, std::abs(it.value()));
      }
    }
  }
  return worst;
}

Medium PositiveCopy(Medium medium)
{
  for (auto &r : medium.regions)
  {
    r.sign = Sign::Positive;
  }
  return medium;
}

}  // namespace

TEST_SUITE("fem")
{
  TEST_CASE("poisson problem on the unit disk")
  {
    const double e32 = PoissonError(32), e64 = PoissonError(64);
    CHECK(e64 < 1e-3);
    const double slope = std::log(e32 / e64) / std::log(2.0);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
  }

  TEST_CASE("lens entries are the positive entries scaled by s_delta")
  {
    auto mesh = MakeMesh(10.0, {1.0, 2.0, 4.0, 8.0}, 32);
    const Medium device = superlens_quasistatic(constant_matrix(Matrix2d::Identity()), 4.0, 1.0).device;
    const Medium positive = PositiveCopy(device);
    const int lens = device.Locate(Point2(3.0, 0.0));
    AssemblyOptions only;
    only.only_region = lens;
    const auto a = assemble(mesh, device, 0.1, 1.0, nullptr, BoundaryKind::Dirichlet, only);
    const auto b = assemble(mesh, positive, 0.1, 1.0, nullptr, BoundaryKind::Dirichlet, only);
    const SparseMatrixRow scaled = Complex(-1.0, -0.1) * b.matrix;
    CHECK(FreeRowDifference(a, scaled) < 1e-13);
    CHECK(a.matrix.nonZeros() > 0);
  }

  TEST_CASE("assembly is linear over regions")
  {
    auto mesh = MakeMesh(10.0, {1.0, 2.0, 4.0, 8.0}, 32);
    const SourceTerm f = angular_bump_source(9.0, 0.5, 0.4);
    const Medium device = superlens_finite_freq(constant_matrix(2.0 * Matrix2d::Identity()),
                                                constant_scalar(1.0), 4.0, 1.0).device;
    const auto full = assemble(mesh, device, 0.05, 0.7, &f, BoundaryKind::Dirichlet);
    SparseMatrixRow sum(full.matrix.rows(), full.matrix.cols());
    for (int r = 0; r < static_cast<int>(device.regions.size()); r++)
    {
      AssemblyOptions only;
      only.only_region = r;
      sum += assemble(mesh, device, 0.05, 0.7, &f, BoundaryKind::Dirichlet, only).matrix;
    }
    CHECK(FreeRowDifference(full, sum) < 1e-12 * full.matrix.norm());
  }

  TEST_CASE("rhs vanishes inside the source-free disk")
  {
    auto mesh = MakeMesh(10.0, {1.0, 2.0, 4.0, 8.0}, 48);
    const SourceTerm f = angular_bump_source(9.0, 0.5, 0.4);
    const auto sys = assemble(mesh, homogeneous_medium(), 0.0, 0.0, &f, BoundaryKind::Dirichlet);
    double inside = 0.0, total = 0.0;
    for (int v = 0; v < mesh->NumVertices(); v++)
    {
      total += std::abs(sys.rhs[v]);
      if (mesh->vertices[v].norm() < 8.0 - 1e-9)
      {
        inside += std::abs(sys.rhs[v]);
      }
    }
    CHECK(total > 0.0);
    CHECK(inside == 0.0);
  }

  TEST_CASE("dirichlet rows are identity rows")
  {
    auto mesh = MakeMesh(2.0, {1.0}, 24);
    SourceTerm f{constant_scalar(1.0), region::everywhere(), 0.0};
    const auto sys = assemble(mesh, homogeneous_medium(), 0.0, 1.0, &f, BoundaryKind::Dirichlet);
    CHECK(sys.constrained.size() == 24u);
    for (int i : sys.constrained)
    {
      CHECK(sys.matrix.row(i).nonZeros() == 1);
      CHECK(sys.matrix.coeff(i, i) == Complex(1.0));
      CHECK(sys.rhs[i] == Complex(0.0));
    }
  }

  TEST_CASE("absorbing system is complex symmetric")
  {
    auto mesh = MakeMesh(24.0, {1.0, 2.0, 4.0, 8.0}, 32);
    const Medium device = superlens_finite_freq(constant_matrix(Matrix2d::Identity()),
                                                constant_scalar(1.0), 4.0, 1.0).device;
    const auto sys = assemble(mesh, device, 0.1, 1.0, nullptr, BoundaryKind::Absorbing);
    const SparseMatrixRow transposed = sys.matrix.transpose();
    CHECK((sys.matrix - transposed).norm() < 1e-12 * sys.matrix.norm());
    const SparseMatrixRow adjoint = sys.matrix.adjoint();
    CHECK((sys.matrix - adjoint).norm() > 1e-3 * sys.matrix.norm());
  }

  TEST_CASE("solve of an identity system")
  {
    auto mesh = MakeMesh(1.0, {}, 16);
    LinearSystem sys;
    sys.mesh = mesh;
    const int n = mesh->NumVertices();
    sys.matrix.resize(n, n);
    sys.matrix.setIdentity();
    sys.rhs = ComplexVector::LinSpaced(n, 1.0, 2.0) * Complex(1.0, -0.5);
    SolveReport report;
    const auto x = solve(sys, &report);
    CHECK((x.values - sys.rhs).norm() < 1e-15);
    CHECK(report.relative_residual <= 1e-10);
  }

  TEST_CASE("conjugate coefficients give the conjugate solution")
  {
    auto mesh = MakeMesh(3.0, {1.0}, 32);
    SourceTerm f{constant_scalar(1.0), region::everywhere(), 0.0};
    Medium lossy = homogeneous_medium(), gain = homogeneous_medium();
    lossy.regions[0].sigma = constant_scalar(Complex(1.0, 0.3));
    gain.regions[0].sigma = constant_scalar(Complex(1.0, -0.3));
    const auto u = solve(assemble(mesh, lossy, 0.0, 1.3, &f, BoundaryKind::Dirichlet));
    const auto v = solve(assemble(mesh, gain, 0.0, 1.3, &f, BoundaryKind::Dirichlet));
    CHECK((u.values.conjugate() - v.values).norm() <= 1e-12 * u.values.norm());
  }

  TEST_CASE("discrete green identity")
  {
    auto mesh = MakeMesh(10.0, {1.0, 2.0, 4.0, 8.0}, 48);
    const SourceTerm f = angular_bump_source(9.0, 0.5, 0.4);
    const Medium device = superlens_quasistatic(constant_matrix(Matrix2d::Identity()), 4.0, 1.0).device;
    const double delta = 0.05;
    const auto sys = assemble(mesh, device, delta, 0.0, &f, BoundaryKind::Dirichlet);
    const auto u = solve(sys);
    const Complex quad = u.values.dot(sys.matrix * u.values);
    const double pos_in = subdomain_norm(u, region::inside(2.0), NormKind::H1Semi);
    const double pos_out = subdomain_norm(u, region::outside(4.0), NormKind::H1Semi);
    const double lens = subdomain_norm(u, region::annulus(2.0, 4.0), NormKind::H1Semi);
    const Complex expected =
        pos_in * pos_in + pos_out * pos_out + Complex(-1.0, -delta) * lens * lens;
    CHECK(std::abs(quad - expected) <= 1e-10 * std::abs(expected));
    CHECK(quad.imag() == doctest::Approx(-delta * lens * lens).epsilon(1e-10));
  }

  TEST_CASE("subdomain norms of simple fields")
  {
    auto mesh = MakeMesh(1.0, {}, 128);
    const double polygon = 0.5 * 128 * std::sin(2.0 * std::numbers::pi / 128);
    const auto one = ComplexNodalField::Interpolate(mesh, constant_scalar(1.0));
    CHECK(subdomain_norm(one, region::everywhere(), NormKind::L2) ==
          doctest::Approx(std::sqrt(polygon)).epsilon(1e-12));
    CHECK(subdomain_norm(one, region::everywhere(), NormKind::L2) ==
          doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-3));
    const auto x1 = ComplexNodalField::Interpolate(mesh, [](const Point2 &x) { return Complex(x.x()); });
    CHECK(subdomain_norm(x1, region::everywhere(), NormKind::H1Semi) ==
          doctest::Approx(std::sqrt(polygon)).epsilon(1e-12));
    const double l2 = subdomain_norm(x1, region::everywhere(), NormKind::L2);
    CHECK(subdomain_norm(x1, region::everywhere(), NormKind::H1) ==
          doctest::Approx(std::sqrt(l2 * l2 + polygon)).epsilon(1e-12));
    CHECK_THROWS_AS(subdomain_norm(one, region::outside(2.0), NormKind::L2), InvalidInput);
  }

  TEST_CASE("norm quadrature error decreases quadratically")
  {
    const ScalarField g = [](const Point2 &x) { return Complex(std::cos(x.x()) * std::exp(x.y())); };
    // int_{B_1} cos(x)^2 e^{2y} computed with a fine mesh as reference.
    const auto norm_at = [&g](int n)
    { return subdomain_norm(ComplexNodalField::Interpolate(MakeMesh(1.0, {}, n), g),
                            region::everywhere(), NormKind::L2); };
    const double ref = norm_at(512);
    const double e1 = std::abs(norm_at(32) - ref), e2 = std::abs(norm_at(64) - ref);
    CHECK(std::log(e1 / e2) / std::log(2.0) == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("stability ratio of a positive medium is linear in delta")
  {
    auto mesh = MakeMesh(10.0, {8.0}, 32);
    const SourceTerm f = angular_bump_source(9.0, 0.5, 0.4);
    const auto pts = stability_ratio(mesh, homogeneous_medium(), {0.1, 0.01, 0.001}, f);
    REQUIRE(pts.size() == 3u);
    for (const auto &p : pts)
    {
      CHECK_FALSE(p.skipped);
      CHECK(p.ratio / p.delta == doctest::Approx(pts[0].ratio / pts[0].delta).epsilon(1e-10));
    }
    CHECK_THROWS_AS(stability_ratio(mesh, homogeneous_medium(), {0.01, 0.1}, f), InvalidInput);
  }

  TEST_CASE("stability ratio of the superlens stays bounded")
  {
    auto mesh = MakeMesh(10.0, {1.0, 2.0, 4.0, 8.0}, 64);
    const SourceTerm f = angular_bump_source(9.0, 0.5, 0.4);
    const Medium device = superlens_quasistatic(constant_matrix(Matrix2d::Identity()), 4.0, 1.0).device;
    const auto pts = stability_ratio(mesh, device, {0.1, 0.01, 1e-3, 1e-4}, f);
    for (const auto &p : pts)
    {
      CHECK_FALSE(p.skipped);
      CHECK(p.ratio <= 10.0 * pts[0].ratio);
    }
  }

  TEST_CASE("assembly errors")
  {
    auto mesh = MakeMesh(10.0, {1.0, 2.0, 4.0, 8.0}, 32);
    const Medium device = superlens_quasistatic(constant_matrix(Matrix2d::Identity()), 4.0, 1.0).device;
    CHECK_THROWS_AS(assemble(mesh, device, 0.0, 0.0, nullptr, BoundaryKind::Dirichlet), InvalidInput);
    auto plain = MakeMesh(10.0, {2.0, 4.0, 8.0}, 16);
    const auto alr = alr_lens_with_objects(constant_matrix(2.0 * Matrix2d::Identity()),
                                           Point2(2.0, 0.0), Point2(-4.0, 0.0), 0.01, 2.0, 4.0);
    CHECK_THROWS_AS(assemble(plain, alr.device, 0.1, 0.0, nullptr, BoundaryKind::Dirichlet),
                    InvalidInput);
  }

  TEST_CASE("csv and vtk output")
  {
    std::ostringstream csv;
    write_norm_csv({{0.1, NormKind::H1, "exterior", 2.5}}, csv);
    CHECK(csv.str().rfind("delta,norm_kind,region,value\n", 0) == 0);
    CHECK(csv.str().find("H1,exterior") != std::string::npos);
    auto mesh = MakeMesh(1.0, {}, 16);
    std::ostringstream vtk;
    write_vtk(ComplexNodalField::Zero(mesh), vtk, "u");
    CHECK(vtk.str().find("SCALARS u_real double 1") != std::string::npos);
    CHECK(vtk.str().find("SCALARS u_abs double 1") != std::string::npos);
  }
}
