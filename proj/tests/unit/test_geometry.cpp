// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include "nimlab/errors.hpp"
#include "nimlab/geometry.hpp"

using namespace nimlab;

namespace
{

double MaxDiameter(const Mesh &mesh)
{
  double h = 0.0;
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    h = std::max(h, mesh.Diameter(t));
  }
  return h;
}

bool Conforms(const Mesh &mesh, double rho)
{
  const double tol = 1e-12 * rho;
  for (const auto &tri : mesh.triangles)
  {
    double rmin = 1e300, rmax = 0.0;
    for (int v : tri)
    {
      const double r = mesh.vertices[v].norm();
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
    if (rmin < rho - tol && rmax > rho + tol)
    {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("geometry")
{
  TEST_CASE("annular mesh conforms to every interface circle")
  {
    const Mesh mesh = build_annular_mesh(10.0, {1.0, 2.0, 4.0, 8.0}, 64);
    CHECK(mesh.interface_circles == std::vector<double>{1.0, 2.0, 4.0, 8.0});
    CHECK(mesh.NumBands() == 5);
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      REQUIRE(mesh.SignedArea(t) > 0.0);
    }
    for (double rho : mesh.interface_circles)
    {
      CHECK(Conforms(mesh, rho));
    }
    CHECK(mesh.h > 0.0);
  }

  TEST_CASE("region tags match the bands")
  {
    const std::vector<double> radii{1.0, 2.0, 4.0, 8.0};
    const Mesh mesh = build_annular_mesh(10.0, radii, 48);
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      const double r = mesh.Centroid(t).norm();
      const int band = static_cast<int>(
          std::upper_bound(radii.begin(), radii.end(), r) - radii.begin());
      REQUIRE(mesh.region_tag[t] == band);
      REQUIRE(mesh.inclusion_tag[t] == kNoInclusion);
    }
  }

  TEST_CASE("plain disk mesh without interfaces")
  {
    const Mesh mesh = build_annular_mesh(1.0, {}, 16);
    CHECK(mesh.NumBands() == 1);
    CHECK(mesh.NumTriangles() > 0);
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      REQUIRE(mesh.SignedArea(t) > 0.0);
      REQUIRE(mesh.region_tag[t] == 0);
    }
  }

  TEST_CASE("area sum equals the inscribed polygon")
  {
    const int n = 64;
    const Mesh mesh = build_annular_mesh(10.0, {1.0, 2.0, 4.0, 8.0}, n);
    double area = 0.0;
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      area += mesh.SignedArea(t);
    }
    const double polygon = 0.5 * n * 100.0 * std::sin(2.0 * std::numbers::pi / n);
    CHECK(std::abs(area - polygon) <= 1e-12 * polygon);
  }

  TEST_CASE("boundary edges lie on the outer circle")
  {
    const Mesh mesh = build_annular_mesh(3.0, {1.0}, 32);
    CHECK(mesh.boundary_edges.size() == 32u);
    for (const auto &e : mesh.boundary_edges)
    {
      CHECK(e.tag == kOuterBoundaryTag);
      for (int v : e.vertices)
      {
        CHECK(mesh.vertices[v].norm() == doctest::Approx(3.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("doubling the angular count halves h")
  {
    const Mesh coarse = build_annular_mesh(10.0, {1.0, 2.0, 4.0, 8.0}, 64);
    const Mesh fine = build_annular_mesh(10.0, {1.0, 2.0, 4.0, 8.0}, 128);
    const double ratio = MaxDiameter(coarse) / MaxDiameter(fine);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
  }

  TEST_CASE("radial grading keeps conformity")
  {
    const Mesh mesh = build_annular_mesh(10.0, {2.0, 4.0, 8.0}, 48, 2.0);
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      REQUIRE(mesh.SignedArea(t) > 0.0);
    }
    for (double rho : mesh.interface_circles)
    {
      CHECK(Conforms(mesh, rho));
    }
  }

  TEST_CASE("mesh generation is deterministic")
  {
    const Mesh a = build_annular_mesh(10.0, {1.0, 2.0, 4.0, 8.0}, 40, 1.5);
    const Mesh b = build_annular_mesh(10.0, {1.0, 2.0, 4.0, 8.0}, 40, 1.5);
    REQUIRE(a.vertices.size() == b.vertices.size());
    for (std::size_t i = 0; i < a.vertices.size(); i++)
    {
      REQUIRE(a.vertices[i].x() == b.vertices[i].x());
      REQUIRE(a.vertices[i].y() == b.vertices[i].y());
    }
    CHECK(a.triangles == b.triangles);
    CHECK(a.region_tag == b.region_tag);
  }

  TEST_CASE("invalid radii are rejected")
  {
    CHECK_THROWS_AS(build_annular_mesh(10.0, {2.0, 1.0}, 32), InvalidInput);
    CHECK_THROWS_AS(build_annular_mesh(10.0, {2.0, 2.0}, 32), InvalidInput);
    CHECK_THROWS_AS(build_annular_mesh(10.0, {2.0, 12.0}, 32), InvalidInput);
    CHECK_THROWS_AS(build_annular_mesh(10.0, {2.0}, 8), InvalidInput);
  }

  TEST_CASE("single inclusion on a circle is tagged")
  {
    const Mesh base = build_annular_mesh(10.0, {2.0, 4.0, 8.0}, 96);
    const Mesh mesh = embed_disk_inclusions(base, {{Point2(2.0, 0.0), 0.2, HostSide::Inside}});
    CHECK(mesh.NumTriangles() > base.NumTriangles());
    int tagged = 0;
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      REQUIRE(mesh.SignedArea(t) > 0.0);
      if (mesh.inclusion_tag[t] == 0)
      {
        tagged++;
        const Point2 c = mesh.Centroid(t);
        CHECK((c - Point2(2.0, 0.0)).norm() < 0.2);
        CHECK(c.norm() < 2.0);
      }
    }
    CHECK(tagged > 0);
    CHECK(InclusionName(0) == "object-1");
    for (double rho : mesh.interface_circles)
    {
      CHECK(Conforms(mesh, rho));
    }
  }

  TEST_CASE("zero radius inclusion leaves the mesh unchanged")
  {
    const Mesh base = build_annular_mesh(10.0, {2.0, 4.0, 8.0}, 48);
    const Mesh mesh = embed_disk_inclusions(base, {{Point2(2.0, 0.0), 0.0, HostSide::Inside}});
    CHECK(mesh.vertices.size() == base.vertices.size());
    CHECK(mesh.triangles == base.triangles);
    CHECK(mesh.inclusion_tag == base.inclusion_tag);
  }

  TEST_CASE("two inclusions give two disjoint tagged sets")
  {
    const Point2 x1(2.0, 0.0), x2(0.0, 4.0);
    const double r0 = 0.1;
    const Mesh base = build_annular_mesh(10.0, {2.0, 4.0, 8.0}, 128);
    const Mesh mesh = embed_disk_inclusions(
        base, {{x1, r0, HostSide::Inside}, {x2, r0, HostSide::Outside}});
    std::set<int> first, second;
    for (int t = 0; t < mesh.NumTriangles(); t++)
    {
      const Point2 c = mesh.Centroid(t);
      if (mesh.inclusion_tag[t] == 0)
      {
        first.insert(t);
        CHECK((c - x1).norm() < r0);
        CHECK(c.norm() < 2.0);
      }
      else if (mesh.inclusion_tag[t] == 1)
      {
        second.insert(t);
        CHECK((c - x2).norm() < r0);
        CHECK(c.norm() > 4.0);
      }
    }
    CHECK(!first.empty());
    CHECK(!second.empty());
  }

  TEST_CASE("inclusion errors")
  {
    const Mesh base = build_annular_mesh(10.0, {2.0, 4.0, 8.0}, 48);
    CHECK_THROWS_AS(embed_disk_inclusions(base, {{Point2(3.0, 0.0), 0.1, HostSide::Inside}}),
                    InvalidInput);
    CHECK_THROWS_AS(embed_disk_inclusions(base, {{Point2(2.0, 0.0), 2.0, HostSide::Inside}}),
                    InvalidInput);
  }

  TEST_CASE("point locator finds containing triangles")
  {
    const Mesh mesh = build_annular_mesh(5.0, {1.0, 2.0}, 32);
    const PointLocator locator(mesh);
    for (const Point2 &p : {Point2(0.1, 0.2), Point2(1.5, -0.3), Point2(-3.0, 2.0)})
    {
      const auto hit = locator.Locate(p);
      REQUIRE(hit.has_value());
      CHECK(hit->barycentric.sum() == doctest::Approx(1.0));
      CHECK(hit->barycentric.minCoeff() >= -1e-12);
      const auto &tri = mesh.triangles[hit->triangle];
      const Point2 q = hit->barycentric[0] * mesh.vertices[tri[0]] +
                       hit->barycentric[1] * mesh.vertices[tri[1]] +
                       hit->barycentric[2] * mesh.vertices[tri[2]];
      CHECK((q - p).norm() < 1e-12);
    }
    CHECK_FALSE(locator.Locate(Point2(6.0, 0.0)).has_value());
  }

  TEST_CASE("region predicates")
  {
    CHECK(region::inside(2.0)(Point2(1.0, 1.0)));
    CHECK_FALSE(region::inside(1.0)(Point2(1.0, 1.0)));
    CHECK(region::outside(1.0)(Point2(1.0, 1.0)));
    CHECK(region::annulus(1.0, 2.0)(Point2(1.5, 0.0)));
    CHECK_FALSE(region::annulus(1.0, 2.0)(Point2(0.5, 0.0)));
    CHECK(region::everywhere()(Point2(100.0, 0.0)));
  }

  TEST_CASE("vtk export")
  {
    const Mesh mesh = build_annular_mesh(1.0, {}, 16);
    std::ostringstream os;
    write_vtk(mesh, os);
    const std::string s = os.str();
    CHECK(s.rfind("# vtk DataFile Version", 0) == 0);
    CHECK(s.find("ASCII") != std::string::npos);
    CHECK(s.find("POINTS " + std::to_string(mesh.NumVertices())) != std::string::npos);
  }
}
