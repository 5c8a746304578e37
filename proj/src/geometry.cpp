// SPDX-License-Identifier: Apache-2.0

#include "nimlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include "nimlab/errors.hpp"

namespace nimlab
{

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Full angular resolution is kept down to this fraction of the innermost circle.
constexpr double kCoreFullResolution = 0.25;

struct Ring
{
  double radius;
  int count;
  int band;
};

double Graded(double t, double grading)
{
  if (grading == 1.0)
  {
    return t;
  }
  return (t < 0.5) ? 0.5 * std::pow(2.0 * t, grading)
                   : 1.0 - 0.5 * std::pow(2.0 - 2.0 * t, grading);
}

int RingsForRatio(double ratio, int count)
{
  const double ds = kTwoPi / count;
  return std::max(1, static_cast<int>(std::lround(std::log(ratio) / ds)));
}

void FixOrientation(Mesh &mesh)
{
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    if (mesh.SignedArea(t) < 0.0)
    {
      std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
    }
  }
}

void ComputeMeshSize(Mesh &mesh)
{
  mesh.h = 0.0;
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    mesh.h = std::max(mesh.h, mesh.Diameter(t));
  }
}

}  // namespace

Point2 Mesh::Centroid(int t) const
{
  const auto &tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double Mesh::SignedArea(int t) const
{
  const auto &tri = triangles[t];
  const Point2 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Point2 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double Mesh::Diameter(int t) const
{
  const auto &tri = triangles[t];
  return std::max({(vertices[tri[0]] - vertices[tri[1]]).norm(),
                   (vertices[tri[1]] - vertices[tri[2]]).norm(),
                   (vertices[tri[2]] - vertices[tri[0]]).norm()});
}

std::string InclusionName(int inclusion)
{
  return "object-" + std::to_string(inclusion + 1);
}

Mesh build_annular_mesh(double outer_radius, const std::vector<double> &interface_radii,
                        int angular_count, double radial_grading)
{
  if (!(outer_radius > 0.0))
  {
    throw InvalidInput("outer radius must be positive");
  }
  if (angular_count < 16)
  {
    throw InvalidInput("angular_count must be at least 16");
  }
  if (!(radial_grading > 0.0))
  {
    throw InvalidInput("radial_grading must be positive");
  }
  for (std::size_t i = 0; i < interface_radii.size(); i++)
  {
    if (!(interface_radii[i] > 0.0))
    {
      throw InvalidInput("interface radii must be positive");
    }
    if (i > 0 && !(interface_radii[i] > interface_radii[i - 1]))
    {
      throw InvalidInput("interface radii must be strictly increasing");
    }
    if (!(interface_radii[i] < outer_radius))
    {
      throw InvalidInput("interface radius exceeds the outer radius");
    }
  }

  const int n_full = angular_count;
  std::vector<double> circles = interface_radii;
  circles.push_back(outer_radius);

  // Rings from the innermost one outwards. Inside the first circle the mesh is a disk whose
  // angular count halves every time the radius halves, ending in a fan around the origin.
  std::vector<Ring> rings;
  {
    const double core = circles.front();
    const double full_inner = kCoreFullResolution * core;
    std::vector<Ring> inward;
    const int k_full = RingsForRatio(1.0 / kCoreFullResolution, n_full);
    for (int k = 0; k <= k_full; k++)
    {
      const double t = static_cast<double>(k) / k_full;
      inward.push_back({core * std::pow(full_inner / core, t), n_full, 0});
    }
    int count = n_full;
    double radius = full_inner;
    while (count >= 16 && count % 2 == 0)
    {
      radius *= std::exp(-1.5 * kTwoPi / count);
      count /= 2;
      inward.push_back({radius, count, 0});
      const double level_start = radius;
      const double ratio = std::exp(-kTwoPi / count);
      while (radius * ratio > 0.5 * level_start * (1.0 + 1e-12))
      {
        radius *= ratio;
        inward.push_back({radius, count, 0});
      }
    }
    rings.assign(inward.rbegin(), inward.rend());
  }
  for (std::size_t b = 1; b < circles.size(); b++)
  {
    const double a = circles[b - 1], c = circles[b];
    const int k = RingsForRatio(c / a, n_full);
    for (int j = 1; j <= k; j++)
    {
      const double t = (j == k) ? 1.0 : Graded(static_cast<double>(j) / k, radial_grading);
      rings.push_back({(j == k) ? c : a * std::pow(c / a, t), n_full, static_cast<int>(b)});
    }
  }

  Mesh mesh;
  mesh.outer_radius = outer_radius;
  mesh.interface_circles = interface_radii;
  mesh.vertices.emplace_back(0.0, 0.0);
  std::vector<int> start;
  for (const auto &ring : rings)
  {
    start.push_back(mesh.NumVertices());
    for (int j = 0; j < ring.count; j++)
    {
      const double theta = kTwoPi * j / ring.count;
      mesh.vertices.emplace_back(ring.radius * std::cos(theta), ring.radius * std::sin(theta));
    }
  }

  auto add = [&mesh](int a, int b, int c, int tag)
  {
    mesh.triangles.push_back({a, b, c});
    mesh.region_tag.push_back(tag);
  };
  {
    const int n = rings.front().count, s = start.front();
    for (int j = 0; j < n; j++)
    {
      add(0, s + j, s + (j + 1) % n, 0);
    }
  }
  for (std::size_t k = 1; k < rings.size(); k++)
  {
    const Ring &in = rings[k - 1], &out = rings[k];
    const int si = start[k - 1], so = start[k];
    const int ni = in.count, no = out.count;
    const int band = out.band;
    if (ni == no)
    {
      // Alternating the diagonal between bands makes the triangulation of a band the mirror
      // image of its neighbour under inversion through their common circle.
      const bool flip = (band % 2) == 1;
      for (int j = 0; j < ni; j++)
      {
        const int a = si + j, b = si + (j + 1) % ni, c = so + j, d = so + (j + 1) % no;
        if (flip)
        {
          add(a, b, c, band);
          add(b, d, c, band);
        }
        else
        {
          add(a, b, d, band);
          add(a, d, c, band);
        }
      }
    }
    else
    {
      for (int j = 0; j < ni; j++)
      {
        const int a = si + j, b = si + (j + 1) % ni;
        const int c = so + 2 * j, m = so + 2 * j + 1, d = so + (2 * j + 2) % no;
        add(a, m, c, band);
        add(a, b, m, band);
        add(b, d, m, band);
      }
    }
  }
  FixOrientation(mesh);
  mesh.inclusion_tag.assign(mesh.triangles.size(), kNoInclusion);

  const int n_outer = rings.back().count, s_outer = start.back();
  for (int j = 0; j < n_outer; j++)
  {
    mesh.boundary_edges.push_back({{s_outer + j, s_outer + (j + 1) % n_outer}, kOuterBoundaryTag});
  }
  ComputeMeshSize(mesh);
  return mesh;
}

Mesh embed_disk_inclusions(const Mesh &mesh, const std::vector<DiskInclusion> &inclusions)
{
  std::vector<double> circles = mesh.interface_circles;
  circles.push_back(mesh.outer_radius);
  std::vector<DiskInclusion> active;
  for (const auto &inc : inclusions)
  {
    if (inc.radius < 0.0)
    {
      throw InvalidInput("inclusion radius must be nonnegative");
    }
    const double rc = inc.center.norm();
    int circle = -1;
    for (std::size_t j = 0; j < mesh.interface_circles.size(); j++)
    {
      if (std::abs(rc - mesh.interface_circles[j]) <= 1e-9 * mesh.interface_circles[j])
      {
        circle = static_cast<int>(j);
      }
    }
    if (circle < 0)
    {
      throw InvalidInput("inclusion center does not lie on a declared interface circle");
    }
    const double inner_width =
        circles[circle] - (circle > 0 ? circles[circle - 1] : 0.0);
    const double outer_width = circles[circle + 1] - circles[circle];
    if (inc.radius >= std::min(inner_width, outer_width))
    {
      throw InvalidInput("inclusion radius is not smaller than the adjacent layer widths");
    }
    if (inc.radius > 0.0)
    {
      active.push_back(inc);
    }
  }
  if (active.empty())
  {
    return mesh;
  }

  const int nt = mesh.NumTriangles();
  std::vector<char> red(nt, 0);
  for (int t = 0; t < nt; t++)
  {
    const Point2 c = mesh.Centroid(t);
    for (const auto &inc : active)
    {
      if ((c - inc.center).norm() < inc.radius + mesh.Diameter(t))
      {
        red[t] = 1;
      }
    }
  }

  auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  std::map<std::pair<int, int>, int> split;
  auto mark_edges = [&](int t)
  {
    const auto &tri = mesh.triangles[t];
    for (int e = 0; e < 3; e++)
    {
      split.emplace(key(tri[e], tri[(e + 1) % 3]), -1);
    }
  };
  for (int t = 0; t < nt; t++)
  {
    if (red[t])
    {
      mark_edges(t);
    }
  }
  // Closure: a triangle with two or more split edges is refined regularly as well.
  for (bool changed = true; changed;)
  {
    changed = false;
    for (int t = 0; t < nt; t++)
    {
      if (red[t])
      {
        continue;
      }
      const auto &tri = mesh.triangles[t];
      int count = 0;
      for (int e = 0; e < 3; e++)
      {
        count += split.count(key(tri[e], tri[(e + 1) % 3])) ? 1 : 0;
      }
      if (count >= 2)
      {
        red[t] = 1;
        mark_edges(t);
        changed = true;
      }
    }
  }

  Mesh out;
  out.outer_radius = mesh.outer_radius;
  out.interface_circles = mesh.interface_circles;
  out.vertices = mesh.vertices;
  for (auto &[edge, mid] : split)
  {
    const Point2 &pa = mesh.vertices[edge.first], &pb = mesh.vertices[edge.second];
    Point2 m = 0.5 * (pa + pb);
    for (double rho : circles)
    {
      if (std::abs(pa.norm() - rho) <= 1e-12 * rho && std::abs(pb.norm() - rho) <= 1e-12 * rho)
      {
        m *= rho / m.norm();
      }
    }
    mid = out.NumVertices();
    out.vertices.push_back(m);
  }
  auto midpoint = [&](int a, int b) -> int
  {
    auto it = split.find(key(a, b));
    return it == split.end() ? -1 : it->second;
  };
  auto add = [&out](int a, int b, int c, int tag)
  {
    out.triangles.push_back({a, b, c});
    out.region_tag.push_back(tag);
  };
  for (int t = 0; t < nt; t++)
  {
    const auto &tri = mesh.triangles[t];
    const int tag = mesh.region_tag[t];
    const int m01 = midpoint(tri[0], tri[1]), m12 = midpoint(tri[1], tri[2]),
              m20 = midpoint(tri[2], tri[0]);
    if (red[t])
    {
      add(tri[0], m01, m20, tag);
      add(m01, tri[1], m12, tag);
      add(m20, m12, tri[2], tag);
      add(m01, m12, m20, tag);
    }
    else if (m01 >= 0)
    {
      add(tri[0], m01, tri[2], tag);
      add(m01, tri[1], tri[2], tag);
    }
    else if (m12 >= 0)
    {
      add(tri[1], m12, tri[0], tag);
      add(m12, tri[2], tri[0], tag);
    }
    else if (m20 >= 0)
    {
      add(tri[2], m20, tri[1], tag);
      add(m20, tri[0], tri[1], tag);
    }
    else
    {
      add(tri[0], tri[1], tri[2], tag);
    }
  }
  for (const auto &edge : mesh.boundary_edges)
  {
    const int m = midpoint(edge.vertices[0], edge.vertices[1]);
    if (m >= 0)
    {
      out.boundary_edges.push_back({{edge.vertices[0], m}, edge.tag});
      out.boundary_edges.push_back({{m, edge.vertices[1]}, edge.tag});
    }
    else
    {
      out.boundary_edges.push_back(edge);
    }
  }
  FixOrientation(out);

  out.inclusion_tag.assign(out.triangles.size(), kNoInclusion);
  for (int t = 0; t < out.NumTriangles(); t++)
  {
    const Point2 c = out.Centroid(t);
    for (std::size_t i = 0; i < inclusions.size(); i++)
    {
      const auto &inc = inclusions[i];
      if (inc.radius <= 0.0 || (c - inc.center).norm() >= inc.radius)
      {
        continue;
      }
      const bool inner_side = c.norm() < inc.center.norm();
      if (inner_side != (inc.host == HostSide::Inside))
      {
        continue;
      }
      if (out.inclusion_tag[t] != kNoInclusion)
      {
        throw InvalidInput("disk inclusions overlap");
      }
      out.inclusion_tag[t] = static_cast<int>(i);
    }
  }
  ComputeMeshSize(out);
  return out;
}

PointLocator::PointLocator(const Mesh &mesh) : mesh_(mesh)
{
  const int nt = mesh.NumTriangles();
  order_.resize(nt);
  std::iota(order_.begin(), order_.end(), 0);
  boxes_.resize(nt);
  for (int t = 0; t < nt; t++)
  {
    Eigen::AlignedBox2d box;
    for (int v : mesh.triangles[t])
    {
      box.extend(mesh.vertices[v]);
    }
    boxes_[t] = box;
  }
  nodes_.reserve(2 * static_cast<std::size_t>(nt) / 4 + 1);
  if (nt > 0)
  {
    Build(0, nt);
  }
}

int PointLocator::Build(int begin, int end)
{
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox2d box;
  for (int i = begin; i < end; i++)
  {
    box.extend(boxes_[order_[i]]);
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= 8)
  {
    return id;
  }
  int axis;
  box.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b)
                   { return boxes_[a].center()[axis] < boxes_[b].center()[axis]; });
  const int left = Build(begin, mid);
  const int right = Build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::optional<PointLocator::Hit> PointLocator::Locate(const Point2 &p) const
{
  if (nodes_.empty())
  {
    return std::nullopt;
  }
  constexpr double tol = 1e-10;
  std::optional<Hit> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> stack = {0};
  while (!stack.empty())
  {
    const Node &node = nodes_[stack.back()];
    stack.pop_back();
    const double pad = tol * (1.0 + node.box.sizes().maxCoeff());
    if (p.x() < node.box.min().x() - pad || p.x() > node.box.max().x() + pad ||
        p.y() < node.box.min().y() - pad || p.y() > node.box.max().y() + pad)
    {
      continue;
    }
    if (node.left >= 0)
    {
      stack.push_back(node.left);
      stack.push_back(node.right);
      continue;
    }
    for (int i = node.begin; i < node.end; i++)
    {
      const int t = order_[i];
      const auto &tri = mesh_.triangles[t];
      const Point2 &a = mesh_.vertices[tri[0]], &b = mesh_.vertices[tri[1]],
                   &c = mesh_.vertices[tri[2]];
      const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
      const double l1 = ((p - a).x() * (c - a).y() - (p - a).y() * (c - a).x()) / det;
      const double l2 = ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / det;
      const double l0 = 1.0 - l1 - l2;
      const double score = std::min({l0, l1, l2});
      if (score >= -tol && score > best_score)
      {
        best_score = score;
        best = Hit{t, Eigen::Vector3d(l0, l1, l2)};
      }
    }
  }
  return best;
}

namespace region
{

RegionPredicate everywhere()
{
  return [](const Point2 &) { return true; };
}

RegionPredicate inside(double radius)
{
  return [radius](const Point2 &x) { return x.norm() < radius; };
}

RegionPredicate outside(double radius)
{
  return [radius](const Point2 &x) { return x.norm() > radius; };
}

RegionPredicate annulus(double inner, double outer)
{
  return [inner, outer](const Point2 &x)
  {
    const double r = x.norm();
    return r > inner && r < outer;
  };
}

}  // namespace region

void write_vtk(const Mesh &mesh, std::ostream &os)
{
  os << "# vtk DataFile Version 3.0\nnimlab mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os.precision(17);
  os << "POINTS " << mesh.NumVertices() << " double\n";
  for (const auto &v : mesh.vertices)
  {
    os << v.x() << ' ' << v.y() << " 0\n";
  }
  os << "CELLS " << mesh.NumTriangles() << ' ' << 4 * mesh.NumTriangles() << '\n';
  for (const auto &tri : mesh.triangles)
  {
    os << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  os << "CELL_TYPES " << mesh.NumTriangles() << '\n';
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    os << "5\n";
  }
  os << "CELL_DATA " << mesh.NumTriangles() << "\nSCALARS region_tag int 1\nLOOKUP_TABLE default\n";
  for (int tag : mesh.region_tag)
  {
    os << tag << '\n';
  }
  os << "SCALARS inclusion_tag int 1\nLOOKUP_TABLE default\n";
  for (int tag : mesh.inclusion_tag)
  {
    os << tag << '\n';
  }
}

}  // namespace nimlab
