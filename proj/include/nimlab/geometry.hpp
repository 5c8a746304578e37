// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_GEOMETRY_HPP
#define NIMLAB_GEOMETRY_HPP

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace nimlab
{

using Point2 = Eigen::Vector2d;

// Predicate on points; for element-wise queries it is evaluated at triangle centroids.
using RegionPredicate = std::function<bool(const Point2 &)>;

inline constexpr int kOuterBoundaryTag = 1;
inline constexpr int kNoInclusion = -1;

struct BoundaryEdge
{
  std::array<int, 2> vertices;
  int tag;
};

//
// Triangulation of the disk B_R conforming to a set of concentric circles.
//
// region_tag[t] is the index of the band containing triangle t: band 0 is the disk inside
// the first interface circle, band j the annulus between circles j-1 and j, and the last
// band reaches out to the boundary. inclusion_tag[t] is the index of the disk inclusion
// hosting t, or kNoInclusion.
//
struct Mesh
{
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> region_tag;
  std::vector<int> inclusion_tag;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<double> interface_circles;
  double outer_radius = 0.0;
  double h = 0.0;

  int NumVertices() const { return static_cast<int>(vertices.size()); }
  int NumTriangles() const { return static_cast<int>(triangles.size()); }
  Point2 Centroid(int t) const;
  double SignedArea(int t) const;
  double Diameter(int t) const;
  int NumBands() const { return static_cast<int>(interface_circles.size()) + 1; }
};

std::string InclusionName(int inclusion);

// Structured log-polar triangulation. Each band between consecutive circles receives
// round(log(b/a) N / 2pi) rings so elements stay close to isotropic; radial_grading > 1
// clusters rings towards both circles bounding each annular band.
Mesh build_annular_mesh(double outer_radius, const std::vector<double> &interface_radii,
                        int angular_count, double radial_grading = 1.0);

enum class HostSide
{
  Inside,
  Outside
};

struct DiskInclusion
{
  Point2 center;
  double radius;
  HostSide host;  // side of the circle through `center` that contains the object
};

// One level of red-green refinement around each inclusion, then tagging of the triangles
// whose centroid lies in the inclusion on its host side.
Mesh embed_disk_inclusions(const Mesh &mesh, const std::vector<DiskInclusion> &inclusions);

// Bounding-volume hierarchy over the triangles of a mesh for point location.
class PointLocator
{
public:
  struct Hit
  {
    int triangle;
    Eigen::Vector3d barycentric;
  };

  explicit PointLocator(const Mesh &mesh);
  std::optional<Hit> Locate(const Point2 &p) const;
  const Mesh &GetMesh() const { return mesh_; }

private:
  struct Node
  {
    Eigen::AlignedBox2d box;
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };
  int Build(int begin, int end);

  const Mesh &mesh_;
  std::vector<int> order_;
  std::vector<Eigen::AlignedBox2d> boxes_;
  std::vector<Node> nodes_;
};

namespace region
{
RegionPredicate everywhere();
RegionPredicate inside(double radius);
RegionPredicate outside(double radius);
RegionPredicate annulus(double inner, double outer);
}  // namespace region

void write_vtk(const Mesh &mesh, std::ostream &os);

}  // namespace nimlab

#endif  // NIMLAB_GEOMETRY_HPP
