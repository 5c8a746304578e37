// SPDX-License-Identifier: Apache-2.0

#include "nimlab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <Eigen/SparseLU>
#include "nimlab/errors.hpp"
#include "nimlab/quadrature.hpp"
#include "nimlab/report.hpp"

namespace nimlab
{

namespace
{

struct ElementGeometry
{
  Point2 p[3];
  double area;
  Eigen::Matrix<double, 2, 3> grad;  // columns: gradients of the barycentric coordinates
};

ElementGeometry Element(const Mesh &mesh, int t)
{
  ElementGeometry g;
  const auto &tri = mesh.triangles[t];
  for (int i = 0; i < 3; i++)
  {
    g.p[i] = mesh.vertices[tri[i]];
  }
  const Point2 e1 = g.p[1] - g.p[0], e2 = g.p[2] - g.p[0];
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  g.area = 0.5 * det;
  g.grad.col(1) = Eigen::Vector2d(e2.y(), -e2.x()) / det;
  g.grad.col(2) = Eigen::Vector2d(-e1.y(), e1.x()) / det;
  g.grad.col(0) = -g.grad.col(1) - g.grad.col(2);
  return g;
}

void CheckSameMesh(const ComplexNodalField &a, const ComplexNodalField &b)
{
  if (a.mesh != b.mesh)
  {
    throw InvalidInput("fields live on different meshes");
  }
}

}  // namespace

ComplexNodalField::ComplexNodalField(std::shared_ptr<const Mesh> m, ComplexVector v)
  : mesh(std::move(m)), values(std::move(v))
{
  if (!mesh || values.size() != mesh->NumVertices())
  {
    throw InvalidInput("nodal field length does not match the mesh");
  }
}

ComplexNodalField ComplexNodalField::Zero(std::shared_ptr<const Mesh> m)
{
  const int n = m->NumVertices();
  return {std::move(m), ComplexVector::Zero(n)};
}

ComplexNodalField ComplexNodalField::Interpolate(std::shared_ptr<const Mesh> m, const ScalarField &f)
{
  ComplexVector v(m->NumVertices());
  for (int i = 0; i < m->NumVertices(); i++)
  {
    v[i] = f(m->vertices[i]);
  }
  return {std::move(m), std::move(v)};
}

ComplexNodalField operator-(const ComplexNodalField &a, const ComplexNodalField &b)
{
  CheckSameMesh(a, b);
  return {a.mesh, a.values - b.values};
}

ComplexNodalField operator+(const ComplexNodalField &a, const ComplexNodalField &b)
{
  CheckSameMesh(a, b);
  return {a.mesh, a.values + b.values};
}

std::vector<int> classify_elements(const Mesh &mesh, const Medium &medium)
{
  std::vector<int> cls(mesh.NumTriangles());
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    cls[t] = medium.Locate(mesh.Centroid(t));
    if (cls[t] < 0)
    {
      throw InvalidInput("medium does not cover element " + std::to_string(t));
    }
  }
  return cls;
}

LinearSystem assemble(std::shared_ptr<const Mesh> mesh_ptr, const Medium &medium, double delta,
                      double k, const SourceTerm *f, BoundaryKind boundary,
                      const AssemblyOptions &options)
{
  const Mesh &mesh = *mesh_ptr;
  if (medium.dimension != 2)
  {
    throw InvalidInput("the finite element solver is two-dimensional");
  }
  if (medium.HasLens() && !(delta > 0.0))
  {
    throw InvalidInput("loss parameter delta must be positive when lens regions are present");
  }
  const std::vector<int> cls = classify_elements(mesh, medium);
  {
    std::vector<int> counts(medium.regions.size(), 0);
    for (int c : cls)
    {
      counts[c]++;
    }
    for (std::size_t r = 0; r < medium.regions.size(); r++)
    {
      if (medium.regions[r].must_be_meshed && counts[r] == 0)
      {
        throw InvalidInput("region '" + medium.regions[r].name +
                           "' is referenced by the medium but not resolved by the mesh");
      }
    }
  }

  const int n = mesh.NumVertices();
  const double k2 = k * k;
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(9 * static_cast<std::size_t>(mesh.NumTriangles()) + 4 * mesh.boundary_edges.size());
  ComplexVector rhs = ComplexVector::Zero(n);
  const TriangleRule &source_rule = triangle_rule(4);

  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    if (options.only_region >= 0 && cls[t] != options.only_region)
    {
      continue;
    }
    const Region &region = medium.regions[cls[t]];
    const ElementGeometry g = Element(mesh, t);
    const Complex s = Medium::SignFactor(region.sign, delta);
    const TriangleRule &rule = triangle_rule(region.quadrature_degree);
    Eigen::Matrix3cd ke = Eigen::Matrix3cd::Zero();
    for (std::size_t q = 0; q < rule.weights.size(); q++)
    {
      const Eigen::Vector3d &lam = rule.barycentric[q];
      const Point2 x = lam[0] * g.p[0] + lam[1] * g.p[1] + lam[2] * g.p[2];
      const double w = rule.weights[q] * g.area;
      if (options.include_stiffness)
      {
        const Eigen::Matrix3d stiff = g.grad.transpose() * region.a(x) * g.grad;
        ke += (w * s) * stiff.cast<Complex>();
      }
      if (options.include_mass && k2 != 0.0)
      {
        ke -= (w * k2 * s * region.sigma(x)) * (lam * lam.transpose()).cast<Complex>();
      }
    }
    const auto &tri = mesh.triangles[t];
    for (int i = 0; i < 3; i++)
    {
      for (int j = 0; j < 3; j++)
      {
        triplets.emplace_back(tri[i], tri[j], ke(i, j));
      }
    }
    if (f)
    {
      const double rmax = std::max({g.p[0].norm(), g.p[1].norm(), g.p[2].norm()});
      if (rmax < f->support_min_radius)
      {
        continue;
      }
      for (std::size_t q = 0; q < source_rule.weights.size(); q++)
      {
        const Eigen::Vector3d &lam = source_rule.barycentric[q];
        const Point2 x = lam[0] * g.p[0] + lam[1] * g.p[1] + lam[2] * g.p[2];
        const Complex fx = f->value(x) * (source_rule.weights[q] * g.area);
        for (int i = 0; i < 3; i++)
        {
          rhs[tri[i]] -= fx * lam[i];
        }
      }
    }
  }

  if (boundary == BoundaryKind::Absorbing && options.only_region < 0)
  {
    const Complex ik(0.0, k);
    for (const auto &edge : mesh.boundary_edges)
    {
      const double len = (mesh.vertices[edge.vertices[0]] - mesh.vertices[edge.vertices[1]]).norm();
      const int a = edge.vertices[0], b = edge.vertices[1];
      triplets.emplace_back(a, a, -ik * (len / 3.0));
      triplets.emplace_back(b, b, -ik * (len / 3.0));
      triplets.emplace_back(a, b, -ik * (len / 6.0));
      triplets.emplace_back(b, a, -ik * (len / 6.0));
    }
  }

  LinearSystem system;
  system.mesh = mesh_ptr;
  system.boundary = boundary;
  system.matrix.resize(n, n);
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.rhs = std::move(rhs);

  if (boundary == BoundaryKind::Dirichlet)
  {
    std::vector<char> fixed(n, 0);
    for (const auto &edge : mesh.boundary_edges)
    {
      fixed[edge.vertices[0]] = 1;
      fixed[edge.vertices[1]] = 1;
    }
    for (int i = 0; i < n; i++)
    {
      if (fixed[i])
      {
        system.constrained.push_back(i);
      }
    }
    system.matrix.prune([&fixed](const int &row, const int &col, const Complex &)
                        { return !(fixed[row] || fixed[col]); });
    for (int i : system.constrained)
    {
      system.matrix.coeffRef(i, i) = 1.0;
      system.rhs[i] = 0.0;
    }
  }
  system.matrix.makeCompressed();
  return system;
}

ComplexNodalField solve(const LinearSystem &system, SolveReport *report)
{
  const Eigen::SparseMatrix<Complex> a = system.matrix;
  const ComplexVector &b = system.rhs;
  const double bnorm = b.norm();
  SolveReport local;
  if (bnorm == 0.0)
  {
    if (report)
    {
      *report = local;
    }
    return ComplexNodalField::Zero(system.mesh);
  }
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
  {
    throw SolverError("sparse LU factorization breakdown: " + lu.lastErrorMessage());
  }
  ComplexVector x = lu.solve(b);
  ComplexVector r = b - a * x;
  local.relative_residual = r.norm() / bnorm;
  while (local.relative_residual > 1e-13 && local.refinement_steps < 3)
  {
    x += lu.solve(r);
    r = b - a * x;
    local.refinement_steps++;
    local.relative_residual = r.norm() / bnorm;
  }
  if (!x.allFinite())
  {
    throw SolverError("solution contains non-finite values; log|det| = " +
                      format_double(std::real(lu.logAbsDeterminant())));
  }
  if (local.relative_residual > 1e-10)
  {
    throw SolverError("relative residual " + format_double(local.relative_residual) +
                      " exceeds 1e-10 after iterative refinement; log|det| = " +
                      format_double(std::real(lu.logAbsDeterminant())));
  }
  if (report)
  {
    *report = local;
  }
  return {system.mesh, std::move(x)};
}

std::string to_string(NormKind kind)
{
  switch (kind)
  {
    case NormKind::L2:
      return "L2";
    case NormKind::H1:
      return "H1";
    case NormKind::H1Semi:
      return "H1-semi";
  }
  return "unknown";
}

double subdomain_norm(const ComplexNodalField &field, const RegionPredicate &region, NormKind kind)
{
  const Mesh &mesh = *field.mesh;
  double l2 = 0.0, semi = 0.0;
  int used = 0;
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    if (!region(mesh.Centroid(t)))
    {
      continue;
    }
    used++;
    const ElementGeometry g = Element(mesh, t);
    const auto &tri = mesh.triangles[t];
    const Eigen::Vector3cd u(field.values[tri[0]], field.values[tri[1]], field.values[tri[2]]);
    if (kind != NormKind::H1Semi)
    {
      l2 += g.area / 12.0 * (u.squaredNorm() + std::norm(u.sum()));
    }
    if (kind != NormKind::L2)
    {
      const Eigen::Vector2cd grad = g.grad.cast<Complex>() * u;
      semi += g.area * grad.squaredNorm();
    }
  }
  if (used == 0)
  {
    throw InvalidInput("norm region matches no elements");
  }
  return std::sqrt(l2 + semi);
}

Complex integrate_against(const ComplexNodalField &u, const ScalarField &g_field,
                          const RegionPredicate &region)
{
  const Mesh &mesh = *u.mesh;
  const TriangleRule &rule = triangle_rule(4);
  Complex sum = 0.0;
  for (int t = 0; t < mesh.NumTriangles(); t++)
  {
    if (!region(mesh.Centroid(t)))
    {
      continue;
    }
    const ElementGeometry g = Element(mesh, t);
    const auto &tri = mesh.triangles[t];
    for (std::size_t q = 0; q < rule.weights.size(); q++)
    {
      const Eigen::Vector3d &lam = rule.barycentric[q];
      const Point2 x = lam[0] * g.p[0] + lam[1] * g.p[1] + lam[2] * g.p[2];
      const Complex ux =
          lam[0] * u.values[tri[0]] + lam[1] * u.values[tri[1]] + lam[2] * u.values[tri[2]];
      sum += rule.weights[q] * g.area * g_field(x) * std::conj(ux);
    }
  }
  return sum;
}

std::vector<StabilityPoint> stability_ratio(std::shared_ptr<const Mesh> mesh, const Medium &medium,
                                            const std::vector<double> &deltas, const SourceTerm &f,
                                            double k, BoundaryKind boundary)
{
  for (std::size_t i = 0; i < deltas.size(); i++)
  {
    if (!(deltas[i] > 0.0) || (i > 0 && !(deltas[i] < deltas[i - 1])))
    {
      throw InvalidInput("stability sweep needs positive, decreasing delta values");
    }
  }
  std::vector<StabilityPoint> out;
  const auto near_support = region::outside(f.support_min_radius - mesh->h);
  for (double delta : deltas)
  {
    const ComplexNodalField u = solve(assemble(mesh, medium, delta, k, &f, boundary));
    const double h1 = subdomain_norm(u, region::everywhere(), NormKind::H1);
    const double pairing = std::abs(integrate_against(u, f.value, near_support));
    if (pairing < 1e-14)
    {
      out.push_back({delta, 0.0, true});
      continue;
    }
    out.push_back({delta, h1 * h1 * delta / pairing, false});
  }
  return out;
}

void write_vtk(const ComplexNodalField &field, std::ostream &os, const std::string &name)
{
  write_vtk(*field.mesh, os);
  os << "POINT_DATA " << field.values.size() << '\n';
  const char *parts[] = {"_real", "_imag", "_abs"};
  for (int p = 0; p < 3; p++)
  {
    os << "SCALARS " << name << parts[p] << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < field.values.size(); i++)
    {
      const Complex v = field.values[i];
      os << format_double(p == 0 ? v.real() : (p == 1 ? v.imag() : std::abs(v))) << '\n';
    }
  }
}

void write_norm_csv(const std::vector<NormRecord> &records, std::ostream &os)
{
  os << "delta,norm_kind,region,value\n";
  for (const auto &r : records)
  {
    os << format_double(r.delta) << ',' << to_string(r.kind) << ',' << r.region << ','
       << format_double(r.value) << '\n';
  }
}

}  // namespace nimlab
