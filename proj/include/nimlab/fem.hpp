// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_FEM_HPP
#define NIMLAB_FEM_HPP

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>
#include <Eigen/Sparse>
#include "nimlab/geometry.hpp"
#include "nimlab/media.hpp"

namespace nimlab
{

using ComplexVector = Eigen::VectorXcd;
using SparseMatrixRow = Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>;

struct ComplexNodalField
{
  std::shared_ptr<const Mesh> mesh;
  ComplexVector values;

  ComplexNodalField() = default;
  ComplexNodalField(std::shared_ptr<const Mesh> m, ComplexVector v);
  static ComplexNodalField Zero(std::shared_ptr<const Mesh> m);
  static ComplexNodalField Interpolate(std::shared_ptr<const Mesh> m, const ScalarField &f);
};

ComplexNodalField operator-(const ComplexNodalField &a, const ComplexNodalField &b);
ComplexNodalField operator+(const ComplexNodalField &a, const ComplexNodalField &b);

enum class BoundaryKind
{
  Dirichlet,  // u = 0 on the outer circle
  Absorbing   // d_r u - i k u = 0 on the outer circle
};

//
// Sign convention: the system represents div(s A grad u) + k^2 s Sigma u = f in weak form,
//   sum_T int_T s A grad phi_j . grad phi_i - k^2 s Sigma phi_j phi_i
//     - i k int_{dOmega} phi_j phi_i          (absorbing only)
//   = - int f phi_i,
// which is complex symmetric (not Hermitian).
//
struct LinearSystem
{
  std::shared_ptr<const Mesh> mesh;
  SparseMatrixRow matrix;
  ComplexVector rhs;
  BoundaryKind boundary = BoundaryKind::Dirichlet;
  std::vector<int> constrained;  // vertices eliminated by the Dirichlet condition
};

struct AssemblyOptions
{
  bool include_stiffness = true;
  bool include_mass = true;
  // Restrict assembly to the elements of one medium region (index into Medium::regions).
  int only_region = -1;
};

LinearSystem assemble(std::shared_ptr<const Mesh> mesh, const Medium &medium, double delta,
                      double k, const SourceTerm *f, BoundaryKind boundary,
                      const AssemblyOptions &options = {});

// Region index per triangle, evaluated at centroids.
std::vector<int> classify_elements(const Mesh &mesh, const Medium &medium);

struct SolveReport
{
  double relative_residual = 0.0;
  int refinement_steps = 0;
};

ComplexNodalField solve(const LinearSystem &system, SolveReport *report = nullptr);

enum class NormKind
{
  L2,
  H1,
  H1Semi
};

std::string to_string(NormKind kind);

double subdomain_norm(const ComplexNodalField &field, const RegionPredicate &region, NormKind kind);

// Elementwise quadrature of int_region conj(u) * g (used for source pairings).
Complex integrate_against(const ComplexNodalField &u, const ScalarField &g,
                          const RegionPredicate &region);

struct StabilityPoint
{
  double delta;
  double ratio;  // ||u||_{H1}^2 delta / |int f conj(u)|
  bool skipped;  // pairing below 1e-14
};

std::vector<StabilityPoint> stability_ratio(std::shared_ptr<const Mesh> mesh, const Medium &medium,
                                            const std::vector<double> &deltas, const SourceTerm &f,
                                            double k = 0.0,
                                            BoundaryKind boundary = BoundaryKind::Dirichlet);

void write_vtk(const ComplexNodalField &field, std::ostream &os, const std::string &name = "u");

struct NormRecord
{
  double delta;
  NormKind kind;
  std::string region;
  double value;
};

void write_norm_csv(const std::vector<NormRecord> &records, std::ostream &os);

}  // namespace nimlab

#endif  // NIMLAB_FEM_HPP
