// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_MAXWELL_HPP
#define NIMLAB_MAXWELL_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace nimlab
{

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

//
// Lorentz pole omega_p^2 / (omega_0^2 - omega^2 - 2 i gamma omega). In the time domain the
// susceptibility is sqrt(2 pi) theta(t) omega_p^2 sin(nu t)/nu exp(-gamma t), nu^2 =
// omega_0^2 - gamma^2 (sinh branch when gamma > omega_0).
//
struct LorentzPole
{
  double omega_p = 1.0;
  double omega_0 = 1.0;
  double gamma = 0.0;

  // sqrt(2 pi) omega_p^2, the forcing coefficient of the auxiliary oscillator.
  double Kappa() const;
  void Validate() const;
};

using PoleList = std::vector<LorentzPole>;

std::complex<double> chi_freq_scalar(const PoleList &poles, double omega);
Eigen::Matrix3cd chi_freq(const PoleList &poles, double omega);
double chi_time_scalar(const PoleList &poles, double t);
Matrix3 chi_time(const PoleList &poles, double t);
// lambda = chi' (a bounded function; the jump at t = 0 is of chi', not a delta).
double lambda_time_scalar(const PoleList &poles, double t);
std::complex<double> lambda_freq_scalar(const PoleList &poles, double omega);

struct PassivityReport
{
  bool pass = true;
  double min_value = 0.0;  // min over the grid of the Hermitian-part eigenvalue of lambda-hat
  double worst_omega = 0.0;
  std::string worst_block;
};

// Block-diagonal kernels: Re lambda-hat_ee, Re lambda-hat_mm >= -1e-12 on the grid.
PassivityReport passivity_check(const PoleList &poles_e, const PoleList &poles_m,
                                const std::vector<double> &omegas);

using KernelMatrix = Eigen::Matrix<std::complex<double>, 6, 6>;

// General (bi-anisotropic) kernels: the Hermitian part of lambda-hat(omega) must be positive
// semidefinite.
PassivityReport passivity_check(const std::function<KernelMatrix(double)> &lambda_hat,
                                const std::vector<double> &omegas);

//
// int_0^T <(lambda * v)(s), v(s)> ds for the piecewise-linear interpolant of the samples
// v(n dt) (rows: time samples, columns: field components), integrated exactly.
//
double convolution_positivity_test(const PoleList &poles, const Eigen::MatrixXd &v, double dt);

// Same pairing by the trapezoidal rule in both time variables.
double convolution_pairing_trapezoid(const PoleList &poles, const Eigen::MatrixXd &v, double dt);

// Single-point auxiliary oscillator P'' + 2 gamma P' + omega_0^2 P = kappa E, J = P',
// advanced with the same staggered scheme as the grid: J at half steps, P with E at integer
// steps. J reproduces lambda * E.
class LorentzAde
{
public:
  LorentzAde(const LorentzPole &pole, double dt);
  double Step(double e_n);  // returns J^{n+1/2}; P advances to n+1
  double P() const { return p_; }
  double J() const { return j_; }

private:
  double kappa_, omega2_, decay_, gain_, dt_;
  double p_ = 0.0, j_ = 0.0;
};

// Effective permittivity eps + kappa / (omega_0^2 - Omega^2 - 2 i gamma cos(omega dt/2) Omega)
// of the time-discrete scheme, Omega = 2 sin(omega dt / 2) / dt.
std::complex<double> discrete_effective_permittivity(const PoleList &poles, double eps_rel,
                                                     double omega, double dt);

enum class GridBoundary
{
  Periodic,
  Pec
};

enum class Component
{
  Ex,
  Ey,
  Ez,
  Hx,
  Hy,
  Hz
};

// Yee grid: E components on cell edges, H on cell faces, cell (i, j, k) at origin i h.
struct YeeGrid
{
  int nx = 0, ny = 0, nz = 0;
  double h = 1.0;
  GridBoundary boundary = GridBoundary::Periodic;

  std::size_t Size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t Index(int i, int j, int k) const
  {
    return (static_cast<std::size_t>(i) * ny + j) * nz + k;
  }
  Vector3 Position(Component c, int i, int j, int k) const;
  double CellVolume() const { return h * h * h; }
};

using MatrixField3 = std::function<Matrix3(const Vector3 &)>;

struct EMMaterials
{
  MatrixField3 eps_rel;
  MatrixField3 mu_rel;
  PoleList electric;
  PoleList magnetic;
  std::function<bool(const Vector3 &)> dispersive;  // where the poles act; empty = everywhere

  static EMMaterials Vacuum();
  static EMMaterials Uniform(double eps, double mu, PoleList electric, PoleList magnetic);
};

struct EllipticityBounds
{
  double eps_min, eps_max, mu_min, mu_max;
  double c_max;  // max over the grid of gamma_e gamma_m
};

EllipticityBounds material_bounds(const YeeGrid &grid, const EMMaterials &materials);

struct GridVector
{
  std::array<std::vector<double>, 3> c;

  void Resize(std::size_t n) { for (auto &v : c) v.assign(n, 0.0); }
};

using VectorField3 = std::function<Vector3(const Vector3 &)>;

// Current density of the form weight * waveform(t) on selected grid locations of one
// component. Electric components enter the E equation, magnetic ones the H equation.
struct CurrentSource
{
  Component component = Component::Ez;
  std::vector<std::array<int, 3>> cells;
  std::vector<double> weights;
  std::function<double(double)> waveform;
};

struct EMState
{
  YeeGrid grid;
  double dt = 0.0;
  long step = 0;
  // E, P, M at t = step dt; H, J, K at t = (step - 1/2) dt.
  GridVector E, H;
  std::vector<GridVector> P, J, M, K;
  GridVector eps, mu;  // diagonal of eps_rel, mu_rel at the component locations
  std::array<std::vector<std::uint8_t>, 3> dispersive_e, dispersive_m;
  PoleList electric, magnetic;
  // Modified energy W^{n+1/2} = <x^n, x^{n+1}> + |y^{n+1/2}|^2 (weighted), where x = (E, P, M)
  // and y = (H, J, K); conserved without loss and sources, non-increasing with loss.
  double discrete_energy = 0.0;

  double Time() const { return step * dt; }
};

double max_stable_dt(const YeeGrid &grid, const EMMaterials &materials, double cfl = 0.95);

EMState fdtd_init(const YeeGrid &grid, const EMMaterials &materials, const VectorField3 &E0,
                  const VectorField3 &H0, double dt);

void fdtd_step(EMState &state, const std::vector<CurrentSource> &sources = {});

// <M u, u> = sum (eps |E|^2 + mu |H|^2) h^3.
double energy(const EMState &state);

// ||f(t)|| in L^2 for the given sources.
double source_norm(const std::vector<CurrentSource> &sources, double t, double h);

double component_value(const EMState &state, Component c, int i, int j, int k);

struct LightCone
{
  Vector3 center;
  double radius;
  double speed;
};

// c_{a,R} = sup over grid locations in B(a, R) of gamma_e gamma_m.
LightCone make_light_cone(const YeeGrid &grid, const EMMaterials &materials, const Vector3 &center,
                          double radius);

struct ConeSample
{
  double t;
  double inside_max;  // max |u| over locations in B(a, R - c t - margin)
  double global_max;
};

ConeSample sample_light_cone(const EMState &state, const LightCone &cone, double margin);

struct CertificateResult
{
  bool certified = false;
  bool hypotheses_hold = true;
  double max_violation = 0.0;  // max over samples of inside_max / global_max
  std::string message;
};

//
// history[0] must be the initial state sampled with zero margin (t = 0); sources lists the
// forcing, whose support must stay outside B(a, R).
//
CertificateResult light_cone_certificate(const std::vector<ConeSample> &history,
                                         const LightCone &cone, double threshold,
                                         const EMState &initial_layout,
                                         const std::vector<CurrentSource> &sources = {});

void write_probe_header(std::ostream &os);
void write_probe_row(std::ostream &os, const EMState &state, int i, int j, int k);
void write_energy_header(std::ostream &os);
void write_energy_row(std::ostream &os, double t, double energy, double bound);
void write_vtk(const EMState &state, std::ostream &os);

}  // namespace nimlab

#endif  // NIMLAB_MAXWELL_HPP
