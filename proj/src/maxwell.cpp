// SPDX-License-Identifier: Apache-2.0

#include "nimlab/maxwell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <unsupported/Eigen/MatrixFunctions>
#include "nimlab/errors.hpp"
#include "nimlab/report.hpp"

namespace nimlab
{

namespace
{

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

// e^{-gamma t} sin(nu t) / nu and its t-derivative, with the sinh / linear branches.
struct PoleKernel
{
  double g, dg;
};

PoleKernel Kernel(const LorentzPole &p, double t)
{
  const double nu2 = p.omega_0 * p.omega_0 - p.gamma * p.gamma;
  const double decay = std::exp(-p.gamma * t);
  double s, c;  // sin(nu t)/nu and cos(nu t) (or hyperbolic analogues)
  if (nu2 > 0.0)
  {
    const double nu = std::sqrt(nu2);
    s = std::sin(nu * t) / nu;
    c = std::cos(nu * t);
  }
  else if (nu2 < 0.0)
  {
    const double mu = std::sqrt(-nu2);
    s = std::sinh(mu * t) / mu;
    c = std::cosh(mu * t);
  }
  else
  {
    s = t;
    c = 1.0;
  }
  return {decay * s, decay * (c - p.gamma * s)};
}

bool IsElectric(Component c)
{
  return c == Component::Ex || c == Component::Ey || c == Component::Ez;
}

int Axis(Component c)
{
  return static_cast<int>(c) % 3;
}

// Per-axis neighbour tables; -1 marks a zero (perfect conductor) ghost value.
struct Neighbours
{
  std::vector<int> plus, minus;
};

Neighbours MakeNeighbours(int n, GridBoundary boundary)
{
  Neighbours nb;
  nb.plus.resize(n);
  nb.minus.resize(n);
  for (int i = 0; i < n; i++)
  {
    if (boundary == GridBoundary::Periodic)
    {
      nb.plus[i] = (i + 1) % n;
      nb.minus[i] = (i + n - 1) % n;
    }
    else
    {
      nb.plus[i] = i + 1 < n ? i + 1 : -1;
      nb.minus[i] = i - 1;
    }
  }
  return nb;
}

double Distance(const YeeGrid &grid, const Vector3 &x, const Vector3 &a)
{
  Vector3 d = x - a;
  if (grid.boundary == GridBoundary::Periodic)
  {
    const Vector3 len(grid.nx * grid.h, grid.ny * grid.h, grid.nz * grid.h);
    for (int q = 0; q < 3; q++)
    {
      d[q] -= len[q] * std::round(d[q] / len[q]);
    }
  }
  return d.norm();
}

double MinEigenvalue(const Matrix3 &m)
{
  Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

double MaxEigenvalue(const Matrix3 &m)
{
  Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[2];
}

void CheckMaterials(const EMMaterials &materials)
{
  if (!materials.eps_rel || !materials.mu_rel)
  {
    throw InvalidInput("materials need eps_rel and mu_rel");
  }
  for (const auto &p : materials.electric)
  {
    p.Validate();
  }
  for (const auto &p : materials.magnetic)
  {
    p.Validate();
  }
}

double PoleStiffness(const PoleList &poles, double coercivity)
{
  double kappa_sum = 0.0, omega_max = 0.0;
  for (const auto &p : poles)
  {
    kappa_sum += p.Kappa();
    omega_max = std::max(omega_max, p.omega_0 * p.omega_0);
  }
  return kappa_sum / coercivity + omega_max;
}

// dt^2 (12 c^2 / h^2 + sum kappa / eps_min + max omega_0^2) < 4 keeps the modified energy
// positive definite.
double StiffnessBound(const YeeGrid &grid, const EMMaterials &materials, const EllipticityBounds &b)
{
  return 12.0 * b.c_max * b.c_max / (grid.h * grid.h) +
         std::max(PoleStiffness(materials.electric, b.eps_min),
                  PoleStiffness(materials.magnetic, b.mu_min));
}

}  // namespace

double LorentzPole::Kappa() const
{
  return kSqrt2Pi * omega_p * omega_p;
}

void LorentzPole::Validate() const
{
  if (!(omega_p >= 0.0) || !(omega_0 > 0.0) || !(gamma >= 0.0) || !std::isfinite(omega_p) ||
      !std::isfinite(omega_0) || !std::isfinite(gamma))
  {
    throw InvalidInput("Lorentz pole needs omega_p >= 0, omega_0 > 0, gamma >= 0");
  }
}

std::complex<double> chi_freq_scalar(const PoleList &poles, double omega)
{
  std::complex<double> chi = 0.0;
  for (const auto &p : poles)
  {
    const std::complex<double> denom(p.omega_0 * p.omega_0 - omega * omega,
                                     -2.0 * p.gamma * omega);
    if (std::abs(denom) == 0.0)
    {
      throw InvalidInput("undamped pole evaluated at its resonance frequency");
    }
    chi += p.omega_p * p.omega_p / denom;
  }
  return chi;
}

Eigen::Matrix3cd chi_freq(const PoleList &poles, double omega)
{
  return chi_freq_scalar(poles, omega) * Eigen::Matrix3cd::Identity();
}

double chi_time_scalar(const PoleList &poles, double t)
{
  if (!(t > 0.0))
  {
    return 0.0;
  }
  double chi = 0.0;
  for (const auto &p : poles)
  {
    chi += p.Kappa() * Kernel(p, t).g;
  }
  return chi;
}

Matrix3 chi_time(const PoleList &poles, double t)
{
  return chi_time_scalar(poles, t) * Matrix3::Identity();
}

double lambda_time_scalar(const PoleList &poles, double t)
{
  if (t < 0.0)
  {
    return 0.0;
  }
  double lambda = 0.0;
  for (const auto &p : poles)
  {
    lambda += p.Kappa() * Kernel(p, t).dg;
  }
  return lambda;
}

std::complex<double> lambda_freq_scalar(const PoleList &poles, double omega)
{
  return std::complex<double>(0.0, -omega) * chi_freq_scalar(poles, omega);
}

PassivityReport passivity_check(const PoleList &poles_e, const PoleList &poles_m,
                                const std::vector<double> &omegas)
{
  PassivityReport report;
  report.min_value = std::numeric_limits<double>::infinity();
  for (double w : omegas)
  {
    const std::pair<const PoleList *, const char *> blocks[] = {{&poles_e, "electric"},
                                                                {&poles_m, "magnetic"}};
    for (const auto &[poles, name] : blocks)
    {
      // Re lambda-hat = omega Im chi-hat; written without the cancellation-prone product.
      double value = 0.0;
      for (const auto &p : *poles)
      {
        const double re = p.omega_0 * p.omega_0 - w * w, im = 2.0 * p.gamma * w;
        const double mag2 = re * re + im * im;
        if (mag2 == 0.0)
        {
          continue;  // undamped resonance; Re lambda-hat is zero on both sides
        }
        value += w * im * p.omega_p * p.omega_p / mag2;
      }
      if (value < report.min_value)
      {
        report.min_value = value;
        report.worst_omega = w;
        report.worst_block = name;
      }
    }
  }
  if (omegas.empty())
  {
    report.min_value = 0.0;
  }
  report.pass = report.min_value >= -1e-12;
  return report;
}

PassivityReport passivity_check(const std::function<KernelMatrix(double)> &lambda_hat,
                                const std::vector<double> &omegas)
{
  PassivityReport report;
  report.min_value = std::numeric_limits<double>::infinity();
  for (double w : omegas)
  {
    const KernelMatrix l = lambda_hat(w);
    const KernelMatrix herm = 0.5 * (l + l.adjoint());
    Eigen::SelfAdjointEigenSolver<KernelMatrix> es(herm, Eigen::EigenvaluesOnly);
    const double value = es.eigenvalues()[0];
    if (value < report.min_value)
    {
      report.min_value = value;
      report.worst_omega = w;
      report.worst_block = "full";
    }
  }
  if (omegas.empty())
  {
    report.min_value = 0.0;
  }
  report.pass = report.min_value >= -1e-12;
  return report;
}

double convolution_positivity_test(const PoleList &poles, const Eigen::MatrixXd &v, double dt)
{
  if (!(dt > 0.0))
  {
    throw InvalidInput("time step must be positive");
  }
  const long steps = v.rows() - 1;
  if (steps < 1)
  {
    return 0.0;
  }
  double total = 0.0;
  for (const auto &p : poles)
  {
    p.Validate();
    const double w2 = p.omega_0 * p.omega_0, g = p.gamma, kappa = p.Kappa();
    Eigen::Matrix2d A;
    A << 0.0, 1.0, -w2, -2.0 * g;
    Eigen::Matrix2d Ainv;
    Ainv << -2.0 * g, -1.0, w2, 0.0;
    Ainv /= w2;

    // exp of [[A, I, 0], [0, 0, I], [0, 0, 0]] dt gives e^{A dt}, int e^{As} and
    // int e^{A(dt - s)} s ds.
    Eigen::Matrix<double, 6, 6> big = Eigen::Matrix<double, 6, 6>::Zero();
    big.block<2, 2>(0, 0) = A;
    big.block<2, 2>(0, 2).setIdentity();
    big.block<2, 2>(2, 4).setIdentity();
    const Eigen::Matrix<double, 6, 6> ex = (big * dt).exp();
    const Eigen::Matrix2d prop = ex.block<2, 2>(0, 0);
    const Eigen::Matrix2d phi0 = ex.block<2, 2>(0, 2);
    const Eigen::Matrix2d phi1 = dt * phi0 - ex.block<2, 2>(0, 4);

    for (Eigen::Index comp = 0; comp < v.cols(); comp++)
    {
      Eigen::Vector2d x = Eigen::Vector2d::Zero();  // (P, J)
      for (long n = 0; n < steps; n++)
      {
        const double v0 = v(n, comp), sl = (v(n + 1, comp) - v(n, comp)) / dt;
        const Eigen::Vector2d c1 = -Ainv * Eigen::Vector2d(0.0, kappa * sl);
        const Eigen::Vector2d c0 = Ainv * (c1 - Eigen::Vector2d(0.0, kappa * v0));
        const Eigen::Vector2d h0 = x - c0;
        total += c0[1] * v0 * dt + (c0[1] * sl + c1[1] * v0) * dt * dt / 2.0 +
                 c1[1] * sl * dt * dt * dt / 3.0;
        total += (v0 * phi0 + sl * phi1).row(1).dot(h0);
        x = prop * h0 + c0 + c1 * dt;
      }
    }
  }
  return total;
}

double convolution_pairing_trapezoid(const PoleList &poles, const Eigen::MatrixXd &v, double dt)
{
  const long n_samples = v.rows();
  if (n_samples < 2)
  {
    return 0.0;
  }
  std::vector<double> lambda(n_samples);
  for (long n = 0; n < n_samples; n++)
  {
    lambda[n] = lambda_time_scalar(poles, n * dt);
  }
  double total = 0.0;
  for (Eigen::Index comp = 0; comp < v.cols(); comp++)
  {
    for (long n = 0; n < n_samples; n++)
    {
      double conv = 0.0;
      for (long m = 0; m <= n; m++)
      {
        const double w = (m == 0 || m == n) ? 0.5 : 1.0;
        conv += w * lambda[n - m] * v(m, comp);
      }
      conv *= n > 0 ? dt : 0.0;
      const double outer = (n == 0 || n == n_samples - 1) ? 0.5 : 1.0;
      total += outer * dt * conv * v(n, comp);
    }
  }
  return total;
}

LorentzAde::LorentzAde(const LorentzPole &pole, double dt)
  : kappa_(pole.Kappa()), omega2_(pole.omega_0 * pole.omega_0),
    decay_((1.0 - pole.gamma * dt) / (1.0 + pole.gamma * dt)), gain_(dt / (1.0 + pole.gamma * dt)),
    dt_(dt)
{
  pole.Validate();
}

double LorentzAde::Step(double e_n)
{
  j_ = decay_ * j_ + gain_ * (kappa_ * e_n - omega2_ * p_);
  p_ += dt_ * j_;
  return j_;
}

std::complex<double> discrete_effective_permittivity(const PoleList &poles, double eps_rel,
                                                     double omega, double dt)
{
  const double big_omega = 2.0 * std::sin(0.5 * omega * dt) / dt;
  const double c = std::cos(0.5 * omega * dt);
  std::complex<double> eps = eps_rel;
  for (const auto &p : poles)
  {
    eps += p.Kappa() / std::complex<double>(p.omega_0 * p.omega_0 - big_omega * big_omega,
                                            -2.0 * p.gamma * c * big_omega);
  }
  return eps;
}

Vector3 YeeGrid::Position(Component c, int i, int j, int k) const
{
  Vector3 x(i, j, k);
  switch (c)
  {
    case Component::Ex:
      x[0] += 0.5;
      break;
    case Component::Ey:
      x[1] += 0.5;
      break;
    case Component::Ez:
      x[2] += 0.5;
      break;
    case Component::Hx:
      x[1] += 0.5;
      x[2] += 0.5;
      break;
    case Component::Hy:
      x[0] += 0.5;
      x[2] += 0.5;
      break;
    case Component::Hz:
      x[0] += 0.5;
      x[1] += 0.5;
      break;
  }
  return h * x;
}

EMMaterials EMMaterials::Vacuum()
{
  return Uniform(1.0, 1.0, {}, {});
}

EMMaterials EMMaterials::Uniform(double eps, double mu, PoleList electric, PoleList magnetic)
{
  EMMaterials m;
  m.eps_rel = [eps](const Vector3 &) -> Matrix3 { return eps * Matrix3::Identity(); };
  m.mu_rel = [mu](const Vector3 &) -> Matrix3 { return mu * Matrix3::Identity(); };
  m.electric = std::move(electric);
  m.magnetic = std::move(magnetic);
  return m;
}

EllipticityBounds material_bounds(const YeeGrid &grid, const EMMaterials &materials)
{
  CheckMaterials(materials);
  EllipticityBounds b{std::numeric_limits<double>::infinity(), 0.0,
                      std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (int i = 0; i < grid.nx; i++)
  {
    for (int j = 0; j < grid.ny; j++)
    {
      for (int k = 0; k < grid.nz; k++)
      {
        const Vector3 x = grid.h * Vector3(i + 0.5, j + 0.5, k + 0.5);
        const Matrix3 eps = materials.eps_rel(x), mu = materials.mu_rel(x);
        const double emin = MinEigenvalue(eps), mmin = MinEigenvalue(mu);
        if (!(emin > 0.0) || !(mmin > 0.0))
        {
          throw InvalidInput("eps_rel and mu_rel must be positive definite");
        }
        b.eps_min = std::min(b.eps_min, emin);
        b.eps_max = std::max(b.eps_max, MaxEigenvalue(eps));
        b.mu_min = std::min(b.mu_min, mmin);
        b.mu_max = std::max(b.mu_max, MaxEigenvalue(mu));
        b.c_max = std::max(b.c_max, 1.0 / std::sqrt(emin * mmin));
      }
    }
  }
  return b;
}

double max_stable_dt(const YeeGrid &grid, const EMMaterials &materials, double cfl)
{
  if (!(cfl > 0.0) || cfl > 0.95)
  {
    throw InvalidInput("CFL number must lie in (0, 0.95]");
  }
  const EllipticityBounds b = material_bounds(grid, materials);
  const double wave = cfl * grid.h / (std::sqrt(3.0) * b.c_max);
  const double stiff = cfl * 2.0 / std::sqrt(StiffnessBound(grid, materials, b));
  return std::min(wave, stiff);
}

EMState fdtd_init(const YeeGrid &grid, const EMMaterials &materials, const VectorField3 &E0,
                  const VectorField3 &H0, double dt)
{
  if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2 || !(grid.h > 0.0))
  {
    throw InvalidInput("grid needs at least 2 cells per axis and h > 0");
  }
  const EllipticityBounds b = material_bounds(grid, materials);
  const double dt_wave = 0.95 * grid.h / (std::sqrt(3.0) * b.c_max);
  if (!(dt > 0.0) || dt > dt_wave * (1.0 + 1e-12))
  {
    throw InvalidInput("time step violates the CFL bound dt <= 0.95 h / (sqrt(3) c_max) = " +
                       format_double(dt_wave));
  }
  if (dt * dt * StiffnessBound(grid, materials, b) >= 4.0)
  {
    throw InvalidInput("time step too large for the Lorentz pole frequencies");
  }

  EMState s;
  s.grid = grid;
  s.dt = dt;
  s.electric = materials.electric;
  s.magnetic = materials.magnetic;
  const std::size_t n = grid.Size();
  s.E.Resize(n);
  s.H.Resize(n);
  s.eps.Resize(n);
  s.mu.Resize(n);
  s.P.resize(s.electric.size());
  s.J.resize(s.electric.size());
  s.M.resize(s.magnetic.size());
  s.K.resize(s.magnetic.size());
  for (auto *list : {&s.P, &s.J, &s.M, &s.K})
  {
    for (auto &g : *list)
    {
      g.Resize(n);
    }
  }
  const bool masked = static_cast<bool>(materials.dispersive);
  for (int q = 0; q < 3; q++)
  {
    if (masked && !s.electric.empty())
    {
      s.dispersive_e[q].assign(n, 0);
    }
    if (masked && !s.magnetic.empty())
    {
      s.dispersive_m[q].assign(n, 0);
    }
  }

  const bool pec = grid.boundary == GridBoundary::Pec;
  for (int i = 0; i < grid.nx; i++)
  {
    for (int j = 0; j < grid.ny; j++)
    {
      for (int k = 0; k < grid.nz; k++)
      {
        const std::size_t idx = grid.Index(i, j, k);
        const int ijk[3] = {i, j, k};
        for (int q = 0; q < 3; q++)
        {
          const auto ce = static_cast<Component>(q), ch = static_cast<Component>(q + 3);
          const Vector3 xe = grid.Position(ce, i, j, k), xh = grid.Position(ch, i, j, k);
          const Matrix3 eps = materials.eps_rel(xe), mu = materials.mu_rel(xh);
          const double off_e = (eps - Matrix3(eps.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
          const double off_m = (mu - Matrix3(mu.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
          if (off_e > 1e-14 * eps.norm() || off_m > 1e-14 * mu.norm())
          {
            throw InvalidInput("the Yee stepper supports diagonal eps_rel and mu_rel only");
          }
          s.eps.c[q][idx] = eps(q, q);
          s.mu.c[q][idx] = mu(q, q);
          if (!s.dispersive_e[q].empty())
          {
            s.dispersive_e[q][idx] = materials.dispersive(xe) ? 1 : 0;
          }
          if (!s.dispersive_m[q].empty())
          {
            s.dispersive_m[q][idx] = materials.dispersive(xh) ? 1 : 0;
          }
          // Tangential E vanishes on the low faces of a perfect conductor box.
          const bool pinned = pec && (ijk[(q + 1) % 3] == 0 || ijk[(q + 2) % 3] == 0);
          if (E0 && !pinned)
          {
            s.E.c[q][idx] = E0(xe)[q];
          }
          if (H0)
          {
            s.H.c[q][idx] = H0(xh)[q];
          }
        }
      }
    }
  }
  return s;
}

double source_norm(const std::vector<CurrentSource> &sources, double t, double h)
{
  double sum = 0.0;
  for (const auto &src : sources)
  {
    const double g = src.waveform ? src.waveform(t) : 0.0;
    for (double w : src.weights)
    {
      sum += w * w * g * g;
    }
  }
  return std::sqrt(sum * h * h * h);
}

void fdtd_step(EMState &s, const std::vector<CurrentSource> &sources)
{
  const YeeGrid &g = s.grid;
  const std::size_t n = g.Size();
  const double dt = s.dt, inv_h = 1.0 / g.h;
  const bool pec = g.boundary == GridBoundary::Pec;
  const Neighbours nx = MakeNeighbours(g.nx, g.boundary), ny = MakeNeighbours(g.ny, g.boundary),
                   nz = MakeNeighbours(g.nz, g.boundary);

  // Sparse forcing: f_m at t_n for H, f_e at t_{n+1/2} for E.
  std::array<std::vector<std::pair<std::size_t, double>>, 3> fe, fm;
  for (const auto &src : sources)
  {
    if (src.cells.size() != src.weights.size() || !src.waveform)
    {
      throw InvalidInput("current source needs one weight per cell and a waveform");
    }
    const bool electric = IsElectric(src.component);
    const double value = src.waveform(electric ? (s.step + 0.5) * dt : s.step * dt);
    for (std::size_t c = 0; c < src.cells.size(); c++)
    {
      const auto &ijk = src.cells[c];
      if (ijk[0] < 0 || ijk[0] >= g.nx || ijk[1] < 0 || ijk[1] >= g.ny || ijk[2] < 0 ||
          ijk[2] >= g.nz)
      {
        throw InvalidInput("current source cell outside the grid");
      }
      auto &list = electric ? fe[Axis(src.component)] : fm[Axis(src.component)];
      list.emplace_back(g.Index(ijk[0], ijk[1], ijk[2]), src.weights[c] * value);
    }
  }
  std::array<std::vector<double>, 3> fe_dense, fm_dense;
  for (int q = 0; q < 3; q++)
  {
    if (!fe[q].empty())
    {
      fe_dense[q].assign(n, 0.0);
      for (const auto &[idx, v] : fe[q])
      {
        fe_dense[q][idx] += v;
      }
    }
    if (!fm[q].empty())
    {
      fm_dense[q].assign(n, 0.0);
      for (const auto &[idx, v] : fm[q])
      {
        fm_dense[q][idx] += v;
      }
    }
  }

  const auto &E = s.E.c;
  auto val = [](const std::vector<double> &f, std::size_t idx, bool valid)
  { return valid ? f[idx] : 0.0; };

  // Electric pole coefficients.
  const std::size_t ne = s.electric.size(), nm = s.magnetic.size();
  std::vector<double> je_decay(ne), je_gain(ne), je_kappa(ne), je_w2(ne);
  for (std::size_t l = 0; l < ne; l++)
  {
    const auto &p = s.electric[l];
    je_decay[l] = (1.0 - p.gamma * dt) / (1.0 + p.gamma * dt);
    je_gain[l] = dt / (1.0 + p.gamma * dt);
    je_kappa[l] = p.Kappa();
    je_w2[l] = p.omega_0 * p.omega_0;
  }
  std::vector<double> km_decay(nm), km_gain(nm), km_kappa(nm), km_w2(nm), km_beta(nm);
  for (std::size_t l = 0; l < nm; l++)
  {
    const auto &p = s.magnetic[l];
    km_decay[l] = (1.0 - p.gamma * dt) / (1.0 + p.gamma * dt);
    km_gain[l] = dt / (1.0 + p.gamma * dt);
    km_kappa[l] = p.Kappa();
    km_w2[l] = p.omega_0 * p.omega_0;
    km_beta[l] = 0.5 * dt * p.Kappa() / (1.0 + p.gamma * dt);
  }

  double y_energy = 0.0;

  // y-group: J^{n+1/2} from (E, P)^n, then (H, K)^{n+1/2} by the Crank-Nicolson solve.
  for (std::size_t l = 0; l < ne; l++)
  {
    const double inv_kappa = je_kappa[l] > 0.0 ? 1.0 / je_kappa[l] : 0.0;
    for (int q = 0; q < 3; q++)
    {
      auto &J = s.J[l].c[q];
      const auto &P = s.P[l].c[q];
      const auto &mask = s.dispersive_e[q];
      for (std::size_t idx = 0; idx < n; idx++)
      {
        if (!mask.empty() && !mask[idx])
        {
          continue;
        }
        J[idx] = je_decay[l] * J[idx] + je_gain[l] * (je_kappa[l] * E[q][idx] - je_w2[l] * P[idx]);
        y_energy += inv_kappa * J[idx] * J[idx];
      }
    }
  }

  for (int i = 0; i < g.nx; i++)
  {
    const int ip = nx.plus[i];
    for (int j = 0; j < g.ny; j++)
    {
      const int jp = ny.plus[j];
      for (int k = 0; k < g.nz; k++)
      {
        const int kp = nz.plus[k];
        const std::size_t idx = g.Index(i, j, k);
        const std::size_t ix = ip >= 0 ? g.Index(ip, j, k) : 0;
        const std::size_t iy = jp >= 0 ? g.Index(i, jp, k) : 0;
        const std::size_t iz = kp >= 0 ? g.Index(i, j, kp) : 0;
        double curl[3];
        curl[0] = (val(E[2], iy, jp >= 0) - E[2][idx] - val(E[1], iz, kp >= 0) + E[1][idx]) * inv_h;
        curl[1] = (val(E[0], iz, kp >= 0) - E[0][idx] - val(E[2], ix, ip >= 0) + E[2][idx]) * inv_h;
        curl[2] = (val(E[1], ix, ip >= 0) - E[1][idx] - val(E[0], iy, jp >= 0) + E[0][idx]) * inv_h;
        for (int q = 0; q < 3; q++)
        {
          double &H = s.H.c[q][idx];
          const double mu = s.mu.c[q][idx];
          double rhs = mu * H - dt * curl[q];
          if (!fm_dense[q].empty())
          {
            rhs += dt * fm_dense[q][idx];
          }
          const bool active = nm > 0 && (s.dispersive_m[q].empty() || s.dispersive_m[q][idx]);
          if (!active)
          {
            H = rhs / mu;
            y_energy += mu * H * H;
            continue;
          }
          double denom = mu, alpha[8];
          const std::size_t nm_local = std::min<std::size_t>(nm, 8);
          if (nm > 8)
          {
            throw InvalidInput("at most 8 magnetic poles are supported");
          }
          for (std::size_t l = 0; l < nm_local; l++)
          {
            const double Kold = s.K[l].c[q][idx];
            alpha[l] = km_decay[l] * Kold + km_gain[l] * (0.5 * km_kappa[l] * H - km_w2[l] * s.M[l].c[q][idx]);
            rhs -= 0.5 * dt * (Kold + alpha[l]);
            denom += 0.5 * dt * km_beta[l];
          }
          H = rhs / denom;
          y_energy += mu * H * H;
          for (std::size_t l = 0; l < nm_local; l++)
          {
            double &K = s.K[l].c[q][idx];
            K = alpha[l] + km_beta[l] * H;
            if (km_kappa[l] > 0.0)
            {
              y_energy += K * K / km_kappa[l];
            }
          }
        }
      }
    }
  }

  // x-group: E, P, M advance to n+1; <x^n, x^{n+1}> accumulated on the fly.
  double x_pairing = 0.0;
  const auto &H = s.H.c;
  for (int i = 0; i < g.nx; i++)
  {
    const int im = nx.minus[i];
    for (int j = 0; j < g.ny; j++)
    {
      const int jm = ny.minus[j];
      for (int k = 0; k < g.nz; k++)
      {
        const int km = nz.minus[k];
        const std::size_t idx = g.Index(i, j, k);
        const std::size_t ix = im >= 0 ? g.Index(im, j, k) : 0;
        const std::size_t iy = jm >= 0 ? g.Index(i, jm, k) : 0;
        const std::size_t iz = km >= 0 ? g.Index(i, j, km) : 0;
        double curl[3];
        curl[0] = (H[2][idx] - val(H[2], iy, jm >= 0) - H[1][idx] + val(H[1], iz, km >= 0)) * inv_h;
        curl[1] = (H[0][idx] - val(H[0], iz, km >= 0) - H[2][idx] + val(H[2], ix, im >= 0)) * inv_h;
        curl[2] = (H[1][idx] - val(H[1], ix, im >= 0) - H[0][idx] + val(H[0], iy, jm >= 0)) * inv_h;
        const int ijk[3] = {i, j, k};
        for (int q = 0; q < 3; q++)
        {
          double &e = s.E.c[q][idx];
          const double eps = s.eps.c[q][idx];
          if (pec && (ijk[(q + 1) % 3] == 0 || ijk[(q + 2) % 3] == 0))
          {
            e = 0.0;
            continue;
          }
          double rhs = curl[q];
          if (!fe_dense[q].empty())
          {
            rhs += fe_dense[q][idx];
          }
          const bool active = ne > 0 && (s.dispersive_e[q].empty() || s.dispersive_e[q][idx]);
          if (active)
          {
            for (std::size_t l = 0; l < ne; l++)
            {
              const double jl = s.J[l].c[q][idx];
              rhs -= jl;
              double &p = s.P[l].c[q][idx];
              const double p_new = p + dt * jl;
              if (je_kappa[l] > 0.0)
              {
                x_pairing += je_w2[l] / je_kappa[l] * p * p_new;
              }
              p = p_new;
            }
          }
          const double e_new = e + dt / eps * rhs;
          x_pairing += eps * e * e_new;
          e = e_new;
        }
      }
    }
  }
  for (std::size_t l = 0; l < nm; l++)
  {
    const double weight = km_kappa[l] > 0.0 ? km_w2[l] / km_kappa[l] : 0.0;
    for (int q = 0; q < 3; q++)
    {
      auto &M = s.M[l].c[q];
      const auto &K = s.K[l].c[q];
      const auto &mask = s.dispersive_m[q];
      for (std::size_t idx = 0; idx < n; idx++)
      {
        if (!mask.empty() && !mask[idx])
        {
          continue;
        }
        const double m_new = M[idx] + dt * K[idx];
        x_pairing += weight * M[idx] * m_new;
        M[idx] = m_new;
      }
    }
  }

  s.step++;
  s.discrete_energy = (x_pairing + y_energy) * g.CellVolume();
  if (!std::isfinite(s.discrete_energy))
  {
    throw SolverError("non-finite field values at step " + std::to_string(s.step));
  }
}

double energy(const EMState &s)
{
  double sum = 0.0;
  for (int q = 0; q < 3; q++)
  {
    const auto &E = s.E.c[q], &H = s.H.c[q], &eps = s.eps.c[q], &mu = s.mu.c[q];
    for (std::size_t idx = 0; idx < E.size(); idx++)
    {
      sum += eps[idx] * E[idx] * E[idx] + mu[idx] * H[idx] * H[idx];
    }
  }
  return sum * s.grid.CellVolume();
}

double component_value(const EMState &s, Component c, int i, int j, int k)
{
  const std::size_t idx = s.grid.Index(i, j, k);
  return IsElectric(c) ? s.E.c[Axis(c)][idx] : s.H.c[Axis(c)][idx];
}

LightCone make_light_cone(const YeeGrid &grid, const EMMaterials &materials, const Vector3 &center,
                          double radius)
{
  CheckMaterials(materials);
  if (!(radius > 0.0))
  {
    throw InvalidInput("light cone radius must be positive");
  }
  double c = 0.0;
  for (int i = 0; i < grid.nx; i++)
  {
    for (int j = 0; j < grid.ny; j++)
    {
      for (int k = 0; k < grid.nz; k++)
      {
        for (int q = 0; q < 6; q++)
        {
          const Vector3 x = grid.Position(static_cast<Component>(q), i, j, k);
          if (Distance(grid, x, center) > radius)
          {
            continue;
          }
          const double ge = 1.0 / std::sqrt(MinEigenvalue(materials.eps_rel(x)));
          const double gm = 1.0 / std::sqrt(MinEigenvalue(materials.mu_rel(x)));
          c = std::max(c, ge * gm);
        }
      }
    }
  }
  if (c == 0.0)
  {
    throw InvalidInput("light cone ball contains no grid locations");
  }
  return {center, radius, c};
}

ConeSample sample_light_cone(const EMState &s, const LightCone &cone, double margin)
{
  const YeeGrid &g = s.grid;
  ConeSample sample{s.Time(), 0.0, 0.0};
  const double radius_e = cone.radius - cone.speed * s.Time() - margin;
  const double radius_h = cone.radius - cone.speed * (s.Time() - 0.5 * s.dt) - margin;
  for (int i = 0; i < g.nx; i++)
  {
    for (int j = 0; j < g.ny; j++)
    {
      for (int k = 0; k < g.nz; k++)
      {
        const std::size_t idx = g.Index(i, j, k);
        for (int q = 0; q < 6; q++)
        {
          const auto c = static_cast<Component>(q);
          const double v = std::abs(q < 3 ? s.E.c[q][idx] : s.H.c[q - 3][idx]);
          sample.global_max = std::max(sample.global_max, v);
          const double r = q < 3 ? radius_e : radius_h;
          if (r > 0.0 && v > sample.inside_max && Distance(g, g.Position(c, i, j, k), cone.center) < r)
          {
            sample.inside_max = v;
          }
        }
      }
    }
  }
  return sample;
}

CertificateResult light_cone_certificate(const std::vector<ConeSample> &history,
                                         const LightCone &cone, double threshold,
                                         const EMState &initial_layout,
                                         const std::vector<CurrentSource> &sources)
{
  CertificateResult r;
  if (history.empty() || history.front().t != 0.0)
  {
    r.hypotheses_hold = false;
    r.message = "history must start with the initial state";
    return r;
  }
  if (history.front().inside_max != 0.0)
  {
    r.hypotheses_hold = false;
    r.message = "initial data intersects B(a, R)";
    return r;
  }
  const YeeGrid &g = initial_layout.grid;
  for (const auto &src : sources)
  {
    for (const auto &ijk : src.cells)
    {
      if (Distance(g, g.Position(src.component, ijk[0], ijk[1], ijk[2]), cone.center) < cone.radius)
      {
        r.hypotheses_hold = false;
        r.message = "source support intersects B(a, R)";
        return r;
      }
    }
  }
  const double t_end = cone.radius / cone.speed;
  for (const auto &s : history)
  {
    if (s.t >= t_end)
    {
      continue;
    }
    const double ratio = s.global_max > 0.0 ? s.inside_max / s.global_max : 0.0;
    r.max_violation = std::max(r.max_violation, ratio);
  }
  r.certified = r.max_violation <= threshold;
  r.message = r.certified ? "no signal inside the shrinking ball" : "signal inside the shrinking ball";
  return r;
}

void write_probe_header(std::ostream &os)
{
  os << "t,Ex,Ey,Ez,Hx,Hy,Hz\n";
}

void write_probe_row(std::ostream &os, const EMState &s, int i, int j, int k)
{
  os << format_double(s.Time());
  for (int q = 0; q < 6; q++)
  {
    os << ',' << format_double(component_value(s, static_cast<Component>(q), i, j, k));
  }
  os << '\n';
}

void write_energy_header(std::ostream &os)
{
  os << "t,energy,bound\n";
}

void write_energy_row(std::ostream &os, double t, double e, double bound)
{
  os << format_double(t) << ',' << format_double(e) << ',' << format_double(bound) << '\n';
}

void write_vtk(const EMState &s, std::ostream &os)
{
  const YeeGrid &g = s.grid;
  os << "# vtk DataFile Version 3.0\nnimlab Yee fields t=" << format_double(s.Time())
     << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << g.nx << ' ' << g.ny << ' ' << g.nz << "\nORIGIN 0 0 0\nSPACING " << g.h
     << ' ' << g.h << ' ' << g.h << "\nPOINT_DATA " << g.Size() << '\n';
  for (const char *name : {"E", "H"})
  {
    const auto &f = name[0] == 'E' ? s.E : s.H;
    os << "VECTORS " << name << " double\n";
    // VTK structured points are x-fastest.
    for (int k = 0; k < g.nz; k++)
    {
      for (int j = 0; j < g.ny; j++)
      {
        for (int i = 0; i < g.nx; i++)
        {
          const std::size_t idx = g.Index(i, j, k);
          os << format_double(f.c[0][idx]) << ' ' << format_double(f.c[1][idx]) << ' '
             << format_double(f.c[2][idx]) << '\n';
        }
      }
    }
  }
}

}  // namespace nimlab
