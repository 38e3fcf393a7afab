#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyvort/harmonic.hpp"

namespace hyvort {

struct NLSParams {
  double eps = 0.1;
  int level = 6;
  std::optional<double> dt;  // default: the accuracy guard, rounded so that T/dt is an integer
  double T = 0.05;
  std::string boundary = "deg2";
  double boundary_amplitude = 0.3;
  VortexConfig initial;
  // i u_t = dispersion * Lap u + eps^-2 (1 - |u|^2) u. +1 conserves the GL energy; -1 is the
  // literal sign of the model equation, which is modulationally unstable around |u| = 1.
  double dispersion = 1.0;
  double solver_tol = 1e-10;
  int max_iter = 500;

  static constexpr double kSafety = 0.5;
  double h() const { return std::ldexp(1.0, -level); }
  double dt_guard() const { return kSafety * std::min(h() * h(), eps * eps); }
  double resolved_dt() const;
  // Throws Parameter on out-of-range values and Geometry for vortices closer than 2h to the
  // boundary. Pairs closer than 4 eps are allowed (the sweep runs eps = 0.2 on a pair at
  // distance 0.38) and reported by initial_data through provenance.
  void validate() const;
};

// Core profile f(rho) = tanh(rho / sqrt 2).
double core_profile(double rho);
// prod_j f(|x - a_j| / eps)
double core_modulus(const VortexConfig& config, double eps, const Vec2& x);

// u(0) = prod_j f(|x - a_j|/eps) exp(i(Theta_a + h_a)) on interior nodes; the boundary trace is
// exp(i phi_g).
ComplexField2D initial_data(const NLSParams& params, const BoundaryPhase& phi_g,
                            const HarmonicSolver& solver,
                            std::vector<std::string>* provenance = nullptr);
ComplexField2D initial_data(const NLSParams& params,
                            std::vector<std::string>* provenance = nullptr);

// Half-step pointwise rotation u <- u exp(-i tau (1 - |u|^2) / eps^2).
void nonlinear_substep(Eigen::VectorXcd& u, double tau, double eps);

// Crank-Nicolson stepper for i u_t = dispersion * Lap_h u with fixed Dirichlet data.
class LinearPropagator {
 public:
  LinearPropagator(const Grid2D& grid, double dt, double dispersion, double tol, int max_iter);

  double dt() const { return dt_; }
  // Advances u by dt with the boundary trace g; returns the CG report of the slower part.
  SolveReport step(Eigen::VectorXcd& u, const Eigen::VectorXcd& g) const;

 private:
  Grid2D grid_;
  double dt_, dispersion_, tol_;
  int max_iter_;
  SparseOperator K_;  // FiniteDifference scaling
};

struct StepStats {
  int steps = 0;
  int max_iterations = 0;
  long total_iterations = 0;
};

// N(dt/2) L(dt) N(dt/2).
void strang_step(ComplexField2D& u, const LinearPropagator& lin, double eps,
                 StepStats* stats = nullptr);

// int 1/2 |grad u|^2 + (1 - |u|^2)^2 / (4 eps^2) by edge differences over the full lattice.
double gl_energy(const ComplexField2D& u, double eps);

struct NLSSnapshot {
  double time = 0.0;
  ComplexField2D field;
  double energy = 0.0;
};

struct NLSRun {
  NLSParams params;
  double dt = 0.0;
  int steps = 0;
  StepStats stats;
  std::vector<NLSSnapshot> snapshots;
};

// Iterates strang_step to params.T. Snapshot times are rounded to whole steps; the default is
// {0, T/2, T}.
NLSRun evolve_nls(const NLSParams& params, std::vector<double> snapshot_times = {});
NLSRun evolve_nls(const NLSParams& params, const ComplexField2D& u0,
                  std::vector<double> snapshot_times = {});

// Local minima of |u| below threshold with nonzero phase winding around the 8-neighbour ring,
// refined by a quadratic fit of |u|^2 on the 3x3 stencil.
VortexConfig locate_vortices(const ComplexField2D& u, int count, double threshold = 0.5);

}  // namespace hyvort
