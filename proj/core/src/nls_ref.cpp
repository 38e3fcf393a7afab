#include "hyvort/nls_ref.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hyvort {

namespace {

// Full (cells+1)^2 lattice with the boundary trace in place.
Eigen::MatrixXcd complex_lattice(const ComplexField2D& u) {
  const Grid2D& g = u.grid;
  require(u.boundary.has_value(), Errc::Parameter, "field has no boundary trace");
  const int N = g.cells;
  Eigen::MatrixXcd a(N + 1, N + 1);
  for (int J = 0; J <= N; ++J)
    for (int I = 0; I <= N; ++I) {
      if (I == 0 || J == 0 || I == N || J == N)
        a(I, J) = (*u.boundary)[g.perimeter_index(I, J)];
      else
        a(I, J) = u.values[g.index(I - 1, J - 1)];
    }
  return a;
}

}  // namespace

double NLSParams::resolved_dt() const {
  if (dt) return *dt;
  const int steps = static_cast<int>(std::ceil(T / dt_guard() - 1e-9));
  return T / std::max(steps, 1);
}

void NLSParams::validate() const {
  require(eps > 0.0 && eps < 1.0, Errc::Parameter, "eps must lie in (0,1)");
  require(level >= 3 && level <= 11, Errc::Parameter, "level must lie in [3,11]");
  require(T > 0.0, Errc::Parameter, "T must be positive");
  require(dispersion == 1.0 || dispersion == -1.0, Errc::Parameter, "dispersion must be +-1");
  require(solver_tol > 0.0 && max_iter > 0, Errc::Parameter, "solver tolerance and cap");
  if (dt) {
    require(*dt > 0.0, Errc::Parameter, "dt must be positive");
    std::ostringstream os;
    os << "dt = " << *dt << " exceeds the accuracy guard " << dt_guard();
    require(*dt <= dt_guard() * (1 + 1e-12), Errc::Parameter, os.str());
  }
  hyvort::validate(initial);
  const double margin = 2.0 * h();
  for (const auto& a : initial.positions) {
    require(std::min({a.x(), a.y(), 1 - a.x(), 1 - a.y()}) >= margin, Errc::Geometry,
            "vortex closer than 2h to the boundary");
  }
}

double core_profile(double rho) { return std::tanh(rho / std::sqrt(2.0)); }

double core_modulus(const VortexConfig& config, double eps, const Vec2& x) {
  double f = 1.0;
  for (const auto& a : config.positions) f *= core_profile((x - a).norm() / eps);
  return f;
}

ComplexField2D initial_data(const NLSParams& params, const BoundaryPhase& phi_g,
                            const HarmonicSolver& solver, std::vector<std::string>* provenance) {
  params.validate();
  const Grid2D grid(params.level);
  require(solver.grid() == grid && phi_g.grid == grid, Errc::Dimension, "grid mismatch");
  if (provenance && params.initial.size() > 1 && min_pair_distance(params.initial) < 4 * params.eps) {
    std::ostringstream os;
    os << "vortex pair distance " << min_pair_distance(params.initial) << " below 4 eps = "
       << 4 * params.eps << "; cores overlap";
    provenance->push_back(os.str());
  }
  const auto h = solve_harmonic(params.initial, phi_g, solver);
  auto u = reconstruct_outer(params.initial, h, provenance);
  for (int k = 0; k < grid.interior_count(); ++k)
    u.values[k] *= core_modulus(params.initial, params.eps, grid.node(k));
  Eigen::VectorXcd g(grid.perimeter_count());
  for (int k = 0; k < grid.perimeter_count(); ++k) g[k] = std::polar(1.0, phi_g.phi[k]);
  u.boundary = std::move(g);
  return u;
}

ComplexField2D initial_data(const NLSParams& params, std::vector<std::string>* provenance) {
  params.validate();
  const Grid2D grid(params.level);
  const auto phi = make_boundary_phase(grid, params.boundary, params.boundary_amplitude);
  const HarmonicSolver solver(grid, SolverKind::DirectSparse);
  return initial_data(params, phi, solver, provenance);
}

void nonlinear_substep(Eigen::VectorXcd& u, double tau, double eps) {
  const double s = tau / (eps * eps);
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double m = std::norm(u[k]);
    u[k] *= std::polar(1.0, -s * (1.0 - m));
  }
}

LinearPropagator::LinearPropagator(const Grid2D& grid, double dt, double dispersion, double tol,
                                   int max_iter)
    : grid_(grid), dt_(dt), dispersion_(dispersion), tol_(tol), max_iter_(max_iter),
      K_(assemble_laplacian(grid, Scaling::FiniteDifference)) {
  require(dt > 0.0, Errc::Parameter, "dt must be positive");
}

namespace {

// y = K x for the FiniteDifference five-point operator.
void apply_stencil(const Grid2D& g, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const int n = g.n;
  const double s = 1.0 / (g.h * g.h);
  y.resize(x.size());
  for (int j = 0; j < n; ++j) {
    const double* row = x.data() + static_cast<std::ptrdiff_t>(j) * n;
    double* out = y.data() + static_cast<std::ptrdiff_t>(j) * n;
    for (int i = 0; i < n; ++i) {
      double k = 4.0 * row[i];
      if (i > 0) k -= row[i - 1];
      if (i < n - 1) k -= row[i + 1];
      if (j > 0) k -= row[i - n];
      if (j < n - 1) k -= row[i + n];
      out[i] = s * k;
    }
  }
}

}  // namespace

// i u_t = s Lap u with Lap = -K + boundary terms g_b:
// (I - i a K) u+ = (I + i a K) u - 2 i a g_b =: r,  a = s dt / 2.
// COCG breaks down on winding data (r^T r ~ 0), so the normal equations
// (I + a^2 K^2) u+ = (I + i a K) r are solved for the real and imaginary parts by CG.
SolveReport LinearPropagator::step(Eigen::VectorXcd& u, const Eigen::VectorXcd& g) const {
  const double a = 0.5 * dispersion_ * dt_;
  const Eigen::VectorXcd gb = apply_dirichlet_rhs(K_, g);
  const Eigen::Index n = u.size();
  Eigen::VectorXd ur = u.real(), ui = u.imag(), t1, t2;
  // r = u + i a (K u - 2 g_b)
  apply_stencil(grid_, ur, t1);
  apply_stencil(grid_, ui, t2);
  Eigen::VectorXd rr = ur - a * (t2 - 2.0 * gb.imag());
  Eigen::VectorXd ri = ui + a * (t1 - 2.0 * gb.real());
  // (I + i a K) r
  apply_stencil(grid_, rr, t1);
  apply_stencil(grid_, ri, t2);
  const Eigen::VectorXd br = rr - a * t2, bi = ri + a * t1;
  Eigen::VectorXd w(n);
  auto A = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    apply_stencil(grid_, x, w);
    apply_stencil(grid_, w, y);
    y = x + (a * a) * y;
  };
  const auto rep_r = pcg(A, nullptr, br, ur, tol_, max_iter_);
  const auto rep_i = pcg(A, nullptr, bi, ui, tol_, max_iter_);
  u.real() = ur;
  u.imag() = ui;
  SolveReport rep = rep_r.iterations >= rep_i.iterations ? rep_r : rep_i;
  rep.relative_residual = std::max(rep_r.relative_residual, rep_i.relative_residual);
  return rep;
}

void strang_step(ComplexField2D& u, const LinearPropagator& lin, double eps, StepStats* stats) {
  require(u.boundary.has_value(), Errc::Parameter, "field has no boundary trace");
  nonlinear_substep(u.values, 0.5 * lin.dt(), eps);
  const auto rep = lin.step(u.values, *u.boundary);
  nonlinear_substep(u.values, 0.5 * lin.dt(), eps);
  if (stats) {
    ++stats->steps;
    stats->max_iterations = std::max(stats->max_iterations, rep.iterations);
    stats->total_iterations += rep.iterations;
  }
}

double gl_energy(const ComplexField2D& u, double eps) {
  const auto a = complex_lattice(u);
  const int N = u.grid.cells;
  const double h2 = u.grid.h * u.grid.h;
  double grad = 0.0, pot = 0.0;
  for (int J = 0; J <= N; ++J)
    for (int I = 0; I <= N; ++I) {
      if (I < N) grad += std::norm(a(I + 1, J) - a(I, J));
      if (J < N) grad += std::norm(a(I, J + 1) - a(I, J));
    }
  for (int k = 0; k < u.grid.interior_count(); ++k) {
    const double d = 1.0 - std::norm(u.values[k]);
    pot += d * d;
  }
  return 0.5 * grad + h2 * pot / (4.0 * eps * eps);
}

NLSRun evolve_nls(const NLSParams& params, std::vector<double> snapshot_times) {
  const auto u0 = initial_data(params);
  return evolve_nls(params, u0, std::move(snapshot_times));
}

NLSRun evolve_nls(const NLSParams& params, const ComplexField2D& u0,
                  std::vector<double> snapshot_times) {
  params.validate();
  require(u0.grid.level == params.level, Errc::Dimension, "initial field on a different grid");
  NLSRun run;
  run.params = params;
  run.dt = params.resolved_dt();
  run.steps = static_cast<int>(std::llround(params.T / run.dt));
  require(std::abs(run.steps * run.dt - params.T) <= 1e-9 * params.T, Errc::Parameter,
          "T is not a whole number of steps");
  if (snapshot_times.empty()) snapshot_times = {0.0, 0.5 * params.T, params.T};
  std::vector<int> at;
  for (double t : snapshot_times) {
    require(t >= 0.0 && t <= params.T * (1 + 1e-12), Errc::Parameter, "snapshot time outside [0,T]");
    at.push_back(static_cast<int>(std::llround(t / run.dt)));
  }
  std::sort(at.begin(), at.end());
  at.erase(std::unique(at.begin(), at.end()), at.end());

  const Grid2D grid(params.level);
  const LinearPropagator lin(grid, run.dt, params.dispersion, params.solver_tol, params.max_iter);
  ComplexField2D u = u0;
  std::size_t next = 0;
  auto emit = [&](int step) {
    while (next < at.size() && at[next] == step) {
      run.snapshots.push_back({step * run.dt, u, gl_energy(u, params.eps)});
      ++next;
    }
  };
  emit(0);
  for (int s = 1; s <= run.steps; ++s) {
    strang_step(u, lin, params.eps, &run.stats);
    emit(s);
  }
  return run;
}

VortexConfig locate_vortices(const ComplexField2D& u, int count, double threshold) {
  require(count >= 0, Errc::Parameter, "vortex count must be non-negative");
  const auto a = complex_lattice(u);
  const int N = u.grid.cells;
  const double h = u.grid.h;
  Eigen::MatrixXd m = a.cwiseAbs();
  VortexConfig out;
  for (int J = 1; J < N; ++J)
    for (int I = 1; I < N; ++I) {
      const double v = m(I, J);
      if (v >= threshold) continue;
      bool is_min = true;
      for (int dj = -1; dj <= 1 && is_min; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (!di && !dj) continue;
          const double w = m(I + di, J + dj);
          // ties go to the first node in scan order
          const bool earlier = dj < 0 || (dj == 0 && di < 0);
          if (w < v || (earlier && w == v)) {
            is_min = false;
            break;
          }
        }
      if (!is_min) continue;
      // discard ripple minima: the phase must wind around the 8-neighbour ring
      {
        static constexpr int ring[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                           {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
        double wind = 0.0;
        for (int r = 0; r < 8; ++r) {
          const cplx z0 = a(I + ring[r][0], J + ring[r][1]);
          const cplx z1 = a(I + ring[(r + 1) % 8][0], J + ring[(r + 1) % 8][1]);
          wind += std::arg(z1 * std::conj(z0));
        }
        if (std::abs(wind) < std::numbers::pi) continue;
      }
      auto q = [&](int di, int dj) { return std::norm(a(I + di, J + dj)); };
      const double gx = (q(1, 0) - q(-1, 0)) / 2, gy = (q(0, 1) - q(0, -1)) / 2;
      const double hxx = q(1, 0) - 2 * q(0, 0) + q(-1, 0);
      const double hyy = q(0, 1) - 2 * q(0, 0) + q(0, -1);
      const double hxy = (q(1, 1) - q(1, -1) - q(-1, 1) + q(-1, -1)) / 4;
      const double det = hxx * hyy - hxy * hxy;
      Vec2 off = Vec2::Zero();
      if (det > 0 && hxx > 0) {
        off = Vec2(-(hyy * gx - hxy * gy) / det, -(hxx * gy - hxy * gx) / det);
        if (off.cwiseAbs().maxCoeff() > 1.0) off.setZero();
      }
      out.positions.emplace_back((I + off.x()) * h, (J + off.y()) * h);
    }
  if (out.size() != count) {
    std::ostringstream os;
    os << "found " << out.size() << " modulus minima below " << threshold << ", expected "
       << count;
    fail(Errc::Detection, os.str());
  }
  return out;
}

}  // namespace hyvort
