#include "hyvort/harmonic.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

namespace hyvort {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double d) {
  d = std::remainder(d, 2.0 * kPi);  // (-pi, pi]
  return d;
}

// Unwraps a perimeter sequence; returns the lifting and the closing sum of wrapped increments.
Eigen::VectorXd unwrap(const Eigen::VectorXd& psi, double& closure) {
  const Eigen::Index n = psi.size();
  Eigen::VectorXd u(n);
  u[0] = psi[0];
  double total = 0.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    const double d = wrap(psi[k] - psi[k - 1]);
    u[k] = u[k - 1] + d;
    total += d;
  }
  total += wrap(psi[0] - psi[n - 1]);
  closure = total;
  return u;
}

BoundaryPhase lift(const Grid2D& grid, const Eigen::VectorXd& wrapped) {
  BoundaryPhase b{grid, {}, 0};
  double total = 0.0;
  b.phi = unwrap(wrapped, total);
  const double m = total / (2.0 * kPi);
  b.winding = static_cast<int>(std::lround(m));
  require(std::abs(m - b.winding) <= 1e-8, Errc::WindingMismatch,
          "boundary phase increment is not a multiple of 2 pi");
  return b;
}

}  // namespace

BoundaryPhase deg2_boundary_phase(const Grid2D& grid, double amplitude) {
  return lift(grid, sample_perimeter(grid, [amplitude](double x, double y) {
                return 2.0 * std::atan2(y - 0.5, x - 0.5) +
                       amplitude * std::sin(2 * kPi * x) * std::sin(2 * kPi * y);
              }));
}

BoundaryPhase boundary_phase_from_function(const Grid2D& grid,
                                           const std::function<double(double, double)>& phase) {
  return lift(grid, sample_perimeter(grid, phase));
}

BoundaryPhase boundary_phase_from_table(const Grid2D& grid, std::istream& csv) {
  std::vector<double> vals;
  std::string line;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    std::vector<double> cols;
    double v;
    while (ss >> v) cols.push_back(v);
    if (cols.empty()) continue;  // header row
    vals.push_back(cols.back());
  }
  require(static_cast<int>(vals.size()) == grid.perimeter_count(), Errc::Dimension,
          "boundary phase table length does not match the grid perimeter");
  return lift(grid, Eigen::Map<Eigen::VectorXd>(vals.data(), grid.perimeter_count()));
}

BoundaryPhase make_boundary_phase(const Grid2D& grid, const std::string& spec, double amplitude) {
  if (spec == "deg2") return deg2_boundary_phase(grid, amplitude);
  if (spec.rfind("table:", 0) == 0) {
    std::ifstream is(spec.substr(6));
    require(static_cast<bool>(is), Errc::Configuration, "cannot open " + spec.substr(6));
    return boundary_phase_from_table(grid, is);
  }
  fail(Errc::Configuration, "unknown boundary phase '" + spec + "'");
}

Eigen::VectorXd unwrap_boundary_phase(const VortexConfig& config, const BoundaryPhase& phi_g) {
  validate(config);
  const Grid2D& grid = phi_g.grid;
  require(phi_g.phi.size() == grid.perimeter_count(), Errc::Dimension, "boundary phase length");
  require(min_boundary_distance(config) >= 2.0 * grid.h, Errc::Domain,
          "vortex closer than 2h to the boundary");
  Eigen::VectorXd psi(grid.perimeter_count());
  for (int k = 0; k < grid.perimeter_count(); ++k)
    psi[k] = phi_g.phi[k] - singular_phase(config, grid.perimeter_node(k));
  double closure = 0.0;
  Eigen::VectorXd u = unwrap(psi, closure);
  require(std::abs(closure) <= 1e-6 * 2.0 * kPi, Errc::WindingMismatch,
          "unwrapped trace does not close: boundary degree " + std::to_string(phi_g.winding) +
              " vs " + std::to_string(config.size()) + " vortices");
  return u;
}

DirichletSystem assemble_harmonic_system(const VortexConfig& config, const BoundaryPhase& phi_g) {
  DirichletSystem s;
  s.K = assemble_laplacian(phi_g.grid, Scaling::Stiffness);
  s.trace = unwrap_boundary_phase(config, phi_g);
  s.b = apply_dirichlet_rhs(s.K, s.trace);
  return s;
}

HarmonicSolver::HarmonicSolver(const Grid2D& grid, SolverKind kind, double tol, int max_iter)
    : grid_(grid), kind_(kind), tol_(tol), max_iter_(max_iter),
      K_(assemble_laplacian(grid, Scaling::Stiffness)) {
  require(tol > 0.0, Errc::Parameter, "solver tolerance must be positive");
  switch (kind) {
    case SolverKind::DirectDense: {
      require(grid.level <= kMaxDenseLevel, Errc::Resource, "DirectDense is limited to level <= 6");
      auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(Eigen::MatrixXd(K_.matrix));
      require(llt->info() == Eigen::Success, Errc::Numerical, "dense Cholesky failed");
      dense_ = llt;
      break;
    }
    case SolverKind::DirectSparse: {
      auto ldlt = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(
          Eigen::SparseMatrix<double>(K_.matrix));
      require(ldlt->info() == Eigen::Success, Errc::Numerical, "sparse factorization failed");
      sparse_ = ldlt;
      break;
    }
    case SolverKind::BPX_CG:
      bpx_ = build_bpx(2, grid.level);
      break;
  }
}

Eigen::VectorXd HarmonicSolver::solve(const Eigen::VectorXd& b, const Eigen::VectorXd* x0,
                                      SolveReport* report) const {
  require(b.size() == K_.dimension(), Errc::Dimension, "right-hand side length");
  Eigen::VectorXd x;
  SolveReport rep;
  switch (kind_) {
    case SolverKind::DirectDense: x = dense_->solve(b); break;
    case SolverKind::DirectSparse: x = sparse_->solve(b); break;
    case SolverKind::BPX_CG:
      x = x0 ? *x0 : Eigen::VectorXd::Zero(b.size());
      rep = bpx_pcg(K_.matrix, *bpx_, b, x, tol_, max_iter_);
      break;
  }
  if (kind_ != SolverKind::BPX_CG) {
    const double nb = b.norm();
    rep.relative_residual = nb > 0 ? (K_.matrix * x - b).norm() / nb : 0.0;
    rep.converged = true;
  }
  if (report) *report = rep;
  return x;
}

HarmonicField solve_harmonic(const VortexConfig& config, const BoundaryPhase& phi_g,
                             const HarmonicSolver& solver) {
  require(solver.grid() == phi_g.grid, Errc::Dimension, "solver and boundary grids differ");
  const Eigen::VectorXd trace = unwrap_boundary_phase(config, phi_g);
  const Eigen::VectorXd b = apply_dirichlet_rhs(solver.K(), trace);
  SolveReport rep;
  HarmonicField f{phi_g.grid, solver.solve(b, nullptr, &rep), trace, config, 0.0, 0};
  const double nb = b.norm();
  f.residual = nb > 0 ? (solver.K().matrix * f.values - b).norm() / nb : 0.0;
  f.iterations = rep.iterations;
  return f;
}

HarmonicField solve_harmonic(const VortexConfig& config, const BoundaryPhase& phi_g,
                             SolverKind kind, double tol) {
  return solve_harmonic(config, phi_g, HarmonicSolver(phi_g.grid, kind, tol));
}

ComplexField2D reconstruct_outer(const VortexConfig& config, const HarmonicField& h,
                                 std::vector<std::string>* provenance) {
  const Grid2D& grid = h.grid;
  auto theta = [&](const Vec2& x) {
    for (const auto& a : config.positions) {
      if (x == a) {
        const Vec2 xp = x + Vec2(1e-12, 1e-12);
        if (provenance) {
          std::ostringstream os;
          os.precision(17);
          os << "node (" << x.x() << "," << x.y() << ") coincides with a vortex; "
             << "phase evaluated at a 1e-12 diagonal offset";
          provenance->push_back(os.str());
        }
        return singular_phase(config, xp);
      }
    }
    return singular_phase(config, x);
  };
  Eigen::VectorXcd u(grid.interior_count());
  for (int k = 0; k < grid.interior_count(); ++k)
    u[k] = std::polar(1.0, theta(grid.node(k)) + h.values[k]);
  Eigen::VectorXcd g(grid.perimeter_count());
  for (int k = 0; k < grid.perimeter_count(); ++k)
    g[k] = std::polar(1.0, theta(grid.perimeter_node(k)) + h.boundary[k]);
  return ComplexField2D(grid, std::move(u), std::move(g));
}

Eigen::SparseVector<double> ObservableFunctional::coefficients() const {
  Eigen::SparseVector<double> c(size);
  for (int k = 0; k < stencil.size; ++k) c.coeffRef(stencil.index[k]) += stencil.weight[k];
  return c;
}

Eigen::VectorXd ObservableFunctional::dense() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(size);
  for (int k = 0; k < stencil.size; ++k) c[stencil.index[k]] += stencil.weight[k];
  return c;
}

ObservableFunctional build_observable(StencilKind kind, const Vec2& location,
                                      const Grid2D& grid) {
  ObservableFunctional o;
  o.kind = kind;
  o.location = location;
  o.size = grid.interior_count();
  o.stencil = interpolation_stencil(grid, kind, location);
  return o;
}

ClassicalFeedback::ClassicalFeedback(std::shared_ptr<const HarmonicSolver> solver,
                                     BoundaryPhase phi_g)
    : solver_(std::move(solver)), phi_(std::move(phi_g)) {
  require(solver_ != nullptr, Errc::Parameter, "null harmonic solver");
  require(solver_->grid() == phi_.grid, Errc::Dimension, "solver and boundary grids differ");
}

HarmonicField ClassicalFeedback::solve(const VortexConfig& config) const {
  return solve_harmonic(config, phi_, *solver_);
}

std::vector<Vec2> ClassicalFeedback::feedback(const VortexConfig& config) const {
  const HarmonicField h = solve(config);
  const RealField2D f(h.grid, h.values);
  std::vector<Vec2> g(config.size());
  for (int j = 0; j < config.size(); ++j) g[j] = sample_gradient(f, config.positions[j]);
  return g;
}

HarmonicSample ClassicalFeedback::harmonic(const VortexConfig& config) const {
  HarmonicField h = solve(config);
  return {h.grid, std::move(h.values), std::move(h.boundary)};
}

}  // namespace hyvort
