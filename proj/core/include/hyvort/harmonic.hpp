#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "hyvort/bpx.hpp"
#include "hyvort/grid2d.hpp"
#include "hyvort/vortex.hpp"

namespace hyvort {

// Continuous lifting of the boundary phase over the perimeter nodes.
struct BoundaryPhase {
  Grid2D grid;
  Eigen::VectorXd phi;
  int winding = 0;
};

// phi = 2 atan2(y - 1/2, x - 1/2) + amplitude sin(2 pi x) sin(2 pi y), degree 2.
BoundaryPhase deg2_boundary_phase(const Grid2D& grid, double amplitude = 0.3);
// Lifts a (possibly wrapped) phase function sampled on the perimeter.
BoundaryPhase boundary_phase_from_function(const Grid2D& grid,
                                           const std::function<double(double, double)>& phase);
// One value per perimeter node, counterclockwise from (0,0); "#" comments and an optional
// leading index column ("k,phi") are accepted.
BoundaryPhase boundary_phase_from_table(const Grid2D& grid, std::istream& csv);
// Selector used by the runner: "deg2" (with amplitude) or "table:<path>".
BoundaryPhase make_boundary_phase(const Grid2D& grid, const std::string& spec,
                                  double amplitude = 0.3);

// Continuous single-valued lifting of phi_g - Theta_a along the perimeter.
Eigen::VectorXd unwrap_boundary_phase(const VortexConfig& config, const BoundaryPhase& phi_g);

struct DirichletSystem {
  SparseOperator K;
  Eigen::VectorXd b;
  Eigen::VectorXd trace;
};

DirichletSystem assemble_harmonic_system(const VortexConfig& config, const BoundaryPhase& phi_g);

enum class SolverKind { DirectDense, DirectSparse, BPX_CG };

// Reusable solver for K h = b on one grid; immutable after construction.
class HarmonicSolver {
 public:
  static constexpr int kMaxDenseLevel = 6;

  HarmonicSolver(const Grid2D& grid, SolverKind kind, double tol = 1e-10, int max_iter = 2000);

  const Grid2D& grid() const { return grid_; }
  const SparseOperator& K() const { return K_; }
  SolverKind kind() const { return kind_; }
  double tol() const { return tol_; }
  std::shared_ptr<const BPXPreconditioner> bpx() const { return bpx_; }

  // x may carry a warm start; report receives iteration data for BPX_CG.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd* x0 = nullptr,
                        SolveReport* report = nullptr) const;

 private:
  Grid2D grid_;
  SolverKind kind_;
  double tol_;
  int max_iter_;
  SparseOperator K_;
  std::shared_ptr<const BPXPreconditioner> bpx_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> dense_;
  std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> sparse_;
};

struct HarmonicField {
  Grid2D grid;
  Eigen::VectorXd values;
  Eigen::VectorXd boundary;  // unwrapped trace the solve used
  VortexConfig source;
  double residual = 0.0;
  int iterations = 0;

  RealField2D field() const { return RealField2D(grid, values, boundary); }
};

HarmonicField solve_harmonic(const VortexConfig& config, const BoundaryPhase& phi_g,
                             const HarmonicSolver& solver);
HarmonicField solve_harmonic(const VortexConfig& config, const BoundaryPhase& phi_g,
                             SolverKind kind, double tol = 1e-10);

// u_a = exp(i(Theta_a + h_a)) on interior nodes, boundary trace filled in. A node that lands
// exactly on a vortex is evaluated at a 1e-12 diagonal offset and noted in provenance.
ComplexField2D reconstruct_outer(const VortexConfig& config, const HarmonicField& h,
                                 std::vector<std::string>* provenance = nullptr);

struct ObservableFunctional {
  StencilKind kind = StencilKind::PointValue;
  Vec2 location = Vec2::Zero();
  int size = 0;
  Stencil stencil;

  Eigen::SparseVector<double> coefficients() const;
  Eigen::VectorXd dense() const;
  double apply(const Eigen::VectorXd& h) const { return stencil.apply(h); }
};

ObservableFunctional build_observable(StencilKind kind, const Vec2& location, const Grid2D& grid);

// grad h_a(a_j) from a classical solve; also serves the full nodal field for W.
class ClassicalFeedback : public FeedbackProvider, public HarmonicProvider {
 public:
  ClassicalFeedback(std::shared_ptr<const HarmonicSolver> solver, BoundaryPhase phi_g);

  std::vector<Vec2> feedback(const VortexConfig& config) const override;
  HarmonicSample harmonic(const VortexConfig& config) const override;
  HarmonicField solve(const VortexConfig& config) const;

 private:
  std::shared_ptr<const HarmonicSolver> solver_;
  BoundaryPhase phi_;
};

}  // namespace hyvort
