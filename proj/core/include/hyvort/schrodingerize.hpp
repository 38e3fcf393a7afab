#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "hyvort/bpx.hpp"
#include "hyvort/harmonic.hpp"

namespace hyvort {

// Dense K_S with its eigendecomposition K_S = V diag(lambda) V^T, ascending.
class SpectralOperator {
 public:
  explicit SpectralOperator(Eigen::MatrixXd KS);

  int size() const { return static_cast<int>(KS_.rows()); }
  const Eigen::MatrixXd& matrix() const { return KS_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const { return V_; }
  double lambda_min() const { return lambda_[0]; }
  double lambda_max() const { return lambda_[size() - 1]; }

 private:
  Eigen::MatrixXd KS_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd V_;
};

// T = c_t log(1/eps) / lambda_min.
double choose_relaxation_time(double lambda_min, double eps, double c_t = 1.0);

struct RelaxationTime {
  double T = 0.0;
  int doublings = 0;
  double achieved = 0.0;  // ||x - S z(T)|| / ||x|| with x = S K_S^{-1} b_S
};

// Starts from choose_relaxation_time and doubles T until the relaxation error from z(0) = z0
// is at most eps, measured exactly in the eigenbasis (S null means S = I).
RelaxationTime verify_relaxation_time(const SpectralOperator& ks, const Eigen::MatrixXd* S,
                                      const Eigen::VectorXd& b_S, double eps, double c_t = 1.0,
                                      const Eigen::VectorXd* z0 = nullptr, int max_doublings = 8);

// dz_f/dt = K_f z_f with K_f = [[-K_S, I/T], [0, 0]], z_f(0) = [z0; T b_S].
struct AugmentedSystem {
  std::shared_ptr<const SpectralOperator> ks;
  Eigen::VectorXd b_S;
  Eigen::VectorXd z0;
  double T = 0.0;

  int n() const { return ks->size(); }
  int size() const { return 2 * n(); }
  Eigen::VectorXd zf0() const;
  Eigen::MatrixXd Kf() const;
  Eigen::MatrixXcd H1() const;
  Eigen::MatrixXcd H2() const;
  // Extremal eigenvalues of H1 from its 2x2 blocks in the eigenbasis of K_S.
  double h1_max() const;
  double h1_min() const;
  // p3 = max(lambda_max(H1), 0) T.
  double p3() const { return std::max(h1_max(), 0.0) * T; }
  // Exact z(t) of the relaxation ODE.
  Eigen::VectorXd exact(double t) const;
};

AugmentedSystem make_augmented(std::shared_ptr<const SpectralOperator> ks, Eigen::VectorXd b_S,
                               double T, std::optional<Eigen::VectorXd> z0 = std::nullopt);

struct FourierRegister {
  double R = 0.0;
  int Np = 0;
  FourierRegister(double R, int Np);
  double dp() const { return 2.0 * R / Np; }
  double p(int k) const { return -R + k * dp(); }
  double mu(int l) const;
  Eigen::VectorXd p_grid() const;
  Eigen::VectorXd wave_numbers() const;
  // W <- Phi^{-1} W and W <- Phi W, column-wise, with Phi = (exp(i mu_l p_k))_{k,l}.
  void to_fourier(Eigen::MatrixXcd& W) const;
  void from_fourier(Eigen::MatrixXcd& W) const;
};

struct WarpedState {
  FourierRegister reg;
  Eigen::MatrixXcd W;  // N_p x 2N, row k is w(p_k)
  double time = 0.0;

  double norm() const { return W.norm(); }
};

// Guard on N_p * 2N complex entries of a materialized warped state.
inline constexpr long kMaxWarpedEntries = 20'000'000;

WarpedState initialize_warped(const AugmentedSystem& aug, double R, int Np);

enum class ModeMethod { Spectral, Dense };

// Unitary evolution by exp(-i Htilde t) one Fourier mode at a time. Spectral uses the 2x2
// blocks of mu H1 - H2 in the eigenbasis of K_S; Dense diagonalizes each 2N x 2N mode
// Hamiltonian (small problems, cross-check). threads > 1 splits the modes over threads.
WarpedState evolve(const WarpedState& state, const AugmentedSystem& aug, double t,
                   int substeps = 1, ModeMethod method = ModeMethod::Spectral, int threads = 1);

struct Recovery {
  Eigen::VectorXcd zf;      // e^{p_k} W[k,:]
  int k = -1;
  double p_k = 0.0;
  double p3 = 0.0;
  double window_discrepancy = 0.0;   // max relative spread over p_k in [p3, p3 + 1]
  double success_probability = 0.0;  // mass of ||W||^2 in that window

  Eigen::VectorXd z() const { return zf.head(zf.size() / 2).real(); }
};

// Smallest p_k >= p_select (default p3); p_select below p3 is a parameter error.
Recovery recover(const WarpedState& state, const AugmentedSystem& aug,
                 std::optional<double> p_select = std::nullopt);

struct Truncation {
  double R = 0.0;
  int Np = 0;
};

// Truncation for recovery at p3 + p_offset. Left-travelling components must not wrap back
// into the recovery point: 2R >= |lambda_min(H1)| T + 2 (p3 + p_offset) + log(1/eps) + 2.
// The e^{-|p|} kink limits the Fourier discretization to O(dp^2) at distance O(1) from p3,
// so the default max_dp is min(0.02, sqrt(eps)).
Truncation safe_truncation(const AugmentedSystem& aug, double eps, double p_offset = 1.0,
                           std::optional<double> max_dp = std::nullopt);

struct ObservableEstimate {
  cplx value = 0.0;
  double normalization = 0.0;  // ||S^T c|| ||z||
  cplx overlap = 0.0;          // <c_S | z / ||z||>
};

// O = <S^T c, z>; with shots > 0 a Gaussian of std normalization / sqrt(shots) is added to the
// real part.
ObservableEstimate estimate_observable(const Eigen::VectorXcd& z, const Eigen::VectorXd& c,
                                       const Eigen::MatrixXd& S, long shots = 0,
                                       std::mt19937_64* rng = nullptr);

// Diagnostic CSV: p_k, ||W[k,:]||, ||e^{p_k} W[k,:]|| for admissible rows.
void write_warped_diagnostics(std::ostream& os, const WarpedState& state, double p3);

struct EmulatorOptions {
  double eps = 1e-6;
  std::optional<double> R;          // default from safe_truncation
  std::optional<int> Np;
  std::optional<double> p_offset = 1.0;  // recover at p3 + offset; nullopt = smallest p_k >= p3
  long shots = 0;
  std::uint64_t seed = 1;
};

// Emulated quantum linear solver for the harmonic problem on one grid. With z(0) = 0 the
// recovered row is a fixed diagonal filter in the eigenbasis of K_S, so the per-mode
// propagators are applied once at construction and each solve costs two dense products.
class SchrodingerSolver {
 public:
  SchrodingerSolver(const Grid2D& grid, const EmulatorOptions& options);

  const Grid2D& grid() const { return grid_; }
  const SparseOperator& K() const { return K_; }
  const Eigen::MatrixXd& S() const { return *S_; }
  const AugmentedSystem& augmented_template() const { return aug_; }
  const FourierRegister& reg() const { return reg_; }
  int recovery_row() const { return k_; }
  double p3() const { return p3_; }
  const Eigen::VectorXd& filter() const { return g_; }
  long shots() const { return opt_.shots; }
  std::uint64_t seed() const { return opt_.seed; }

  // z(T) recovered for K h = b, and h = S z.
  Eigen::VectorXd solve_z(const Eigen::VectorXd& b) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return *S_ * solve_z(b); }

 private:
  Grid2D grid_;
  EmulatorOptions opt_;
  SparseOperator K_;
  std::shared_ptr<const Eigen::MatrixXd> S_;
  AugmentedSystem aug_;
  FourierRegister reg_{1.0, 2};
  int k_ = -1;
  double p3_ = 0.0;
  Eigen::VectorXd g_;
};

// Feedback grad h_a(a_j) from emulator observables <S^T c, z>.
class SchrodingerFeedback : public FeedbackProvider, public HarmonicProvider {
 public:
  SchrodingerFeedback(std::shared_ptr<const SchrodingerSolver> solver, BoundaryPhase phi_g);

  std::vector<Vec2> feedback(const VortexConfig& config) const override;
  HarmonicSample harmonic(const VortexConfig& config) const override;

 private:
  std::shared_ptr<const SchrodingerSolver> solver_;
  BoundaryPhase phi_;
  mutable std::mutex rng_mutex_;
  mutable std::mt19937_64 rng_;
};

}  // namespace hyvort
