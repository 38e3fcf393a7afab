#pragma once

#include <Eigen/Core>

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "hyvort/grid2d.hpp"
#include "hyvort/krylov.hpp"

namespace hyvort {

// Additive multilevel preconditioner B = sum_l c_l P_l P_l^T on the dyadic hierarchy of
// [0,1]^d, levels 1..L, tensor-product linear interpolation, c_l = h_l^{2-d+offset}.
class BPXPreconditioner {
 public:
  static constexpr long kMaxNodes = 200000;
  static constexpr long kMaxDenseNodes = 6000;

  // weight_offset != 0 perturbs the level weights (negative control only).
  BPXPreconditioner(int dim, int level, double weight_offset = 0.0);

  int dim() const { return dim_; }
  int level() const { return level_; }
  int size() const { return static_cast<int>(size_); }
  double weight(int l) const { return weights_[l]; }

  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

  // Dense B and its lower Cholesky factor S (B = S S^T), built on first use.
  const Eigen::MatrixXd& assembled() const;
  const Eigen::MatrixXd& factor() const;

 private:
  int dim_, level_;
  long size_;
  std::vector<double> weights_;  // indexed by level, entry 0 unused
  mutable std::once_flag dense_once_, factor_once_;
  mutable Eigen::MatrixXd dense_, factor_;
};

std::shared_ptr<const BPXPreconditioner> build_bpx(int dim, int level, double weight_offset = 0.0);

// Tensor prolongation from level lc to lc+1 and its transpose, on d-dimensional interior arrays.
Eigen::VectorXd prolong(int dim, int coarse_level, const Eigen::VectorXd& v);
Eigen::VectorXd restrict_transpose(int dim, int fine_level, const Eigen::VectorXd& v);

enum class SpectrumMethod { Auto, Dense, Lanczos };

struct PreconditionedOperator {
  std::shared_ptr<const BPXPreconditioner> bpx;
  SpMat K;                   // K or K + shift I
  double shift = 0.0;
  bool shifted = false;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool dense_spectrum = false;

  double cond() const { return lambda_max / lambda_min; }
  int size() const { return static_cast<int>(K.rows()); }
  // y = S^T (K + shift I) S z
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
  // Dense K_S; requires the dense factor.
  Eigen::MatrixXd dense() const;
};

PreconditionedOperator preconditioned_operator(const SparseOperator& K,
                                               std::shared_ptr<const BPXPreconditioner> bpx,
                                               std::optional<double> shift = std::nullopt,
                                               SpectrumMethod method = SpectrumMethod::Auto);

// Smallest eigenvalue of K and the Poincare ratio C_P = shift / lambda_min(K).
struct PoincareEstimate {
  double lambda_min_K = 0.0;
  double c_p = 0.0;
};
PoincareEstimate measure_poincare(const SparseOperator& K, double shift);

// PCG on K x = b preconditioned by B.
SolveReport bpx_pcg(const SpMat& K, const BPXPreconditioner& bpx, const Eigen::VectorXd& b,
                    Eigen::VectorXd& x, double tol, int max_iter = 1000);

}  // namespace hyvort
