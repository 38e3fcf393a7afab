#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace hyvort {

using RealMap = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using ComplexMap = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // relative residual after each iteration, entry 0 is initial
};

// Preconditioned conjugate gradients for SPD A with SPD preconditioner M (null means identity).
// x holds the initial guess on entry. Throws SolverError if the cap is hit and throw_on_failure.
SolveReport pcg(const RealMap& A, const RealMap& M, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                double tol, int max_iter, bool throw_on_failure = true);

// Conjugate orthogonal CG for complex symmetric A (A^T = A), optional preconditioner.
SolveReport cocg(const ComplexMap& A, const ComplexMap& M, const Eigen::VectorXcd& b,
                 Eigen::VectorXcd& x, double tol, int max_iter, bool throw_on_failure = true);

struct SpectrumEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int iterations = 0;
};

// Extremal eigenvalues of B*A where A, B are SPD, by Lanczos in the A inner product with full
// reorthogonalization. B null means B = I (plain eigenvalues of A).
SpectrumEstimate lanczos_extremal(const RealMap& A, const RealMap& B, int n, int max_iter = 200,
                                  double tol = 1e-10, std::uint64_t seed = 7);

}  // namespace hyvort
