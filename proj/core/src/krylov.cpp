#include "hyvort/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "hyvort/error.hpp"

namespace hyvort {

SolveReport pcg(const RealMap& A, const RealMap& M, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                double tol, int max_iter, bool throw_on_failure) {
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);
  SolveReport rep;
  const double nb = b.norm();
  if (nb == 0.0) {
    x.setZero();
    rep.converged = true;
    rep.history.push_back(0.0);
    return rep;
  }
  Eigen::VectorXd r(n), z(n), p(n), q(n);
  A(x, q);
  r = b - q;
  double res = r.norm() / nb;
  rep.history.push_back(res);
  if (res <= tol) {
    rep.relative_residual = res;
    rep.converged = true;
    return rep;
  }
  if (M) M(r, z); else z = r;
  p = z;
  double rho = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    A(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      throw SolverError("pcg breakdown: operator not positive definite", rep.history);
    }
    const double alpha = rho / pq;
    x += alpha * p;
    r -= alpha * q;
    res = r.norm() / nb;
    rep.history.push_back(res);
    rep.iterations = it;
    if (res <= tol) {
      rep.relative_residual = res;
      rep.converged = true;
      return rep;
    }
    if (M) M(r, z); else z = r;
    const double rho_new = r.dot(z);
    p = z + (rho_new / rho) * p;
    rho = rho_new;
  }
  rep.relative_residual = res;
  if (throw_on_failure) {
    throw SolverError("pcg reached the iteration cap " + std::to_string(max_iter) +
                          " with relative residual " + std::to_string(res),
                      rep.history);
  }
  return rep;
}

SolveReport cocg(const ComplexMap& A, const ComplexMap& M, const Eigen::VectorXcd& b,
                 Eigen::VectorXcd& x, double tol, int max_iter, bool throw_on_failure) {
  using C = std::complex<double>;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Eigen::VectorXcd::Zero(n);
  SolveReport rep;
  const double nb = b.norm();
  if (nb == 0.0) {
    x.setZero();
    rep.converged = true;
    rep.history.push_back(0.0);
    return rep;
  }
  Eigen::VectorXcd r(n), z(n), p(n), q(n);
  A(x, q);
  r = b - q;
  double res = r.norm() / nb;
  rep.history.push_back(res);
  if (res <= tol) {
    rep.relative_residual = res;
    rep.converged = true;
    return rep;
  }
  if (M) M(r, z); else z = r;
  p = z;
  // bilinear (unconjugated) products; plain loops keep the complex arithmetic inlined
  auto bilinear = [n](const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
    double re = 0.0, im = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double a = u[k].real(), bb = u[k].imag(), c = v[k].real(), d = v[k].imag();
      re += a * c - bb * d;
      im += a * d + bb * c;
    }
    return C(re, im);
  };
  C rho = bilinear(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A(p, q);
    const C pq = bilinear(p, q);
    if (std::abs(pq) == 0.0) throw SolverError("cocg breakdown", rep.history);
    const C alpha = rho / pq;
    const double ar = alpha.real(), ai = alpha.imag();
    double rr = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double pr = p[k].real(), pi = p[k].imag(), qr = q[k].real(), qi = q[k].imag();
      x[k] += C(ar * pr - ai * pi, ar * pi + ai * pr);
      r[k] -= C(ar * qr - ai * qi, ar * qi + ai * qr);
      rr += std::norm(r[k]);
    }
    res = std::sqrt(rr) / nb;
    rep.history.push_back(res);
    rep.iterations = it;
    if (res <= tol) {
      rep.relative_residual = res;
      rep.converged = true;
      return rep;
    }
    if (M) M(r, z); else z = r;
    const C rho_new = bilinear(r, z);
    const C beta = rho_new / rho;
    const double br = beta.real(), bi = beta.imag();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double pr = p[k].real(), pi = p[k].imag();
      p[k] = z[k] + C(br * pr - bi * pi, br * pi + bi * pr);
    }
    rho = rho_new;
  }
  rep.relative_residual = res;
  if (throw_on_failure) {
    throw SolverError("cocg reached the iteration cap " + std::to_string(max_iter) +
                          " with relative residual " + std::to_string(res),
                      rep.history);
  }
  return rep;
}

SpectrumEstimate lanczos_extremal(const RealMap& A, const RealMap& B, int n, int max_iter,
                                  double tol, std::uint64_t seed) {
  require(n > 0, Errc::Dimension, "lanczos on empty operator");
  const int kmax = std::min(max_iter, n);
  const bool weighted = static_cast<bool>(B);
  // Weighted: M = B A, inner product <x,y>_A, G holds A q_i. Plain: M = A, Euclidean, G = Q.
  Eigen::MatrixXd Q(n, kmax + 1), G(n, weighted ? kmax + 1 : 0);
  std::vector<double> alpha, beta;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(n), w(n), aw(n);
  for (int i = 0; i < n; ++i) q[i] = nd(rng);
  if (weighted) {
    A(q, aw);
    const double nrm = std::sqrt(q.dot(aw));
    Q.col(0) = q / nrm;
    G.col(0) = aw / nrm;
  } else {
    Q.col(0) = q / q.norm();
  }
  auto gcol = [&](int i) { return weighted ? G.col(i) : Q.col(i); };

  SpectrumEstimate est;
  double prev_min = 0, prev_max = 0;
  int stable = 0;
  for (int j = 0; j < kmax; ++j) {
    if (weighted) B(G.col(j), w); else A(Q.col(j), w);
    const double a = gcol(j).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) w -= gcol(i).dot(w) * Q.col(i);
    }
    double b;
    if (weighted) {
      A(w, aw);
      b = std::sqrt(std::max(w.dot(aw), 0.0));
    } else {
      b = w.norm();
    }
    const int k = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    est.lambda_min = es.eigenvalues()(0);
    est.lambda_max = es.eigenvalues()(k - 1);
    est.iterations = k;
    const bool same = std::abs(est.lambda_min - prev_min) <= tol * std::abs(est.lambda_min) &&
                      std::abs(est.lambda_max - prev_max) <= tol * std::abs(est.lambda_max);
    stable = same ? stable + 1 : 0;
    prev_min = est.lambda_min;
    prev_max = est.lambda_max;
    if (stable >= 3 || b <= 1e-14 * std::abs(a) || k == kmax) break;
    beta.push_back(b);
    Q.col(k) = w / b;
    if (weighted) G.col(k) = aw / b;
  }
  return est;
}

}  // namespace hyvort
