#include "hyvort/bpx.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>

#include "hyvort/error.hpp"

namespace hyvort {

namespace {

long ipow(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// shape holds the per-axis sizes; only the first dim entries are used
Eigen::VectorXd prolong_axis(const Eigen::VectorXd& in, std::array<long, 3>& shape, int dim,
                             int axis) {
  long stride = 1;
  for (int a = 0; a < axis; ++a) stride *= shape[a];
  long outer = 1;
  for (int a = axis + 1; a < dim; ++a) outer *= shape[a];
  const long nc = shape[axis], nf = 2 * nc + 1;
  Eigen::VectorXd out(stride * nf * outer);
  for (long o = 0; o < outer; ++o) {
    for (long s = 0; s < stride; ++s) {
      const double* src = in.data() + o * stride * nc + s;
      double* dst = out.data() + o * stride * nf + s;
      for (long i = 0; i < nf; ++i) {
        double v;
        if (i % 2 == 1) {
          v = src[(i / 2) * stride];
        } else {
          const long r = i / 2;  // between coarse r-1 and r
          v = 0.5 * ((r > 0 ? src[(r - 1) * stride] : 0.0) + (r < nc ? src[r * stride] : 0.0));
        }
        dst[i * stride] = v;
      }
    }
  }
  shape[axis] = nf;
  return out;
}

Eigen::VectorXd restrict_axis(const Eigen::VectorXd& in, std::array<long, 3>& shape, int dim,
                              int axis) {
  long stride = 1;
  for (int a = 0; a < axis; ++a) stride *= shape[a];
  long outer = 1;
  for (int a = axis + 1; a < dim; ++a) outer *= shape[a];
  const long nf = shape[axis], nc = (nf - 1) / 2;
  Eigen::VectorXd out(stride * nc * outer);
  for (long o = 0; o < outer; ++o) {
    for (long s = 0; s < stride; ++s) {
      const double* src = in.data() + o * stride * nf + s;
      double* dst = out.data() + o * stride * nc + s;
      for (long i = 0; i < nc; ++i) {
        dst[i * stride] = src[(2 * i + 1) * stride] +
                          0.5 * (src[(2 * i) * stride] + src[(2 * i + 2) * stride]);
      }
    }
  }
  shape[axis] = nc;
  return out;
}

}  // namespace

Eigen::VectorXd prolong(int dim, int coarse_level, const Eigen::VectorXd& v) {
  const long nc = (1L << coarse_level) - 1;
  require(v.size() == ipow(nc, dim), Errc::Dimension, "prolongation input size");
  std::array<long, 3> shape{nc, nc, nc};
  Eigen::VectorXd w = v;
  for (int a = 0; a < dim; ++a) w = prolong_axis(w, shape, dim, a);
  return w;
}

Eigen::VectorXd restrict_transpose(int dim, int fine_level, const Eigen::VectorXd& v) {
  const long nf = (1L << fine_level) - 1;
  require(fine_level >= 2, Errc::Dimension, "cannot restrict below level 1");
  require(v.size() == ipow(nf, dim), Errc::Dimension, "restriction input size");
  std::array<long, 3> shape{nf, nf, nf};
  Eigen::VectorXd w = v;
  for (int a = 0; a < dim; ++a) w = restrict_axis(w, shape, dim, a);
  return w;
}

BPXPreconditioner::BPXPreconditioner(int dim, int level, double weight_offset)
    : dim_(dim), level_(level) {
  require(dim == 2 || dim == 3, Errc::Parameter, "BPX supports d = 2 or 3");
  require(level >= 1, Errc::Parameter, "BPX level must be >= 1");
  require(dim * level <= 60, Errc::Resource, "BPX level too large");
  size_ = ipow((1L << level) - 1, dim);
  require(size_ <= kMaxNodes, Errc::Resource, "BPX size guard: more than 2e5 nodes");
  weights_.assign(level + 1, 0.0);
  for (int l = 1; l <= level; ++l) {
    const double hl = std::ldexp(1.0, -l);
    weights_[l] = std::pow(hl, 2.0 - dim + weight_offset);
  }
}

void BPXPreconditioner::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  require(v.size() == size_, Errc::Dimension, "bpx_apply input length");
  std::vector<Eigen::VectorXd> r(level_ + 1);
  r[level_] = v;
  for (int l = level_ - 1; l >= 1; --l) r[l] = restrict_transpose(dim_, l + 1, r[l + 1]);
  Eigen::VectorXd y = weights_[1] * r[1];
  for (int l = 1; l < level_; ++l) {
    y = prolong(dim_, l, y);
    y += weights_[l + 1] * r[l + 1];
  }
  out = std::move(y);
}

Eigen::VectorXd BPXPreconditioner::apply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out;
  apply(v, out);
  return out;
}

const Eigen::MatrixXd& BPXPreconditioner::assembled() const {
  std::call_once(dense_once_, [this] {
    require(size_ <= kMaxDenseNodes, Errc::Resource, "dense BPX assembly size guard");
    dense_.resize(size_, size_);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(size_), col;
    for (long j = 0; j < size_; ++j) {
      e[j] = 1.0;
      apply(e, col);
      dense_.col(j) = col;
      e[j] = 0.0;
    }
    // symmetrize rounding differences between the two triangles
    dense_ = 0.5 * (dense_ + dense_.transpose()).eval();
  });
  return dense_;
}

const Eigen::MatrixXd& BPXPreconditioner::factor() const {
  std::call_once(factor_once_, [this] {
    Eigen::LLT<Eigen::MatrixXd> llt(assembled());
    require(llt.info() == Eigen::Success, Errc::Numerical, "BPX matrix is not positive definite");
    factor_ = llt.matrixL();
  });
  return factor_;
}

std::shared_ptr<const BPXPreconditioner> build_bpx(int dim, int level, double weight_offset) {
  return std::make_shared<const BPXPreconditioner>(dim, level, weight_offset);
}

Eigen::VectorXd PreconditionedOperator::apply(const Eigen::VectorXd& z) const {
  const auto& S = bpx->factor();
  const Eigen::VectorXd y = S * z;
  return S.transpose() * (K * y);
}

Eigen::MatrixXd PreconditionedOperator::dense() const {
  const auto& S = bpx->factor();
  Eigen::MatrixXd KS_ = K * S;
  Eigen::MatrixXd out = S.transpose() * KS_;
  return 0.5 * (out + out.transpose());
}

PreconditionedOperator preconditioned_operator(const SparseOperator& K,
                                               std::shared_ptr<const BPXPreconditioner> bpx,
                                               std::optional<double> shift,
                                               SpectrumMethod method) {
  require(bpx != nullptr, Errc::Parameter, "null preconditioner");
  require(K.dimension() == bpx->size() && K.space_dim == bpx->dim() && K.level == bpx->level(),
          Errc::Dimension, "operator and preconditioner dimensions disagree");
  PreconditionedOperator op;
  op.bpx = bpx;
  op.K = K.matrix;
  if (shift) {
    require(*shift >= 0.0, Errc::Parameter, "shift must be non-negative");
    SpMat I(K.dimension(), K.dimension());
    I.setIdentity();
    op.K = K.matrix + *shift * I;
    op.shift = *shift;
    op.shifted = true;
  }
  if (method == SpectrumMethod::Auto)
    method = op.size() <= 1100 ? SpectrumMethod::Dense : SpectrumMethod::Lanczos;
  if (method == SpectrumMethod::Dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense(), Eigen::EigenvaluesOnly);
    op.lambda_min = es.eigenvalues()(0);
    op.lambda_max = es.eigenvalues()(op.size() - 1);
    op.dense_spectrum = true;
  } else {
    // S^T K S is similar to B K, self-adjoint in the K inner product
    const SpMat& A = op.K;
    RealMap applyA = [&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = A * x; };
    RealMap applyB = [&bpx](const Eigen::VectorXd& x, Eigen::VectorXd& y) { bpx->apply(x, y); };
    const auto est = lanczos_extremal(applyA, applyB, op.size(), 300, 1e-10);
    op.lambda_min = est.lambda_min;
    op.lambda_max = est.lambda_max;
  }
  return op;
}

PoincareEstimate measure_poincare(const SparseOperator& K, double shift) {
  PoincareEstimate p;
  if (K.dimension() <= 1100) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(K.matrix),
                                                      Eigen::EigenvaluesOnly);
    p.lambda_min_K = es.eigenvalues()(0);
  } else {
    // the low end of the Laplacian spectrum is clustered; give Lanczos room
    const SpMat& A = K.matrix;
    RealMap applyA = [&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = A * x; };
    const auto est = lanczos_extremal(applyA, nullptr, K.dimension(), 600, 1e-12);
    p.lambda_min_K = est.lambda_min;
  }
  p.c_p = shift / p.lambda_min_K;
  return p;
}

SolveReport bpx_pcg(const SpMat& K, const BPXPreconditioner& bpx, const Eigen::VectorXd& b,
                    Eigen::VectorXd& x, double tol, int max_iter) {
  require(K.rows() == bpx.size() && b.size() == K.rows(), Errc::Dimension, "bpx_pcg sizes");
  RealMap A = [&K](const Eigen::VectorXd& v, Eigen::VectorXd& y) { y = K * v; };
  RealMap M = [&bpx](const Eigen::VectorXd& v, Eigen::VectorXd& y) { bpx.apply(v, y); };
  return pcg(A, M, b, x, tol, max_iter);
}

}  // namespace hyvort
