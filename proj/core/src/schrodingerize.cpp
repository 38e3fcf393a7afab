#include "hyvort/schrodingerize.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <ostream>
#include <thread>

namespace hyvort {

namespace {

using Mat2c = Eigen::Matrix2cd;

// exp(-i G t) for the Hermitian 2x2 G = [[a, beta], [conj(beta), d]].
Mat2c propagator(double a, double d, cplx beta, double t) {
  const double s = 0.5 * (a + d), delta = 0.5 * (a - d);
  const double omega = std::sqrt(delta * delta + std::norm(beta));
  const double cs = std::cos(omega * t);
  const double sn = omega > 0.0 ? std::sin(omega * t) / omega : t;
  const cplx I(0.0, 1.0);
  Mat2c U;
  U(0, 0) = cs - I * sn * delta;
  U(0, 1) = -I * sn * beta;
  U(1, 0) = -I * sn * std::conj(beta);
  U(1, 1) = cs + I * sn * delta;
  return std::exp(-I * s * t) * U;
}

// Propagator of mode (mu, lambda_m) for K_f built with relaxation time T.
Mat2c mode_propagator(double mu, double lambda, double T, double t) {
  const double c = 0.5 / T;
  return propagator(-mu * lambda, 0.0, cplx(mu, 1.0) * c, t);
}

template <class F>
void parallel_for(int count, int threads, F&& f) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk, hi = std::min(count, lo + chunk);
    pool.emplace_back([lo, hi, &f] {
      for (int i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SpectralOperator::SpectralOperator(Eigen::MatrixXd KS) : KS_(std::move(KS)) {
  require(KS_.rows() == KS_.cols() && KS_.rows() > 0, Errc::Dimension, "K_S must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(KS_);
  require(es.info() == Eigen::Success, Errc::Numerical, "K_S eigendecomposition failed");
  lambda_ = es.eigenvalues();
  V_ = es.eigenvectors();
  require(lambda_[0] > 0.0, Errc::Numerical, "K_S is not positive definite");
}

double choose_relaxation_time(double lambda_min, double eps, double c_t) {
  require(eps > 0.0 && eps < 1.0, Errc::Parameter, "relaxation accuracy must lie in (0,1)");
  require(lambda_min > 0.0, Errc::Parameter, "lambda_min must be positive");
  require(c_t > 0.0, Errc::Parameter, "C_T must be positive");
  return c_t * std::log(1.0 / eps) / lambda_min;
}

RelaxationTime verify_relaxation_time(const SpectralOperator& ks, const Eigen::MatrixXd* S,
                                      const Eigen::VectorXd& b_S, double eps, double c_t,
                                      const Eigen::VectorXd* z0, int max_doublings) {
  const auto& V = ks.eigenvectors();
  const auto& lam = ks.eigenvalues();
  require(b_S.size() == ks.size(), Errc::Dimension, "b_S length");
  const Eigen::VectorXd zs_t = (V.transpose() * b_S).cwiseQuotient(lam);
  Eigen::VectorXd d0 = -zs_t;
  if (z0) d0 += V.transpose() * *z0;
  const Eigen::VectorXd zs = V * zs_t;
  const double xn = S ? (*S * zs).norm() : zs.norm();
  RelaxationTime r;
  r.T = choose_relaxation_time(ks.lambda_min(), eps, c_t);
  for (;;) {
    const Eigen::VectorXd e = V * (d0.array() * (-lam.array() * r.T).exp()).matrix();
    r.achieved = xn > 0.0 ? (S ? (*S * e).norm() : e.norm()) / xn : 0.0;
    if (r.achieved <= eps || r.doublings >= max_doublings) break;
    r.T *= 2.0;
    ++r.doublings;
  }
  require(r.achieved <= eps, Errc::Numerical, "relaxation time verification failed");
  return r;
}

Eigen::VectorXd AugmentedSystem::zf0() const {
  Eigen::VectorXd z(size());
  z << z0, T * b_S;
  return z;
}

Eigen::MatrixXd AugmentedSystem::Kf() const {
  const int m = n();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  K.topLeftCorner(m, m) = -ks->matrix();
  K.topRightCorner(m, m).diagonal().setConstant(1.0 / T);
  return K;
}

Eigen::MatrixXcd AugmentedSystem::H1() const {
  const Eigen::MatrixXd K = Kf();
  return (0.5 * (K + K.transpose())).cast<cplx>();
}

Eigen::MatrixXcd AugmentedSystem::H2() const {
  const Eigen::MatrixXd K = Kf();
  return (K - K.transpose()).cast<cplx>() / cplx(0.0, 2.0);
}

double AugmentedSystem::h1_max() const {
  const double c = 0.5 / T, l = ks->lambda_min();
  return 0.5 * (-l + std::sqrt(l * l + 4 * c * c));
}

double AugmentedSystem::h1_min() const {
  const double c = 0.5 / T, l = ks->lambda_max();
  return 0.5 * (-l - std::sqrt(l * l + 4 * c * c));
}

Eigen::VectorXd AugmentedSystem::exact(double t) const {
  const auto& V = ks->eigenvectors();
  const auto& lam = ks->eigenvalues();
  const Eigen::VectorXd zs = (V.transpose() * b_S).cwiseQuotient(lam);
  const Eigen::VectorXd d = V.transpose() * z0 - zs;
  return V * (zs.array() + d.array() * (-lam.array() * t).exp()).matrix();
}

AugmentedSystem make_augmented(std::shared_ptr<const SpectralOperator> ks, Eigen::VectorXd b_S,
                               double T, std::optional<Eigen::VectorXd> z0) {
  require(ks != nullptr, Errc::Parameter, "null spectral operator");
  require(b_S.size() == ks->size(), Errc::Dimension, "b_S length");
  require(T > 0.0, Errc::Parameter, "relaxation time must be positive");
  AugmentedSystem a;
  a.z0 = z0 ? std::move(*z0) : Eigen::VectorXd::Zero(ks->size());
  require(a.z0.size() == ks->size(), Errc::Dimension, "z0 length");
  a.ks = std::move(ks);
  a.b_S = std::move(b_S);
  a.T = T;
  return a;
}

FourierRegister::FourierRegister(double R_, int Np_) : R(R_), Np(Np_) {
  require(R > 0.0, Errc::Parameter, "truncation R must be positive");
  require(is_power_of_two(Np) && Np >= 2, Errc::Parameter, "N_p must be a power of two");
}

double FourierRegister::mu(int l) const { return std::numbers::pi * (l - Np / 2) / R; }

Eigen::VectorXd FourierRegister::p_grid() const {
  Eigen::VectorXd p(Np);
  for (int k = 0; k < Np; ++k) p[k] = this->p(k);
  return p;
}

Eigen::VectorXd FourierRegister::wave_numbers() const {
  Eigen::VectorXd m(Np);
  for (int l = 0; l < Np; ++l) m[l] = mu(l);
  return m;
}

// Phi_{kl} = (-1)^{k + l - Np/2} exp(2 pi i k l / Np), so both directions are plain DFTs
// with alternating signs.
void FourierRegister::to_fourier(Eigen::MatrixXcd& W) const {
  require(W.rows() == Np, Errc::Dimension, "p-register length");
  Eigen::FFT<double> fft;
  Eigen::VectorXcd in(Np), out(Np);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    for (int k = 0; k < Np; ++k) in[k] = (k % 2 ? -1.0 : 1.0) * W(k, j);
    fft.fwd(out, in);
    for (int l = 0; l < Np; ++l) W(l, j) = ((l - Np / 2) % 2 ? -1.0 : 1.0) * out[l] / double(Np);
  }
}

void FourierRegister::from_fourier(Eigen::MatrixXcd& W) const {
  require(W.rows() == Np, Errc::Dimension, "p-register length");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  Eigen::VectorXcd in(Np), out(Np);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    for (int l = 0; l < Np; ++l) in[l] = ((l - Np / 2) % 2 ? -1.0 : 1.0) * W(l, j);
    fft.inv(out, in);
    for (int k = 0; k < Np; ++k) W(k, j) = (k % 2 ? -1.0 : 1.0) * out[k];
  }
}

WarpedState initialize_warped(const AugmentedSystem& aug, double R, int Np) {
  FourierRegister reg(R, Np);
  require(static_cast<long>(Np) * aug.size() <= kMaxWarpedEntries, Errc::Resource,
          "warped state too large");
  const Eigen::VectorXd zf = aug.zf0();
  WarpedState s{reg, Eigen::MatrixXcd(Np, aug.size()), 0.0};
  for (int k = 0; k < Np; ++k) s.W.row(k) = std::exp(-std::abs(reg.p(k))) * zf.transpose().cast<cplx>();
  return s;
}

WarpedState evolve(const WarpedState& state, const AugmentedSystem& aug, double t, int substeps,
                   ModeMethod method, int threads) {
  require(substeps >= 1, Errc::Parameter, "substeps must be >= 1");
  require(state.W.cols() == aug.size(), Errc::Dimension, "warped state width");
  WarpedState out = state;
  out.time = state.time + t;
  if (t == 0.0) return out;
  const int n = aug.n(), Np = state.reg.Np;
  const double tau = t / substeps;
  Eigen::MatrixXcd& W = out.W;
  state.reg.to_fourier(W);
  if (method == ModeMethod::Spectral) {
    const auto& V = aug.ks->eigenvectors();
    const auto& lam = aug.ks->eigenvalues();
    Eigen::MatrixXcd Yz = W.leftCols(n) * V, Yb = W.rightCols(n) * V;
    parallel_for(Np, threads, [&](int l) {
      const double mu = state.reg.mu(l);
      for (int m = 0; m < n; ++m) {
        const Mat2c U = mode_propagator(mu, lam[m], aug.T, tau);
        cplx a = Yz(l, m), b = Yb(l, m);
        for (int s = 0; s < substeps; ++s) {
          const cplx a2 = U(0, 0) * a + U(0, 1) * b;
          b = U(1, 0) * a + U(1, 1) * b;
          a = a2;
        }
        require(std::isfinite(std::abs(a)) && std::isfinite(std::abs(b)), Errc::Numerical,
                "mode exponential failed at mode " + std::to_string(l));
        Yz(l, m) = a;
        Yb(l, m) = b;
      }
    });
    W.leftCols(n) = Yz * V.transpose();
    W.rightCols(n) = Yb * V.transpose();
  } else {
    const Eigen::MatrixXcd H1 = aug.H1(), H2 = aug.H2();
    parallel_for(Np, threads, [&](int l) {
      const Eigen::MatrixXcd G = state.reg.mu(l) * H1 - H2;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
      require(es.info() == Eigen::Success, Errc::Numerical,
              "mode exponential failed at mode " + std::to_string(l));
      const Eigen::VectorXcd ph =
          (es.eigenvalues().cast<cplx>() * cplx(0.0, -tau)).array().exp().matrix();
      const Eigen::MatrixXcd E = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
      Eigen::VectorXcd row = W.row(l).transpose();
      for (int s = 0; s < substeps; ++s) row = E * row;
      W.row(l) = row.transpose();
    });
  }
  state.reg.from_fourier(W);
  return out;
}

Recovery recover(const WarpedState& state, const AugmentedSystem& aug,
                 std::optional<double> p_select) {
  Recovery r;
  r.p3 = aug.p3();
  const double target = p_select ? *p_select : r.p3;
  require(target >= r.p3, Errc::Parameter, "p_select below p3");
  const auto& reg = state.reg;
  for (int k = 0; k < reg.Np; ++k) {
    if (reg.p(k) >= target) {
      r.k = k;
      break;
    }
  }
  if (r.k < 0)
    fail(Errc::TruncationTooSmall, "no grid point p_k >= " + std::to_string(target) +
                                       " inside (-R, R); increase R");
  r.p_k = reg.p(r.k);
  r.zf = std::exp(r.p_k) * state.W.row(r.k).transpose();
  const double rn = r.zf.norm();
  double mass = 0.0;
  for (int k = 0; k < reg.Np; ++k) {
    const double p = reg.p(k);
    if (p < r.p3 || p > r.p3 + 1.0) continue;
    mass += state.W.row(k).squaredNorm();
    if (rn > 0.0) {
      const double d = (std::exp(p) * state.W.row(k).transpose() - r.zf).norm() / rn;
      r.window_discrepancy = std::max(r.window_discrepancy, d);
    }
  }
  const double total = state.W.squaredNorm();
  r.success_probability = total > 0.0 ? mass / total : 0.0;
  return r;
}

Truncation safe_truncation(const AugmentedSystem& aug, double eps, double p_offset,
                           std::optional<double> max_dp) {
  require(eps > 0.0 && eps < 1.0, Errc::Parameter, "eps must lie in (0,1)");
  require(p_offset >= 0.0, Errc::Parameter, "p_offset must be non-negative");
  const double dp_max = max_dp ? *max_dp : std::min(0.02, std::sqrt(eps));
  require(dp_max > 0.0, Errc::Parameter, "max_dp must be positive");
  const double p_sel = aug.p3() + p_offset;
  double R = 0.5 * (std::abs(aug.h1_min()) * aug.T + 2.0 * p_sel + std::log(1.0 / eps) + 2.0);
  R = std::max(R, p_sel + 2.0);
  int Np = 16;
  while (2.0 * R / Np > dp_max) Np *= 2;
  return {R, Np};
}

ObservableEstimate estimate_observable(const Eigen::VectorXcd& z, const Eigen::VectorXd& c,
                                       const Eigen::MatrixXd& S, long shots,
                                       std::mt19937_64* rng) {
  require(S.rows() == c.size() && S.cols() == z.size(), Errc::Dimension,
          "observable dimensions");
  const Eigen::VectorXd cS = S.transpose() * c;
  ObservableEstimate e;
  const double nc = cS.norm(), nz = z.norm();
  e.normalization = nc * nz;
  require(e.normalization > 0.0, Errc::DegenerateObservable, "zero observable normalization");
  e.overlap = (cS / nc).cast<cplx>().dot(z / nz);  // cS real, so no conjugation effect
  e.value = e.normalization * e.overlap;
  if (shots > 0) {
    require(rng != nullptr, Errc::Parameter, "shot mode needs a random generator");
    std::normal_distribution<double> g(0.0, e.normalization / std::sqrt(double(shots)));
    e.value += g(*rng);
  }
  return e;
}

void write_warped_diagnostics(std::ostream& os, const WarpedState& state, double p3) {
  os << "p_k,norm_w,norm_recovered\n";
  os.precision(17);
  for (int k = 0; k < state.reg.Np; ++k) {
    const double p = state.reg.p(k), nw = state.W.row(k).norm();
    os << p << "," << nw << ",";
    if (p >= p3) os << std::exp(p) * nw;
    os << "\n";
  }
}

SchrodingerSolver::SchrodingerSolver(const Grid2D& grid, const EmulatorOptions& options)
    : grid_(grid), opt_(options), K_(assemble_laplacian(grid, Scaling::Stiffness)) {
  require(opt_.eps > 0.0 && opt_.eps < 1.0, Errc::Parameter, "eps must lie in (0,1)");
  const auto bpx = build_bpx(2, grid.level);
  S_ = std::make_shared<const Eigen::MatrixXd>(bpx->factor());
  const Eigen::MatrixXd& S = *S_;
  Eigen::MatrixXd KS = S.transpose() * (K_.matrix * S);
  auto ks = std::make_shared<const SpectralOperator>(0.5 * (KS + KS.transpose()));

  // constant boundary data (exact solution 1) as the representative right-hand side
  const Eigen::VectorXd b1 =
      apply_dirichlet_rhs(K_, Eigen::VectorXd(Eigen::VectorXd::Ones(grid.perimeter_count())));
  const auto rt = verify_relaxation_time(*ks, &S, S.transpose() * b1, opt_.eps);
  aug_ = make_augmented(ks, Eigen::VectorXd::Zero(ks->size()), rt.T);

  const double offset = opt_.p_offset ? *opt_.p_offset : 0.0;
  Truncation tr = safe_truncation(aug_, opt_.eps, offset);
  if (opt_.R) tr.R = *opt_.R;
  if (opt_.Np) tr.Np = *opt_.Np;
  reg_ = FourierRegister(tr.R, tr.Np);
  p3_ = aug_.p3();
  const double target = p3_ + offset;
  for (int k = 0; k < reg_.Np; ++k) {
    if (reg_.p(k) >= target) {
      k_ = k;
      break;
    }
  }
  if (k_ < 0) fail(Errc::TruncationTooSmall, "recovery point outside the truncated p-box");

  // psi in Fourier space, then the (z, b) -> z entry of every mode propagator
  Eigen::MatrixXcd psi(reg_.Np, 1);
  for (int k = 0; k < reg_.Np; ++k) psi(k, 0) = std::exp(-std::abs(reg_.p(k)));
  reg_.to_fourier(psi);
  const double pk = reg_.p(k_), T = aug_.T;
  Eigen::VectorXcd phase(reg_.Np);
  for (int l = 0; l < reg_.Np; ++l)
    phase[l] = std::polar(1.0, reg_.mu(l) * pk) * psi(l, 0);
  const auto& lam = ks->eigenvalues();
  g_.resize(ks->size());
  for (int m = 0; m < ks->size(); ++m) {
    cplx acc = 0.0;
    for (int l = 0; l < reg_.Np; ++l) acc += phase[l] * mode_propagator(reg_.mu(l), lam[m], T, T)(0, 1);
    g_[m] = (std::exp(pk) * T * acc).real();
  }
}

Eigen::VectorXd SchrodingerSolver::solve_z(const Eigen::VectorXd& b) const {
  require(b.size() == K_.dimension(), Errc::Dimension, "right-hand side length");
  const auto& V = aug_.ks->eigenvectors();
  const Eigen::VectorXd bt = V.transpose() * (S_->transpose() * b);
  return V * g_.cwiseProduct(bt);
}

SchrodingerFeedback::SchrodingerFeedback(std::shared_ptr<const SchrodingerSolver> solver,
                                         BoundaryPhase phi_g)
    : solver_(std::move(solver)), phi_(std::move(phi_g)) {
  require(solver_ != nullptr, Errc::Parameter, "null emulator");
  require(solver_->grid() == phi_.grid, Errc::Dimension, "emulator and boundary grids differ");
  rng_.seed(solver_->seed());
}

std::vector<Vec2> SchrodingerFeedback::feedback(const VortexConfig& config) const {
  const Grid2D& grid = solver_->grid();
  const Eigen::VectorXd trace = unwrap_boundary_phase(config, phi_);
  const Eigen::VectorXcd z =
      solver_->solve_z(apply_dirichlet_rhs(solver_->K(), trace)).cast<cplx>();
  std::vector<Vec2> g(config.size());
  std::lock_guard<std::mutex> lock(rng_mutex_);
  for (int j = 0; j < config.size(); ++j) {
    for (int d = 0; d < 2; ++d) {
      const auto c = build_observable(d == 0 ? StencilKind::GradientX : StencilKind::GradientY,
                                      config.positions[j], grid);
      g[j][d] = estimate_observable(z, c.dense(), solver_->S(), solver_->shots(), &rng_)
                    .value.real();
    }
  }
  return g;
}

HarmonicSample SchrodingerFeedback::harmonic(const VortexConfig& config) const {
  const Eigen::VectorXd trace = unwrap_boundary_phase(config, phi_);
  return {solver_->grid(), solver_->solve(apply_dirichlet_rhs(solver_->K(), trace)), trace};
}

}  // namespace hyvort
