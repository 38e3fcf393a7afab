#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hyvort/schrodingerize.hpp"

using namespace hyvort;

namespace {

constexpr double kPi = std::numbers::pi;

VortexConfig default_pair() { return {{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0}; }

struct Problem {
  Grid2D grid;
  SparseOperator K;
  Eigen::MatrixXd S;
  std::shared_ptr<const SpectralOperator> ks;
  Eigen::VectorXd b;
};

Problem harmonic_problem(int level) {
  Problem p{Grid2D(level), assemble_laplacian(Grid2D(level), Scaling::Stiffness), {}, {}, {}};
  const auto bpx = build_bpx(2, level);
  p.S = bpx->factor();
  const Eigen::MatrixXd KS = p.S.transpose() * (p.K.matrix * p.S);
  p.ks = std::make_shared<const SpectralOperator>(0.5 * (KS + KS.transpose()));
  const auto phi = deg2_boundary_phase(p.grid);
  if (level >= 3) {
    p.b = assemble_harmonic_system(default_pair(), phi).b;
  } else {
    // vortices would sit within 2h of the boundary; use smooth boundary data instead
    p.b = apply_dirichlet_rhs(
        p.K, sample_perimeter(p.grid, [](double x, double y) { return std::sin(2 * x) + y * y; }));
  }
  return p;
}

std::shared_ptr<const SpectralOperator> scalar(double k) {
  return std::make_shared<const SpectralOperator>(Eigen::MatrixXd::Constant(1, 1, k));
}

// pipeline: initialize, evolve to T, recover
Recovery run(const AugmentedSystem& aug, double R, int Np, std::optional<double> p_select = {},
             ModeMethod method = ModeMethod::Spectral) {
  const auto s0 = initialize_warped(aug, R, Np);
  const auto s1 = evolve(s0, aug, aug.T, 1, method);
  return recover(s1, aug, p_select);
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(RelaxationTime, ScalarClosedForm) {
  EXPECT_NEAR(choose_relaxation_time(1.0, std::exp(-5.0)), 5.0, 1e-14);
  EXPECT_THROW(choose_relaxation_time(1.0, 1.0), Error);
  EXPECT_THROW(choose_relaxation_time(1.0, 0.0), Error);
  const double eps = 1e-4;
  const auto aug = make_augmented(scalar(1.0), Eigen::VectorXd::Ones(1),
                                  choose_relaxation_time(1.0, eps));
  EXPECT_NEAR(std::abs(aug.exact(aug.T)[0] - 1.0), eps, 1e-15);
}

TEST(RelaxationTime, MatrixCaseAgainstExpm) {
  const auto p = harmonic_problem(3);
  for (double eps : {1e-3, 1e-5}) {
    const Eigen::VectorXd bS = p.S.transpose() * p.b;
    const auto rt = verify_relaxation_time(*p.ks, nullptr, bS, eps);
    EXPECT_EQ(rt.doublings, 0);
    const Eigen::MatrixXd KS = p.ks->matrix();
    const Eigen::VectorXd x = KS.llt().solve(bS);
    const Eigen::MatrixXd E = (-KS * rt.T).exp();
    const Eigen::VectorXd z = x - E * x;
    EXPECT_LE(rel(z, x), eps);
    EXPECT_NEAR(rel(z, x), rt.achieved, 1e-10);
  }
}

TEST(RelaxationTime, DoublesWhenCheckFails) {
  // in the S-norm the slowest mode can be amplified, so the verification may double T
  const auto p = harmonic_problem(3);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto rt = verify_relaxation_time(*p.ks, &p.S, bS, 1e-5, 0.25);
  EXPECT_GE(rt.doublings, 1);
  EXPECT_LE(rt.achieved, 1e-5);
}

TEST(AugmentedSystem, HermitianParts) {
  const auto p = harmonic_problem(2);
  const auto aug = make_augmented(p.ks, p.S.transpose() * p.b, 3.0);
  const auto H1 = aug.H1(), H2 = aug.H2();
  EXPECT_LE((H1 - H1.adjoint()).norm(), 1e-12 * H1.norm());
  EXPECT_LE((H2 - H2.adjoint()).norm(), 1e-12 * H2.norm());
  EXPECT_EQ((H1 + cplx(0, 1) * H2 - aug.Kf().cast<cplx>()).norm(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H1, Eigen::EigenvaluesOnly);
  EXPECT_NEAR(aug.h1_max(), es.eigenvalues().maxCoeff(), 1e-12);
  EXPECT_NEAR(aug.h1_min(), es.eigenvalues().minCoeff(), 1e-12);
  EXPECT_GT(aug.p3(), 0.0);
}

TEST(FourierRegister, WaveNumbers) {
  const FourierRegister r(kPi, 4);
  const Eigen::VectorXd mu = r.wave_numbers();
  EXPECT_DOUBLE_EQ(mu[0], -2.0);
  EXPECT_DOUBLE_EQ(mu[1], -1.0);
  EXPECT_DOUBLE_EQ(mu[2], 0.0);
  EXPECT_DOUBLE_EQ(mu[3], 1.0);
  EXPECT_THROW(FourierRegister(1.0, 12), Error);
  EXPECT_THROW(FourierRegister(-1.0, 16), Error);
}

TEST(FourierRegister, TransformMatchesPhi) {
  const FourierRegister r(2.5, 16);
  Eigen::MatrixXcd Phi(16, 16);
  for (int k = 0; k < 16; ++k)
    for (int l = 0; l < 16; ++l) Phi(k, l) = std::polar(1.0, r.mu(l) * r.p(k));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd X(16, 3);
  for (int i = 0; i < X.size(); ++i) X(i) = cplx(g(rng), g(rng));
  Eigen::MatrixXcd Y = X;
  r.from_fourier(Y);
  EXPECT_LE((Y - Phi * X).norm(), 1e-12 * Y.norm());
  r.to_fourier(Y);
  EXPECT_LE((Y - X).norm(), 1e-12 * X.norm());
}

TEST(Warped, InitialRows) {
  const auto p = harmonic_problem(2);
  const auto aug = make_augmented(p.ks, p.S.transpose() * p.b, 2.0);
  const double R = 4.0;
  const auto s = initialize_warped(aug, R, 64);
  const Eigen::VectorXcd zf = aug.zf0().cast<cplx>();
  EXPECT_EQ((s.W.row(32).transpose() - zf).norm(), 0.0);  // p_32 = 0
  EXPECT_LE((s.W.row(0).transpose() - std::exp(-R) * zf).norm(), 1e-15 * zf.norm());
  EXPECT_EQ(zf.head(p.ks->size()).norm(), 0.0);
}

TEST(Evolve, ZeroTimeAndUnitarity) {
  const auto p = harmonic_problem(3);
  const auto aug = make_augmented(p.ks, p.S.transpose() * p.b, 5.0);
  const auto s0 = initialize_warped(aug, 12.0, 256);
  const auto same = evolve(s0, aug, 0.0);
  EXPECT_EQ((same.W - s0.W).norm(), 0.0);
  for (double t : {0.3, 5.0, 11.0}) {
    const auto s1 = evolve(s0, aug, t, 3);
    EXPECT_LE(std::abs(s1.norm() - s0.norm()), 1e-10 * s0.norm());
  }
}

TEST(Evolve, SpectralMatchesDenseModes) {
  const auto p = harmonic_problem(2);
  const auto aug = make_augmented(p.ks, p.S.transpose() * p.b, 2.5);
  const auto s0 = initialize_warped(aug, 8.0, 64);
  const auto a = evolve(s0, aug, 2.5, 1, ModeMethod::Spectral);
  const auto b = evolve(s0, aug, 2.5, 2, ModeMethod::Dense);
  EXPECT_LE((a.W - b.W).norm(), 1e-11 * a.W.norm());
}

TEST(Evolve, ThreadedIsDeterministic) {
  const auto p = harmonic_problem(3);
  const auto aug = make_augmented(p.ks, p.S.transpose() * p.b, 4.0);
  const auto s0 = initialize_warped(aug, 10.0, 128);
  const auto a = evolve(s0, aug, 4.0, 1, ModeMethod::Spectral, 1);
  const auto b = evolve(s0, aug, 4.0, 1, ModeMethod::Spectral, 4);
  EXPECT_EQ((a.W - b.W).norm(), 0.0);
}

TEST(Evolve, Level2AgainstAugmentedOde) {
  // level 2, R = 8, N_p = 128, compared with exp(K_f T) z_f(0)
  const auto p = harmonic_problem(2);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const double eps = 1e-3;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), eps));
  const Eigen::VectorXd zf = (aug.Kf() * aug.T).exp() * aug.zf0();
  const auto r = run(aug, 8.0, 128);
  EXPECT_LE(rel(r.zf.real(), zf), 1e-6) << "p3 " << r.p3 << " p_k " << r.p_k;
}

TEST(Evolve, Level2AgainstAugmentedOdeSafeTruncation) {
  const auto p = harmonic_problem(2);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const double eps = 1e-3;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), eps));
  const Eigen::VectorXd zf = (aug.Kf() * aug.T).exp() * aug.zf0();
  const auto tr = safe_truncation(aug, 1e-8, 1.0, 0.001);
  const auto r = run(aug, tr.R, tr.Np, aug.p3() + 1.0);
  EXPECT_LE(rel(r.zf.real(), zf), 1e-6) << "R " << tr.R << " Np " << tr.Np;
  EXPECT_LE(r.zf.imag().norm(), 1e-6 * zf.norm());
}

TEST(Recover, ScalarSystem) {
  const double eps = 1e-6;
  const auto aug = make_augmented(scalar(1.0), Eigen::VectorXd::Ones(1),
                                  choose_relaxation_time(1.0, eps));
  const auto tr = safe_truncation(aug, eps);
  const auto r = run(aug, tr.R, tr.Np, aug.p3() + 1.0);
  const double z = r.z()[0];
  EXPECT_GE(z, 1 - 2 * eps) << z - 1;
  EXPECT_LE(z, 1.0) << z - 1;
}

TEST(Recover, ScalarSystemSmallestAdmissiblePoint) {
  const double eps = 1e-6;
  const auto aug = make_augmented(scalar(1.0), Eigen::VectorXd::Ones(1),
                                  choose_relaxation_time(1.0, eps));
  const auto tr = safe_truncation(aug, eps, 0.0);
  const auto r = run(aug, tr.R, tr.Np);
  const double z = r.z()[0];
  EXPECT_GE(z, 1 - 2 * eps) << z - 1;
  EXPECT_LE(z, 1.0) << z - 1;
}

TEST(Recover, WindowConsistency) {
  const auto p = harmonic_problem(3);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), 1e-3));
  const auto r = run(aug, 10.0, 256);
  EXPECT_LE(r.window_discrepancy, 1e-4);
  EXPECT_GT(r.success_probability, 0.0);
  EXPECT_LT(r.success_probability, 1.0);
}

TEST(Recover, WindowConsistencyFineGrid) {
  const auto p = harmonic_problem(3);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), 1e-3));
  const auto tr = safe_truncation(aug, 1e-8, 1.0, 0.001);
  const auto r = recover(evolve(initialize_warped(aug, tr.R, tr.Np), aug, aug.T), aug);
  EXPECT_LE(r.window_discrepancy, 1e-4);
}

TEST(Recover, TruncationTooSmall) {
  const auto aug = make_augmented(scalar(1.0), Eigen::VectorXd::Ones(1), 5.0);
  const auto s = evolve(initialize_warped(aug, 0.5, 16), aug, 5.0);
  try {
    recover(s, aug, 2.0);
    FAIL() << "expected truncation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TruncationTooSmall);
  }
  EXPECT_THROW(recover(s, aug, aug.p3() - 0.1), Error);
}

TEST(Pipeline, OracleEquivalenceLevel3) {
  const auto p = harmonic_problem(3);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const Eigen::VectorXd x = p.ks->matrix().llt().solve(bS);
  for (double eps : {1e-3, 1e-5}) {
    const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), eps));
    const auto tr = safe_truncation(aug, eps);
    const auto r = run(aug, tr.R, tr.Np, aug.p3() + 1.0);
    EXPECT_LE(rel(r.z(), x), 2 * eps) << "eps " << eps;
  }
}

TEST(Pipeline, HarmonicLevel4) {
  const auto p = harmonic_problem(4);
  const double eps = 1e-4;
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), eps));
  const auto tr = safe_truncation(aug, eps);
  const auto r = run(aug, tr.R, tr.Np, aug.p3() + 1.0);
  const Eigen::VectorXd hd = Eigen::MatrixXd(p.K.matrix).llt().solve(p.b);
  EXPECT_LE(rel(p.S * r.z(), hd), 2 * eps);
}

TEST(Pipeline, ConvergenceInNp) {
  const auto p = harmonic_problem(2);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), 1e-3));
  const Eigen::VectorXd zf = (aug.Kf() * aug.T).exp() * aug.zf0();
  const double R = safe_truncation(aug, 1e-8).R;
  double prev = 1e300;
  for (int Np : {256, 512, 1024, 2048, 4096}) {
    const double e = rel(run(aug, R, Np, aug.p3() + 1.0).zf.real(), zf);
    EXPECT_LE(e, prev + 1e-10) << Np;
    prev = e;
  }
}

TEST(Pipeline, ConvergenceInR) {
  const auto p = harmonic_problem(2);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), 1e-3));
  const Eigen::VectorXd zf = (aug.Kf() * aug.T).exp() * aug.zf0();
  // fixed dp = 2^-11 on nested p-grids
  double prev = 1e300;
  for (double R : {8.0, 16.0, 32.0, 64.0}) {
    const int Np = static_cast<int>(2 * R) * 2048;
    const double e = rel(run(aug, R, Np, aug.p3() + 1.0).zf.real(), zf);
    EXPECT_LE(e, prev + 1e-10) << R;
    prev = e;
  }
}

TEST(Observable, SelfOverlap) {
  const auto p = harmonic_problem(3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::VectorXd z(p.ks->size());
  for (auto& v : z) v = g(rng);
  const Eigen::VectorXd h = p.S * z;
  const auto e = estimate_observable(z.cast<cplx>(), h, p.S);
  EXPECT_NEAR(e.value.real(), h.squaredNorm(), 1e-12 * h.squaredNorm());
  EXPECT_NEAR(std::abs(e.overlap), h.squaredNorm() / e.normalization, 1e-12);
  EXPECT_THROW(estimate_observable(z.cast<cplx>(), Eigen::VectorXd::Zero(h.size()), p.S), Error);
}

TEST(Observable, GradientMatchesDirectSolve) {
  const auto p = harmonic_problem(4);
  const double eps = 1e-4;
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto aug = make_augmented(p.ks, bS, choose_relaxation_time(p.ks->lambda_min(), eps));
  const auto tr = safe_truncation(aug, eps);
  const auto r = run(aug, tr.R, tr.Np, aug.p3() + 1.0);
  const Eigen::VectorXd hd = Eigen::MatrixXd(p.K.matrix).llt().solve(p.b);
  const Vec2 a = default_pair().positions[0];
  const auto c = build_observable(StencilKind::GradientX, a, p.grid);
  const double direct = sample_gradient(RealField2D(p.grid, hd), a).x();
  const auto e = estimate_observable(r.zf.head(p.ks->size()), c.dense(), p.S);
  EXPECT_NEAR(e.value.real(), direct, 2 * eps * hd.cwiseAbs().maxCoeff() / p.grid.h);
}

TEST(Observable, ShotNoiseScale) {
  const auto p = harmonic_problem(3);
  const Eigen::VectorXd z = p.ks->matrix().llt().solve(p.S.transpose() * p.b);
  const auto c = build_observable(StencilKind::GradientY, Vec2(0.5, 0.5), p.grid).dense();
  std::mt19937_64 rng(42);
  const long shots = 1000000;
  const auto exact = estimate_observable(z.cast<cplx>(), c, p.S);
  double s1 = 0, s2 = 0;
  const int reps = 100;
  for (int i = 0; i < reps; ++i) {
    const double v = estimate_observable(z.cast<cplx>(), c, p.S, shots, &rng).value.real();
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / reps;
  const double sd = std::sqrt((s2 - reps * mean * mean) / (reps - 1));
  const double predicted = exact.normalization / std::sqrt(double(shots));
  EXPECT_NEAR(sd / predicted, 1.0, 0.3);
}

TEST(Diagnostics, CsvRows) {
  const auto aug = make_augmented(scalar(1.0), Eigen::VectorXd::Ones(1), 3.0);
  const auto s = evolve(initialize_warped(aug, 4.0, 32), aug, 3.0);
  std::ostringstream os;
  write_warped_diagnostics(os, s, aug.p3());
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "p_k,norm_w,norm_recovered");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 32);
}

TEST(SchrodingerSolver, FilterMatchesFullPipeline) {
  EmulatorOptions opt;
  opt.eps = 1e-5;
  const SchrodingerSolver solver(Grid2D(3), opt);
  const auto p = harmonic_problem(3);
  const Eigen::VectorXd bS = p.S.transpose() * p.b;
  const auto& tmpl = solver.augmented_template();
  const auto aug = make_augmented(tmpl.ks, bS, tmpl.T);
  const auto r = run(aug, solver.reg().R, solver.reg().Np, solver.p3() + 1.0);
  EXPECT_EQ(r.k, solver.recovery_row());
  EXPECT_LE(rel(solver.solve_z(p.b), r.z()), 1e-10);
  const Eigen::VectorXd hd = Eigen::MatrixXd(p.K.matrix).llt().solve(p.b);
  EXPECT_LE(rel(solver.solve(p.b), hd), 2 * opt.eps);
}

TEST(SchrodingerSolver, TruncationTooSmall) {
  EmulatorOptions opt;
  opt.R = 1.0;
  opt.Np = 64;
  EXPECT_THROW(SchrodingerSolver(Grid2D(3), opt), Error);
}

TEST(SchrodingerFeedback, HybridStepMatchesDirect) {
  const double eps = 1e-5;
  const Grid2D g(5);
  const auto phi = deg2_boundary_phase(g);
  EmulatorOptions opt;
  opt.eps = eps;
  auto emu = std::make_shared<SchrodingerFeedback>(std::make_shared<SchrodingerSolver>(g, opt), phi);
  auto dir = std::make_shared<ClassicalFeedback>(
      std::make_shared<HarmonicSolver>(g, SolverKind::DirectDense, 1e-12), phi);
  const auto ve = velocity(default_pair(), {LawKind::NLS_M2, emu});
  const auto vd = velocity(default_pair(), {LawKind::NLS_M2, dir});
  for (int j = 0; j < 2; ++j) EXPECT_LE((ve[j] - vd[j]).cwiseAbs().maxCoeff(), 5 * eps);
  const auto he = emu->harmonic(default_pair());
  const auto hd = dir->harmonic(default_pair());
  EXPECT_LE(rel(he.interior, hd.interior), 2 * eps);
}
