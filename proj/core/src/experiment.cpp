#include "hyvort/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "hyvort/bpx.hpp"
#include "hyvort/error.hpp"
#include "hyvort/field_io.hpp"
#include "hyvort/filament3d.hpp"
#include "hyvort/schrodingerize.hpp"

#ifndef HYVORT_VERSION
#define HYVORT_VERSION "unknown"
#endif

namespace hyvort {

namespace {

struct Providers {
  std::shared_ptr<const FeedbackProvider> feedback;
  std::shared_ptr<const HarmonicProvider> harmonic;
};

Providers make_providers(const ExperimentConfig& c, const Grid2D& grid,
                         const BoundaryPhase& phi) {
  if (c.feedback == FeedbackMode::Direct) {
    auto solver = std::make_shared<const HarmonicSolver>(grid, c.solver, c.solver_tol);
    auto p = std::make_shared<const ClassicalFeedback>(solver, phi);
    return {p, p};
  }
  EmulatorOptions opt;
  opt.eps = c.emulator_eps;
  opt.R = c.emulator_R;
  opt.Np = c.emulator_Np;
  opt.shots = c.shots;
  opt.seed = c.seed;
  auto solver = std::make_shared<const SchrodingerSolver>(grid, opt);
  auto p = std::make_shared<const SchrodingerFeedback>(solver, phi);
  return {p, p};
}

// Records the last feedback vector handed out.
class RecordingFeedback : public FeedbackProvider {
 public:
  explicit RecordingFeedback(std::shared_ptr<const FeedbackProvider> inner)
      : inner_(std::move(inner)) {}
  std::vector<Vec2> feedback(const VortexConfig& config) const override {
    last_ = inner_->feedback(config);
    return last_;
  }
  const std::vector<Vec2>& last() const { return last_; }

 private:
  std::shared_ptr<const FeedbackProvider> inner_;
  mutable std::vector<Vec2> last_;
};

VortexConfig advance(const VortexConfig& a, const MotionLaw& law, double dt, Integrator in) {
  return in == Integrator::Explicit ? step_explicit(a, law, dt) : step_midpoint(a, law, dt);
}

int step_count(double T, double dt) {
  const long n = std::lround(T / dt);
  require(n >= 1 && std::abs(n * dt - T) <= 1e-9 * T, Errc::Parameter,
          "T must be an integer multiple of dt");
  return static_cast<int>(n);
}

ComplexField2D reconstruct(const VortexConfig& a, const HarmonicProvider& p) {
  HarmonicSample s = p.harmonic(a);
  HarmonicField h{s.grid, std::move(s.interior), std::move(s.boundary), a};
  return reconstruct_outer(a, h);
}

ReducedRun run_reduced(const ExperimentConfig& c, LawKind kind, const Providers& prov) {
  ReducedRun run;
  run.kind = kind;
  const int N = step_count(c.T, c.dt);
  auto rec = std::make_shared<RecordingFeedback>(prov.feedback);
  const bool coupled = kind == LawKind::NLS_M2 || kind == LawKind::GL_Bounded;
  MotionLaw law{kind, coupled ? rec : nullptr};
  VortexConfig a = c.initial;
  a.time = 0.0;
  validate(a);
  run.trajectory.reserve(N + 1);
  run.trajectory.push_back(a);
  for (int m = 0; m < N; ++m) {
    try {
      a = advance(a, law, c.dt, c.integrator);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "reduced step " << m << " at t = " << m * c.dt << ": " << e.what();
      throw Error(e.code(), os.str());
    }
    a.time = (m + 1) * c.dt;
    if (coupled) run.feedback.push_back(rec->last());
    run.trajectory.push_back(a);
  }
  run.final_gradients = prov.feedback->feedback(a);
  run.reconstruction = reconstruct(a, *prov.harmonic);
  return run;
}

NLSParams nls_params(const ExperimentConfig& c, double eps, int level) {
  NLSParams p;
  p.eps = eps;
  p.level = level;
  p.dt = c.nls_dt;
  p.T = c.T;
  p.boundary = c.boundary;
  p.boundary_amplitude = c.boundary_amplitude;
  p.initial = c.initial;
  p.initial.time = 0.0;
  p.solver_tol = c.nls_tol;
  return p;
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name,
                       std::vector<std::string>& files) {
  std::ofstream os(dir / name);
  if (!os) fail(Errc::Resource, "cannot write " + (dir / name).string());
  os << std::setprecision(17);
  files.push_back(name);
  return os;
}

void write_observables(std::ostream& os, const ReducedRun& r) {
  os << "j,ax,ay,dh_dx,dh_dy\n";
  const auto& a = r.trajectory.back();
  for (int j = 0; j < a.size(); ++j)
    os << j + 1 << ',' << a.positions[j].x() << ',' << a.positions[j].y() << ','
       << r.final_gradients[j].x() << ',' << r.final_gradients[j].y() << '\n';
}

void write_positions(std::ostream& os, double eps, const std::string& source,
                     const VortexConfig& a) {
  for (int j = 0; j < a.size(); ++j)
    os << eps << ',' << source << ',' << j + 1 << ',' << a.positions[j].x() << ','
       << a.positions[j].y() << '\n';
}

std::string eps_tag(double eps) {
  std::ostringstream os;
  os << eps;
  return os.str();
}

}  // namespace

std::shared_ptr<const FeedbackProvider> make_feedback(const ExperimentConfig& config,
                                                      const Grid2D& grid,
                                                      const BoundaryPhase& phi_g) {
  return make_providers(config, grid, phi_g).feedback;
}

ReducedRun run_m1(const ExperimentConfig& config) {
  const Grid2D grid(config.level);
  const auto phi = make_boundary_phase(grid, config.boundary, config.boundary_amplitude);
  return run_reduced(config, LawKind::NLS_M1, make_providers(config, grid, phi));
}

ReducedRun run_m2(const ExperimentConfig& config) {
  const Grid2D grid(config.level);
  const auto phi = make_boundary_phase(grid, config.boundary, config.boundary_amplitude);
  return run_reduced(config, LawKind::NLS_M2, make_providers(config, grid, phi));
}

std::vector<SweepRow> SweepResult::rows() const {
  std::vector<SweepRow> r;
  for (const auto& c : cases) r.push_back(c.row);
  return r;
}

SweepCase run_sweep_case(const ExperimentConfig& config, double eps) {
  const int level = sweep_level(eps, config.min_level, config.max_level);
  ExperimentConfig c = config;
  c.level = level;
  c.feedback = FeedbackMode::Direct;
  c.solver = SolverKind::DirectSparse;
  const Grid2D grid(level);
  const auto phi = make_boundary_phase(grid, c.boundary, c.boundary_amplitude);
  const auto prov = make_providers(c, grid, phi);
  const auto m1 = run_reduced(c, LawKind::NLS_M1, prov);
  const auto m2 = run_reduced(c, LawKind::NLS_M2, prov);

  const NLSParams p = nls_params(c, eps, level);
  const NLSRun nls = evolve_nls(p, {0.0, c.T});
  const ComplexField2D& u = nls.snapshots.back().field;

  SweepCase out;
  out.m1 = m1.trajectory.back();
  out.m2 = m2.trajectory.back();
  out.reference = u;
  out.energy_drift = std::abs(nls.snapshots.back().energy - nls.snapshots.front().energy) /
                     std::abs(nls.snapshots.front().energy);
  try {
    out.nls = locate_vortices(u, c.initial.size());
  } catch (const Error&) {
    out.nls = VortexConfig{};
  }
  const auto mask = build_mask(out.m2, c.r_mask, grid);
  out.row = {eps, masked_relative_error(u, m1.reconstruction, mask),
             masked_relative_error(u, m2.reconstruction, mask), level, nls.dt};
  const auto a1 = align_phase(u, m1.reconstruction, mask);
  const auto a2 = align_phase(u, m2.reconstruction, mask);
  out.phase_m1 = phase_mismatch(u, ComplexField2D(grid, a1.aligned), mask);
  out.phase_m2 = phase_mismatch(u, ComplexField2D(grid, a2.aligned), mask);
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  const int n = static_cast<int>(config.eps_list.size());
  SweepResult res;
  res.cases.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](int i) {
    try {
      res.cases[i] = run_sweep_case(config, config.eps_list[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int threads = std::min(config.threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::mutex m;
    int next = 0;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        while (true) {
          int i;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next >= n) return;
            i = next++;
          }
          work(i);
        }
      });
    for (auto& t : pool) t.join();
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "sweep eps = " + eps_tag(config.eps_list[i]) + ": " + e.what());
    }
  }
  if (n >= 2) {
    std::vector<double> e1, e2;
    for (const auto& c : res.cases) {
      e1.push_back(c.row.e_m1);
      e2.push_back(c.row.e_m2);
    }
    res.slope_m1 = loglog_slope(config.eps_list, e1);
    res.slope_m2 = loglog_slope(config.eps_list, e2);
  }
  return res;
}

bool CheckReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

SchrodCheck schrodinger_pipeline_check(double eps, double R, int Np) {
  const Grid2D grid(3);
  const SparseOperator K = assemble_laplacian(grid, Scaling::Stiffness);
  const Eigen::MatrixXd S = build_bpx(2, 3)->factor();
  const Eigen::MatrixXd KS = S.transpose() * (K.matrix * S);
  auto ks = std::make_shared<const SpectralOperator>(0.5 * (KS + KS.transpose()));
  const VortexConfig pair{{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0};
  const Eigen::VectorXd b = assemble_harmonic_system(pair, deg2_boundary_phase(grid)).b;
  const Eigen::VectorXd h = Eigen::SimplicialLDLT<SpMat>(K.matrix).solve(b);
  const auto aug = make_augmented(ks, S.transpose() * b,
                                  choose_relaxation_time(ks->lambda_min(), eps));
  const auto s0 = initialize_warped(aug, R, Np);
  const auto s1 = evolve(s0, aug, aug.T);
  const auto rec = recover(s1, aug);
  SchrodCheck out;
  out.R = R;
  out.Np = Np;
  out.p3 = aug.p3();
  out.oracle_error = (S * rec.z() - h).norm() / h.norm();
  out.norm_drift = std::abs(s1.norm() - s0.norm()) / s0.norm();
  out.window_discrepancy = rec.window_discrepancy;
  return out;
}

SchrodCheck schrodinger_pipeline_check(double eps, std::optional<double> max_dp) {
  const Grid2D grid(3);
  const SparseOperator K = assemble_laplacian(grid, Scaling::Stiffness);
  const Eigen::MatrixXd S = build_bpx(2, 3)->factor();
  const Eigen::MatrixXd KS = S.transpose() * (K.matrix * S);
  auto ks = std::make_shared<const SpectralOperator>(0.5 * (KS + KS.transpose()));
  const VortexConfig pair{{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0};
  const Eigen::VectorXd b = assemble_harmonic_system(pair, deg2_boundary_phase(grid)).b;
  const Eigen::VectorXd h = Eigen::SimplicialLDLT<SpMat>(K.matrix).solve(b);
  const auto aug = make_augmented(ks, S.transpose() * b,
                                  choose_relaxation_time(ks->lambda_min(), eps));
  const auto tr = safe_truncation(aug, eps, 1.0, max_dp);
  const auto s0 = initialize_warped(aug, tr.R, tr.Np);
  const auto s1 = evolve(s0, aug, aug.T);
  const auto rec = recover(s1, aug, aug.p3() + 1.0);
  SchrodCheck out;
  out.R = tr.R;
  out.Np = tr.Np;
  out.p3 = aug.p3();
  out.oracle_error = (S * rec.z() - h).norm() / h.norm();
  out.norm_drift = std::abs(s1.norm() - s0.norm()) / s0.norm();
  out.window_discrepancy = rec.window_discrepancy;
  return out;
}

CircleLaw filament_circle_law(double R0, int nodes, double dt, double stop_radius,
                              int snapshot_every, std::ostream* curves) {
  auto c = make_circle(Vec3(0.5, 0.5, 0.5), R0, nodes);
  CircleLaw out;
  double t = 0.0;
  for (int m = 0;; ++m) {
    const Vec3 o = c.centroid();
    double R = 0.0;
    for (const auto& x : c.nodes) R += (x - o).norm();
    R /= c.size();
    out.t.push_back(t);
    out.radius.push_back(R);
    const double exact = R0 * R0 - 2 * t;
    if (exact > 0)
      out.max_relative_error = std::max(out.max_relative_error, std::abs(R * R - exact) / exact);
    if (curves && snapshot_every > 0 && m % snapshot_every == 0)
      write_curve(*curves, c, m, m == 0);
    if (R <= stop_radius) break;
    bool remeshed = false;
    c = curvature_flow_step(c, dt, &remeshed);
    out.remeshes += remeshed;
    t += dt;
  }
  return out;
}

CheckReport run_checks(const ExperimentConfig& config) {
  CheckReport rep;
  auto add = [&rep](std::string name, bool ok, double measured, double threshold,
                    std::string detail) {
    rep.checks.push_back({std::move(name), ok, measured, threshold, std::move(detail)});
  };

  // BPX spectral uniformity, 2D levels 3-6
  double cmin = 1e300, cmax = 0.0;
  for (int level = 3; level <= 6; ++level) {
    const auto K = assemble_laplacian(Grid2D(level), Scaling::Stiffness);
    const auto op = preconditioned_operator(K, build_bpx(2, level, config.bpx_weight_offset));
    rep.spectra.push_back({2, level, op.lambda_min, op.lambda_max});
    cmin = std::min(cmin, op.cond());
    cmax = std::max(cmax, op.cond());
  }
  add("bpx_condition_variation", cmax / cmin <= 1.5, cmax / cmin, 1.5,
      "max/min cond(K_S), 2D levels 3-6");

  // PCG iteration counts, 2D levels 4-7
  int imin = 1 << 30, imax = 0;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> g;
  for (int level = 4; level <= 7; ++level) {
    const auto K = assemble_laplacian(Grid2D(level), Scaling::Stiffness);
    Eigen::VectorXd xt(K.dimension());
    for (int i = 0; i < xt.size(); ++i) xt[i] = g(rng);
    const Eigen::VectorXd b = K.matrix * xt;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(K.dimension());
    const auto r =
        bpx_pcg(K.matrix, *build_bpx(2, level, config.bpx_weight_offset), b, x, 1e-10, 5000);
    imin = std::min(imin, r.iterations);
    imax = std::max(imax, r.iterations);
  }
  add("bpx_pcg_iteration_spread", imax - imin <= 3, imax - imin, 3,
      "iterations to 1e-10, 2D levels 4-7: " + std::to_string(imin) + ".." +
          std::to_string(imax));

  // shifted 3D operator bounds, levels 2-4
  {
    double worst = -1e300;
    for (int level = 2; level <= 4; ++level) {
      const auto K = assemble_laplacian(Grid3D(level), Scaling::Stiffness);
      const double shift = std::pow(K.h(), 3);
      const auto b = build_bpx(3, level, config.bpx_weight_offset);
      const auto op = preconditioned_operator(K, b);
      const auto sh = preconditioned_operator(K, b, shift);
      const auto cp = measure_poincare(K, shift);
      rep.spectra.push_back({3, level, op.lambda_min, op.lambda_max});
      worst = std::max(worst, op.lambda_min - sh.lambda_min);
      worst = std::max(worst, sh.lambda_max - (1 + cp.c_p) * op.lambda_max);
    }
    add("shifted_operator_bounds", worst <= 1e-10, worst, 1e-10,
        "max violation of lambda_min(K~_S) >= lambda_min(K_S), lambda_max(K~_S) <= (1+C_P) "
        "lambda_max(K_S), 3D levels 2-4");
  }

  // Schrodingerization oracle equivalence with the safe truncation
  {
    const double eps = 1e-5;
    const auto s = schrodinger_pipeline_check(eps, 1e-3);
    add("schrodinger_oracle", s.oracle_error <= 2 * eps, s.oracle_error, 2 * eps,
        "level 3, R = " + fmt(s.R) + ", N_p = " + std::to_string(s.Np));
    add("schrodinger_norm", s.norm_drift <= 1e-10, s.norm_drift, 1e-10, "relative ||W|| drift");
    add("schrodinger_window", s.window_discrepancy <= 1e-4, s.window_discrepancy, 1e-4,
        "recovery window [p3, p3 + 1]");
  }

  // motion-law identity, level 7
  {
    const Grid2D grid(7);
    const auto phi = deg2_boundary_phase(grid);
    ClassicalFeedback fb(std::make_shared<const HarmonicSolver>(grid, SolverKind::DirectSparse),
                         phi);
    const VortexConfig pair{{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0};
    const auto r = motion_law_identity_residual(pair, fb, 1e-3);
    add("motion_law_identity", r.residual <= 0.05 * r.grad_w_norm, r.residual / r.grad_w_norm,
        0.05, "|J grad W + 2 grad H| / |grad W|, level 7");
  }

  // filament circle law
  {
    const auto law = filament_circle_law(0.3, 128, 1e-5, 0.1);
    add("filament_circle_law", law.max_relative_error <= 0.01, law.max_relative_error, 0.01,
        "R0 = 0.3, n = 128, dt = 1e-5, until R = 0.1");
  }
  return rep;
}

namespace {

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& c,
                    const std::vector<std::string>& files, double wall, int exit_code,
                    const nlohmann::ordered_json& summary) {
  nlohmann::ordered_json j;
  j["program"] = "hyvort";
  j["version"] = HYVORT_VERSION;
  j["experiment"] = c.experiment;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : config_entries(c)) cfg[k] = v;
  j["config"] = cfg;
  j["files"] = files;
  j["summary"] = summary;
  j["exit_code"] = exit_code;
  j["wall_seconds"] = wall;
  std::ofstream os(dir / "manifest.json");
  if (!os) fail(Errc::Resource, "cannot write manifest.json");
  os << j.dump(2) << '\n';
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.out);
  std::filesystem::create_directories(dir);
  RunOutcome out;
  auto& files = out.files;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  const std::string& ex = config.experiment;

  if (ex == "m1" || ex == "m2") {
    const auto r = ex == "m1" ? run_m1(config) : run_m2(config);
    {
      auto os = open_out(dir, "trajectory_" + ex + ".csv", files);
      write_trajectory(os, r.trajectory);
    }
    {
      auto os = open_out(dir, "observables_" + ex + ".csv", files);
      write_observables(os, r);
    }
    if (ex == "m2") {
      auto os = open_out(dir, "feedback_m2.csv", files);
      os << "t,j,dh_dx,dh_dy\n";
      for (std::size_t m = 0; m < r.feedback.size(); ++m)
        for (std::size_t j = 0; j < r.feedback[m].size(); ++j)
          os << r.trajectory[m].time << ',' << j + 1 << ',' << r.feedback[m][j].x() << ','
             << r.feedback[m][j].y() << '\n';
    }
    write_field((dir / ("field_" + ex + "_T.txt")).string(), r.reconstruction,
                "u_" + ex + "_T");
    files.push_back("field_" + ex + "_T.txt");
    const auto& a = r.trajectory.back();
    for (int j = 0; j < a.size(); ++j) {
      summary["a" + std::to_string(j + 1)] = {a.positions[j].x(), a.positions[j].y()};
      log << ex << " a" << j + 1 << "(T) = (" << fmt(a.positions[j].x()) << ", "
          << fmt(a.positions[j].y()) << ")\n";
    }
  } else if (ex == "sweep") {
    const auto res = run_sweep(config);
    {
      auto os = open_out(dir, "sweep.csv", files);
      write_sweep_csv(os, res.rows());
    }
    {
      auto os = open_out(dir, "sweep_positions.csv", files);
      os << "eps,source,j,x,y\n";
      for (const auto& c : res.cases) {
        write_positions(os, c.row.eps, "m1", c.m1);
        write_positions(os, c.row.eps, "m2", c.m2);
        write_positions(os, c.row.eps, "nls", c.nls);
      }
    }
    for (const auto& c : res.cases) {
      const Grid2D grid(c.row.level);
      for (const auto& [tag, ph] : {std::pair{"m1", &c.phase_m1}, std::pair{"m2", &c.phase_m2}}) {
        const std::string name = "phase_mismatch_" + std::string(tag) + "_eps" +
                                 eps_tag(c.row.eps) + ".txt";
        write_field((dir / name).string(), grid, ph->cast<cplx>(),
                    "phase_mismatch_" + std::string(tag));
        files.push_back(name);
      }
      log << "eps " << c.row.eps << " level " << c.row.level << " E_M1 " << fmt(c.row.e_m1)
          << " E_M2 " << fmt(c.row.e_m2) << " ratio " << fmt(c.row.ratio()) << '\n';
    }
    summary["slope_m1"] = res.slope_m1;
    summary["slope_m2"] = res.slope_m2;
    log << "log-log slope E_M1 " << fmt(res.slope_m1) << ", E_M2 " << fmt(res.slope_m2) << '\n';
  } else if (ex == "schrod-check") {
    const double eps = config.emulator_eps;
    const auto safe = schrodinger_pipeline_check(eps, 1e-3);
    auto os = open_out(dir, "schrod_check.csv", files);
    os << "truncation,R,Np,p3,oracle_error,norm_drift,window_discrepancy\n";
    auto row = [&os](const std::string& name, const SchrodCheck& s) {
      os << name << ',' << s.R << ',' << s.Np << ',' << s.p3 << ',' << s.oracle_error << ','
         << s.norm_drift << ',' << s.window_discrepancy << '\n';
    };
    row("safe", safe);
    if (config.emulator_R && config.emulator_Np)
      row("configured", schrodinger_pipeline_check(eps, *config.emulator_R, *config.emulator_Np));
    const bool ok = safe.oracle_error <= 2 * eps && safe.norm_drift <= 1e-10 &&
                    safe.window_discrepancy <= 1e-4;
    log << "schrod-check eps " << eps << " R " << fmt(safe.R) << " Np " << safe.Np
        << " oracle " << fmt(safe.oracle_error) << " norm " << fmt(safe.norm_drift)
        << " window " << fmt(safe.window_discrepancy) << (ok ? " PASS" : " FAIL") << '\n';
    summary["oracle_error"] = safe.oracle_error;
    out.exit_code = ok ? 0 : 1;
  } else if (ex == "gl-demo") {
    const NLSParams p = nls_params(config, config.eps, config.level);
    const NLSRun run = evolve_nls(p);
    {
      auto os = open_out(dir, "nls_vortices.csv", files);
      os << "t,energy,j,x,y\n";
      for (const auto& s : run.snapshots) {
        VortexConfig v;
        try {
          v = locate_vortices(s.field, config.initial.size());
        } catch (const Error& e) {
          log << "t = " << s.time << ": " << e.what() << '\n';
        }
        for (int j = 0; j < v.size(); ++j)
          os << s.time << ',' << s.energy << ',' << j + 1 << ',' << v.positions[j].x() << ','
             << v.positions[j].y() << '\n';
      }
    }
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
      const std::string name = "field_nls_" + std::to_string(k) + ".txt";
      write_field((dir / name).string(), run.snapshots[k].field,
                  "nls_t" + fmt(run.snapshots[k].time));
      files.push_back(name);
    }
    const Grid2D grid(config.level);
    const auto phi = make_boundary_phase(grid, config.boundary, config.boundary_amplitude);
    const auto prov = make_providers(config, grid, phi);
    for (auto [kind, name] : {std::pair{LawKind::GL_Free, "gl_free"},
                              std::pair{LawKind::GL_Bounded, "gl_bounded"}}) {
      const auto r = run_reduced(config, kind, prov);
      auto os = open_out(dir, std::string("trajectory_") + name + ".csv", files);
      write_trajectory(os, r.trajectory);
    }
    summary["energy_initial"] = run.snapshots.front().energy;
    summary["energy_final"] = run.snapshots.back().energy;
    summary["nls_dt"] = run.dt;
    log << "gl-demo eps " << config.eps << " level " << config.level << " steps " << run.steps
        << " energy " << fmt(run.snapshots.front().energy) << " -> "
        << fmt(run.snapshots.back().energy) << '\n';
  } else if (ex == "filament-demo") {
    CircleLaw law;
    {
      auto os = open_out(dir, "filament_curves.csv", files);
      law = filament_circle_law(config.filament_radius, config.filament_nodes, config.filament_dt,
                                config.filament_stop_radius, 500, &os);
    }
    {
      auto os = open_out(dir, "circle_law.csv", files);
      os << "t,R,R2,R2_exact\n";
      const double R0 = config.filament_radius;
      for (std::size_t k = 0; k < law.t.size(); k += 100)
        os << law.t[k] << ',' << law.radius[k] << ',' << law.radius[k] * law.radius[k] << ','
           << R0 * R0 - 2 * law.t[k] << '\n';
    }
    const Grid3D g3(config.london_level);
    const double R = std::min(config.filament_radius, 0.5 - 3 * g3.h);
    const auto ring = make_circle(Vec3(0.5, 0.5, 0.5), R, config.filament_nodes);
    const auto H = solve_london(ring, g3, 1e-10, config.threads);
    {
      const Grid2D slice(config.london_level);
      const int k = (g3.n - 1) / 2;
      Eigen::VectorXcd v(slice.interior_count());
      for (int j = 0; j < g3.n; ++j)
        for (int i = 0; i < g3.n; ++i) {
          const int r = g3.index(i, j, k);
          v[i + g3.n * j] = cplx(H.H[0][r], H.H[1][r]);
        }
      write_field((dir / "london_slice_z0.5.txt").string(), slice, v, "london_Hx_plus_iHy");
      files.push_back("london_slice_z0.5.txt");
    }
    {
      auto os = open_out(dir, "london_green.csv", files);
      os << "x,y,z,Hx,Hy,Hz,Gx,Gy,Gz\n";
      for (double dx : {0.0, 0.5 * R, 1.5 * R}) {
        const Vec3 x(0.5 + dx, 0.5, 0.5);
        const Vec3 a = H.evaluate(x), b = green_superposition(ring, x).value;
        os << x.x() << ',' << x.y() << ',' << x.z() << ',' << a.x() << ',' << a.y() << ','
           << a.z() << ',' << b.x() << ',' << b.y() << ',' << b.z() << '\n';
      }
    }
    summary["circle_law_max_relative_error"] = law.max_relative_error;
    summary["remeshes"] = law.remeshes;
    summary["london_iterations"] = H.reports[0].iterations;
    log << "filament-demo circle law max rel error " << fmt(law.max_relative_error)
        << ", London BPX iterations " << H.reports[0].iterations << '\n';
  } else if (ex == "checks") {
    const auto rep = run_checks(config);
    {
      auto os = open_out(dir, "checks.csv", files);
      os << "check,passed,measured,threshold,detail\n";
      for (const auto& c : rep.checks)
        os << c.name << ',' << (c.passed ? 1 : 0) << ',' << c.measured << ',' << c.threshold
           << ",\"" << c.detail << "\"\n";
    }
    {
      auto os = open_out(dir, "spectra.csv", files);
      os << "dim,level,lambda_min,lambda_max,cond\n";
      for (const auto& s : rep.spectra)
        os << s.dim << ',' << s.level << ',' << s.lambda_min << ',' << s.lambda_max << ','
           << s.cond() << '\n';
    }
    for (const auto& s : rep.spectra)
      log << "spectrum d=" << s.dim << " level " << s.level << " lambda_min " << fmt(s.lambda_min)
          << " lambda_max " << fmt(s.lambda_max) << '\n';
    for (const auto& c : rep.checks)
      log << (c.passed ? "PASS " : "FAIL ") << c.name << " measured " << fmt(c.measured)
          << " threshold " << fmt(c.threshold) << " (" << c.detail << ")\n";
    out.exit_code = rep.passed() ? 0 : 1;
    summary["passed"] = rep.passed();
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, config, files, wall, out.exit_code, summary);
  files.push_back("manifest.json");
  return out;
}

}  // namespace hyvort
