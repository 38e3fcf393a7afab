#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyvort/config.hpp"
#include "hyvort/metrics.hpp"
#include "hyvort/nls_ref.hpp"

namespace hyvort {

struct ReducedRun {
  LawKind kind = LawKind::NLS_M1;
  std::vector<VortexConfig> trajectory;
  std::vector<std::vector<Vec2>> feedback;  // grad h_a(a_j) used at each step (M2 only)
  std::vector<Vec2> final_gradients;        // grad h_a(a_j) at T from the configured provider
  ComplexField2D reconstruction{Grid2D(1)};  // u_a at T
};

// Classical M1 trajectory, then the harmonic problem at T through the configured provider.
ReducedRun run_m1(const ExperimentConfig& config);
// Coupled trajectory with feedback from the configured provider at every step.
ReducedRun run_m2(const ExperimentConfig& config);

// Feedback provider for a grid (direct solve or the Schrodingerization emulator).
std::shared_ptr<const FeedbackProvider> make_feedback(const ExperimentConfig& config,
                                                      const Grid2D& grid,
                                                      const BoundaryPhase& phi_g);

struct SweepCase {
  SweepRow row;
  VortexConfig m1, m2;  // reduced positions at T
  VortexConfig nls;     // vortices located in the full solution at T
  double energy_drift = 0.0;
  ComplexField2D reference{Grid2D(1)};
  Eigen::VectorXd phase_m1, phase_m2;  // aligned phase mismatch, NaN outside the mask
};

struct SweepResult {
  std::vector<SweepCase> cases;
  double slope_m1 = 0.0;
  double slope_m2 = 0.0;
  std::vector<SweepRow> rows() const;
};

// One eps of the sweep: full NLS to T on the sweep level, M1 and M2 reconstructions at T,
// masked errors on the region around the M2 positions.
SweepCase run_sweep_case(const ExperimentConfig& config, double eps);
// Cases run on config.threads workers; results are ordered as config.eps_list.
SweepResult run_sweep(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SpectrumRow {
  int dim = 2;
  int level = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond() const { return lambda_max / lambda_min; }
};

struct CheckReport {
  std::vector<CheckResult> checks;
  std::vector<SpectrumRow> spectra;
  bool passed() const;
};

// BPX spectral report, Schrodingerization oracle equivalence, motion-law identity residual and
// the filament circle law. checks.bpx_weight_offset perturbs the BPX weights.
CheckReport run_checks(const ExperimentConfig& config);

struct SchrodCheck {
  double R = 0.0;
  int Np = 0;
  double p3 = 0.0;
  double oracle_error = 0.0;    // ||S z(T) - h_direct|| / ||h_direct||
  double norm_drift = 0.0;      // relative change of ||W|| under evolve
  double window_discrepancy = 0.0;
};

// Level-3 harmonic problem through the full warped pipeline for the given truncation.
SchrodCheck schrodinger_pipeline_check(double eps, double R, int Np);
// Same with the safe truncation for eps, recovery at p3 + 1. The window spread is dominated
// by the kink at p3 and needs dp <= 1e-3 to reach 1e-4.
SchrodCheck schrodinger_pipeline_check(double eps, std::optional<double> max_dp = std::nullopt);

struct CircleLaw {
  std::vector<double> t, radius;
  double max_relative_error = 0.0;  // |R^2 - (R0^2 - 2t)| / (R0^2 - 2t)
  int remeshes = 0;
};
CircleLaw filament_circle_law(double R0, int nodes, double dt, double stop_radius,
                              int snapshot_every = 0, std::ostream* curves = nullptr);

struct RunOutcome {
  int exit_code = 0;  // 0 success, 1 failed check
  std::vector<std::string> files;
};

// Runs config.experiment, writes its CSV/field files and manifest.json into config.out.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace hyvort
