#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "hyvort/grid2d.hpp"

namespace hyvort {

struct VortexConfig {
  std::vector<Vec2> positions;
  double time = 0.0;

  int size() const { return static_cast<int>(positions.size()); }
};

// Pairwise distances below this are treated as a collision (domain size is 1).
double collision_tol();

// Throws Domain if a vortex is not strictly inside the unit square and Collision if two
// vortices are closer than collision_tol().
void validate(const VortexConfig& config);

double min_pair_distance(const VortexConfig& config);
double min_boundary_distance(const VortexConfig& config);

enum class LawKind { NLS_M1, NLS_M2, GL_Free, GL_Bounded };

// Returns grad h_a(a_j) for every vortex of the configuration.
class FeedbackProvider {
 public:
  virtual ~FeedbackProvider() = default;
  virtual std::vector<Vec2> feedback(const VortexConfig& config) const = 0;
};

// Nodal values of h_a on the full grid for the configuration (interior plus boundary trace).
struct HarmonicSample {
  Grid2D grid;
  Eigen::VectorXd interior;
  Eigen::VectorXd boundary;
};

class HarmonicProvider {
 public:
  virtual ~HarmonicProvider() = default;
  virtual HarmonicSample harmonic(const VortexConfig& config) const = 0;
};

struct MotionLaw {
  LawKind kind = LawKind::NLS_M1;
  std::shared_ptr<const FeedbackProvider> feedback;

  bool coupled() const { return kind == LawKind::NLS_M2 || kind == LawKind::GL_Bounded; }
};

inline Vec2 perp(const Vec2& x) { return {-x.y(), x.x()}; }

double singular_phase(const VortexConfig& config, const Vec2& point);
Vec2 singular_phase_gradient(const VortexConfig& config, const Vec2& point);

std::vector<Vec2> velocity(const VortexConfig& config, const MotionLaw& law);
// Velocities for a given feedback vector, bypassing the provider.
std::vector<Vec2> velocity(const VortexConfig& config, LawKind kind,
                           const std::vector<Vec2>& grad_h);

VortexConfig step_explicit(const VortexConfig& config, const MotionLaw& law, double dt);
VortexConfig step_midpoint(const VortexConfig& config, const MotionLaw& law, double dt,
                           double newton_tol = 1e-13, int max_iter = 200);

struct EnergyOptions {
  double core_radius = 1e-3;
  // Radius of the vortex-centred polar patches; <= 0 picks 0.8 * min(d_pair/2, d_boundary).
  double patch_radius = 0.0;
  int radial_nodes = 24;
  int angular_nodes = 96;
};

// (1/2pi) int_{Omega minus disks} |grad u_a|^2 - M log(1/r), gamma omitted.
double renormalized_energy(const VortexConfig& config, const HarmonicProvider& provider,
                           const EnergyOptions& options = {});

struct IdentityResidual {
  double residual = 0.0;           // max_j |J grad_j W + 2 grad H_j(a_j)|
  double grad_w_norm = 0.0;        // max_j |grad_j W|
  std::vector<Vec2> grad_w;
  std::vector<Vec2> rhs;           // -2 grad H_j(a_j)
};

IdentityResidual motion_law_identity_residual(const VortexConfig& config,
                                              const HarmonicProvider& provider, double fd_step,
                                              const EnergyOptions& options = {});

// CSV: t, a1x, a1y, ..., aMx, aMy
void write_trajectory(std::ostream& os, const std::vector<VortexConfig>& traj);

}  // namespace hyvort
