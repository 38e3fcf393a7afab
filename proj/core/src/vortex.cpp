#include "hyvort/vortex.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "hyvort/quadrature.hpp"

namespace hyvort {

double collision_tol() { return 10.0 * std::sqrt(std::numeric_limits<double>::epsilon()); }

double min_pair_distance(const VortexConfig& config) {
  double d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < config.size(); ++j)
    for (int k = j + 1; k < config.size(); ++k)
      d = std::min(d, (config.positions[j] - config.positions[k]).norm());
  return d;
}

double min_boundary_distance(const VortexConfig& config) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& a : config.positions)
    d = std::min({d, a.x(), 1.0 - a.x(), a.y(), 1.0 - a.y()});
  return d;
}

void validate(const VortexConfig& config) {
  for (const auto& a : config.positions) {
    require(a.allFinite() && a.x() > 0.0 && a.x() < 1.0 && a.y() > 0.0 && a.y() < 1.0,
            Errc::Domain, "vortex outside the unit square");
  }
  require(!(min_pair_distance(config) < collision_tol()), Errc::Collision,
          "vortices closer than the collision tolerance");
}

double singular_phase(const VortexConfig& config, const Vec2& point) {
  double s = 0.0;
  for (const auto& a : config.positions) {
    const Vec2 d = point - a;
    require(d.squaredNorm() > 0.0, Errc::Singularity, "phase evaluated at a vortex");
    s += std::atan2(d.y(), d.x());
  }
  return s;
}

Vec2 singular_phase_gradient(const VortexConfig& config, const Vec2& point) {
  Vec2 g = Vec2::Zero();
  for (const auto& a : config.positions) {
    const Vec2 d = point - a;
    const double r2 = d.squaredNorm();
    require(r2 > 0.0, Errc::Singularity, "phase gradient evaluated at a vortex");
    g += perp(d) / r2;
  }
  return g;
}

std::vector<Vec2> velocity(const VortexConfig& config, LawKind kind,
                           const std::vector<Vec2>& grad_h) {
  const int M = config.size();
  const bool coupled = kind == LawKind::NLS_M2 || kind == LawKind::GL_Bounded;
  require(!coupled || static_cast<int>(grad_h.size()) == M, Errc::Dimension,
          "feedback size does not match the vortex count");
  std::vector<Vec2> v(M, Vec2::Zero());
  for (int j = 0; j < M; ++j) {
    Vec2 s = Vec2::Zero();
    for (int k = 0; k < M; ++k) {
      if (k == j) continue;
      const Vec2 d = config.positions[j] - config.positions[k];
      const double r2 = d.squaredNorm();
      require(std::sqrt(r2) >= collision_tol(), Errc::Collision, "vortex collision");
      s += d / r2;
    }
    switch (kind) {
      case LawKind::NLS_M1: v[j] = -2.0 * perp(s); break;
      case LawKind::NLS_M2: v[j] = -2.0 * (perp(s) + grad_h[j]); break;
      case LawKind::GL_Free: v[j] = 2.0 * s; break;
      case LawKind::GL_Bounded: v[j] = 2.0 * s - 2.0 * perp(grad_h[j]); break;
    }
  }
  return v;
}

std::vector<Vec2> velocity(const VortexConfig& config, const MotionLaw& law) {
  if (!law.coupled()) return velocity(config, law.kind, {});
  require(law.feedback != nullptr, Errc::Parameter, "coupled law without a feedback provider");
  return velocity(config, law.kind, law.feedback->feedback(config));
}

namespace {

void check_inside(const VortexConfig& c) {
  for (const auto& a : c.positions) {
    require(a.allFinite() && a.x() > 0.0 && a.x() < 1.0 && a.y() > 0.0 && a.y() < 1.0,
            Errc::DomainExit, "vortex left the domain");
  }
}

}  // namespace

VortexConfig step_explicit(const VortexConfig& config, const MotionLaw& law, double dt) {
  require(dt > 0.0, Errc::Parameter, "dt must be positive");
  const auto v = velocity(config, law);
  VortexConfig next = config;
  for (int j = 0; j < config.size(); ++j) next.positions[j] += dt * v[j];
  next.time += dt;
  check_inside(next);
  return next;
}

VortexConfig step_midpoint(const VortexConfig& config, const MotionLaw& law, double dt,
                           double newton_tol, int max_iter) {
  require(dt > 0.0, Errc::Parameter, "dt must be positive");
  const int M = config.size();
  VortexConfig mid = config, next = config;
  // explicit predictor
  auto v = velocity(config, law);
  for (int j = 0; j < M; ++j) next.positions[j] += dt * v[j];
  double res = std::numeric_limits<double>::infinity();
  double damping = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    for (int j = 0; j < M; ++j)
      mid.positions[j] = 0.5 * (config.positions[j] + next.positions[j]);
    v = velocity(mid, law);
    double r = 0.0;
    for (int j = 0; j < M; ++j) {
      const Vec2 target = config.positions[j] + dt * v[j];
      r = std::max(r, (target - next.positions[j]).norm());
    }
    if (r > res) damping = std::max(0.125, 0.5 * damping);
    res = r;
    for (int j = 0; j < M; ++j) {
      const Vec2 target = config.positions[j] + dt * v[j];
      next.positions[j] += damping * (target - next.positions[j]);
    }
    if (res <= newton_tol) {
      next.time = config.time + dt;
      check_inside(next);
      return next;
    }
  }
  throw IterationFailure("implicit midpoint did not converge", res);
}

namespace {

double smooth_cutoff(double rho, double rc) {
  if (rho <= 0.5 * rc) return 1.0;
  if (rho >= rc) return 0.0;
  const double s = (rc - rho) / (0.5 * rc);
  return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

struct NodalGradient {
  Grid2D grid;
  Eigen::MatrixXd gx, gy;  // (I,J) on the full lattice

  explicit NodalGradient(const HarmonicSample& hs) : grid(hs.grid) {
    const Eigen::MatrixXd a = nodal_array(grid, hs.interior, hs.boundary);
    const int N = grid.cells;
    const double c = 0.5 / grid.h;
    gx.resize(N + 1, N + 1);
    gy.resize(N + 1, N + 1);
    for (int J = 0; J <= N; ++J) {
      for (int I = 0; I <= N; ++I) {
        if (I == 0) gx(I, J) = c * (-3 * a(0, J) + 4 * a(1, J) - a(2, J));
        else if (I == N) gx(I, J) = c * (3 * a(N, J) - 4 * a(N - 1, J) + a(N - 2, J));
        else gx(I, J) = c * (a(I + 1, J) - a(I - 1, J));
        if (J == 0) gy(I, J) = c * (-3 * a(I, 0) + 4 * a(I, 1) - a(I, 2));
        else if (J == N) gy(I, J) = c * (3 * a(I, N) - 4 * a(I, N - 1) + a(I, N - 2));
        else gy(I, J) = c * (a(I, J + 1) - a(I, J - 1));
      }
    }
  }

  Vec2 at(const Vec2& p) const {
    const int N = grid.cells;
    const double X = p.x() / grid.h, Y = p.y() / grid.h;
    const int I = std::clamp(static_cast<int>(std::floor(X)), 0, N - 1);
    const int J = std::clamp(static_cast<int>(std::floor(Y)), 0, N - 1);
    const double tx = X - I, ty = Y - J;
    auto lerp = [&](const Eigen::MatrixXd& g) {
      return (1 - tx) * (1 - ty) * g(I, J) + tx * (1 - ty) * g(I + 1, J) +
             (1 - tx) * ty * g(I, J + 1) + tx * ty * g(I + 1, J + 1);
    };
    return {lerp(gx), lerp(gy)};
  }
};

}  // namespace

double renormalized_energy(const VortexConfig& config, const HarmonicProvider& provider,
                           const EnergyOptions& opt) {
  validate(config);
  const int M = config.size();
  const double dpair = min_pair_distance(config), dbnd = min_boundary_distance(config);
  double rc = opt.patch_radius;
  if (rc <= 0.0) rc = 0.8 * std::min(0.5 * dpair, dbnd);
  require(rc < 0.5 * dpair && rc < dbnd, Errc::Geometry, "patch radius too large");
  const double r = opt.core_radius;
  require(r > 0.0 && r < rc && r < 0.5 * std::min(dpair, 2.0 * dbnd), Errc::Geometry,
          "core radius too large for the configuration");

  const HarmonicSample hs = provider.harmonic(config);
  const NodalGradient gh(hs);
  const Grid2D& grid = hs.grid;
  const int N = grid.cells;
  const double h = grid.h;

  auto cutoff_sum = [&](const Vec2& x) {
    double s = 0.0;
    for (const auto& a : config.positions) s += smooth_cutoff((x - a).norm(), rc);
    return s;
  };

  // outer part: trapezoid over the full lattice of (1 - sum chi)|grad phi|^2
  double outer = 0.0;
  for (int J = 0; J <= N; ++J) {
    const double wy = (J == 0 || J == N) ? 0.5 : 1.0;
    for (int I = 0; I <= N; ++I) {
      const double wx = (I == 0 || I == N) ? 0.5 : 1.0;
      const Vec2 x(I * h, J * h);
      const double w = 1.0 - cutoff_sum(x);
      if (w <= 0.0) continue;
      const Vec2 g = singular_phase_gradient(config, x) + gh.at(x);
      outer += wx * wy * w * g.squaredNorm();
    }
  }
  outer *= h * h;

  // core patches: chi (2 grad theta_k . grad H_k + |grad H_k|^2) in polar coordinates
  const auto gl = gauss_legendre(std::max(2, opt.radial_nodes / 2));
  const int nt = opt.angular_nodes;
  double patches = 0.0, radial_log = 0.0;
  for (int k = 0; k < M; ++k) {
    const Vec2 a = config.positions[k];
    auto ring_integral = [&](double lo, double hi) {
      double s = 0.0;
      for (size_t q = 0; q < gl.nodes.size(); ++q) {
        const double rho = 0.5 * (hi - lo) * gl.nodes[q] + 0.5 * (hi + lo);
        const double wr = 0.5 * (hi - lo) * gl.weights[q];
        const double chi = smooth_cutoff(rho, rc);
        double ang = 0.0;
        for (int m = 0; m < nt; ++m) {
          const double th = 2.0 * std::numbers::pi * m / nt;
          const Vec2 e(std::cos(th), std::sin(th));
          const Vec2 x = a + rho * e;
          Vec2 gH = gh.at(x);
          for (int l = 0; l < M; ++l) {
            if (l == k) continue;
            const Vec2 d = x - config.positions[l];
            gH += perp(d) / d.squaredNorm();
          }
          const Vec2 gtheta = perp(e) / rho;
          ang += 2.0 * gtheta.dot(gH) + gH.squaredNorm();
        }
        s += wr * chi * rho * ang * (2.0 * std::numbers::pi / nt);
      }
      return s;
    };
    const double mid = std::max(r, 0.5 * rc);
    if (r < 0.5 * rc) patches += ring_integral(r, 0.5 * rc);
    patches += ring_integral(mid, rc);

    // (1/2pi) int chi/rho^2 dA - log(1/r) = int_r^rc chi/rho drho + log r
    double tail = 0.0;
    for (size_t q = 0; q < gl.nodes.size(); ++q) {
      const double rho = 0.5 * (rc - mid) * gl.nodes[q] + 0.5 * (rc + mid);
      tail += 0.5 * (rc - mid) * gl.weights[q] * smooth_cutoff(rho, rc) / rho;
    }
    radial_log += std::log(mid) + tail;
  }
  return (outer + patches) / (2.0 * std::numbers::pi) + radial_log;
}

IdentityResidual motion_law_identity_residual(const VortexConfig& config,
                                              const HarmonicProvider& provider, double fd_step,
                                              const EnergyOptions& options) {
  require(fd_step > 0.0, Errc::Parameter, "fd_step must be positive");
  const int M = config.size();
  IdentityResidual out;
  const HarmonicSample hs = provider.harmonic(config);
  const RealField2D hfield(hs.grid, hs.interior);
  const auto fb = [&] {
    std::vector<Vec2> g(M);
    for (int j = 0; j < M; ++j) g[j] = sample_gradient(hfield, config.positions[j]);
    return g;
  }();
  // -2 grad H_j(a_j) is the NLS_M2 velocity
  out.rhs = velocity(config, LawKind::NLS_M2, fb);
  // freeze the patch radius so all perturbed energies share one quadrature layout
  EnergyOptions opt = options;
  if (opt.patch_radius <= 0.0)
    opt.patch_radius = 0.8 * std::min(0.5 * min_pair_distance(config), min_boundary_distance(config));
  out.grad_w.resize(M);
  for (int j = 0; j < M; ++j) {
    for (int c = 0; c < 2; ++c) {
      VortexConfig p = config, m = config;
      p.positions[j][c] += fd_step;
      m.positions[j][c] -= fd_step;
      out.grad_w[j][c] = (renormalized_energy(p, provider, opt) -
                          renormalized_energy(m, provider, opt)) /
                         (2.0 * fd_step);
    }
    const Vec2 jgw = perp(out.grad_w[j]);
    out.residual = std::max(out.residual, (jgw - out.rhs[j]).norm());
    out.grad_w_norm = std::max(out.grad_w_norm, out.grad_w[j].norm());
  }
  return out;
}

void write_trajectory(std::ostream& os, const std::vector<VortexConfig>& traj) {
  const int M = traj.empty() ? 0 : traj.front().size();
  os << "t";
  for (int j = 1; j <= M; ++j) os << ",a" << j << "x,a" << j << "y";
  os << "\n" << std::setprecision(17);
  for (const auto& c : traj) {
    os << c.time;
    for (const auto& a : c.positions) os << "," << a.x() << "," << a.y();
    os << "\n";
  }
}

}  // namespace hyvort
