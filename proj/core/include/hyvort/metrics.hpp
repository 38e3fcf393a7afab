#pragma once

#include <iosfwd>
#include <vector>

#include "hyvort/vortex.hpp"

namespace hyvort {

// Interior nodes at distance >= radius from every center.
struct MaskRegion {
  Grid2D grid{1};
  std::vector<Vec2> centers;
  double radius = 0.0;
  std::vector<char> member;  // per interior node

  int count() const;
  double area() const { return count() * grid.h * grid.h; }
  bool contains(int k) const { return member[k] != 0; }
};

MaskRegion build_mask(const VortexConfig& config, double r_mask, const Grid2D& grid);

// sum over the mask of w(k) conj(a_k) b_k
cplx masked_inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const MaskRegion& mask);
// h * sqrt(sum_mask |a|^2)
double masked_norm(const Eigen::VectorXcd& a, const MaskRegion& mask);

struct PhaseAlignment {
  double alpha = 0.0;
  Eigen::VectorXcd aligned;  // e^{i alpha} u_approx
};

// alpha = arg sum_mask conj(u_approx) u_ref. Throws DegenerateAlignment on zero overlap.
PhaseAlignment align_phase(const ComplexField2D& u_ref, const ComplexField2D& u_approx,
                           const MaskRegion& mask);

// ||u_ref - e^{i alpha} u_approx|| / ||u_ref|| over the mask after alignment.
double masked_relative_error(const ComplexField2D& u_ref, const ComplexField2D& u_approx,
                             const MaskRegion& mask);

// Arg(u_ref conj(u_approx)) on mask nodes, NaN elsewhere. No alignment is applied.
Eigen::VectorXd phase_mismatch(const ComplexField2D& u_ref, const ComplexField2D& u_approx,
                               const MaskRegion& mask);

struct SweepRow {
  double eps = 0.0;
  double e_m1 = 0.0;
  double e_m2 = 0.0;
  int level = 0;
  double dt = 0.0;

  double ratio() const { return e_m2 / e_m1; }
};

// Least-squares slope of log(err) against log(eps).
double loglog_slope(const std::vector<double>& eps, const std::vector<double>& err);

// eps,E_M1,E_M2,ratio,level,dt
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace hyvort
