#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyvort/bpx.hpp"
#include "hyvort/grid3d.hpp"

namespace hyvort {

// Closed polygon, nodes taken cyclically.
struct FilamentCurve {
  std::vector<Vec3> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  const Vec3& node(int s) const;  // cyclic index
  double length() const;
  double mean_spacing() const { return length() / size(); }
  double min_spacing() const;
  double max_spacing() const;
  // Unit tangent of segment s (from node s to s+1).
  Vec3 segment_tangent(int s) const;
  // kappa n at node s: 2 [b/|b| - a/|a|] / (|a| + |b|), a = X_s - X_{s-1}, b = X_{s+1} - X_s.
  // Exact (= 1/R towards the centre) for a regular polygon inscribed in a circle.
  Vec3 curvature_vector(int s) const;
  Vec3 centroid() const;
  // Shoelace area of the projection onto the plane z = const.
  double planar_area() const;
};

FilamentCurve make_circle(const Vec3& center, double radius, int n);
// Axes a (x) and b (y) in the plane z = center.z, nodes uniform in the angle.
FilamentCurve make_ellipse(const Vec3& center, double a, double b, int n);

// Arclength redistribution with the same node count.
FilamentCurve remesh(const FilamentCurve& curve);

// X <- X + dt kappa n. Requires dt <= (min spacing)^2 / 2, the stability limit of the explicit
// step; remeshes when a spacing leaves [0.5, 2] x mean.
FilamentCurve curvature_flow_step(const FilamentCurve& curve, double dt, bool* remeshed = nullptr);
double curvature_flow_dt_limit(const FilamentCurve& curve);

using VectorField3 = std::array<Eigen::VectorXd, 3>;

// Trilinear deposition of 2 pi |segment| l at segment midpoints, divided by h^3.
VectorField3 assemble_filament_source(const FilamentCurve& curve, const Grid3D& grid);

struct LondonField {
  Grid3D grid{1};
  VectorField3 H;
  std::array<SolveReport, 3> reports;

  Vec3 evaluate(const Vec3& x) const;  // trilinear, zero Dirichlet data on the cube
};

// (K + h^3 I) H = h^3 f with the Stiffness-scaled K = h (6,-1), homogeneous Dirichlet data,
// BPX-preconditioned CG per component (components in parallel when threads > 1).
LondonField solve_london(const FilamentCurve& curve, const Grid3D& grid, double tol = 1e-10,
                         int threads = 1);
LondonField solve_london(const VectorField3& f, const Grid3D& grid, double tol = 1e-10,
                         int threads = 1);

// G(r) = e^{-r} / (4 pi r)
double london_green(double r);

struct GreenEvaluation {
  Vec3 value = Vec3::Zero();
  int subdivided_segments = 0;  // near-singular segments refined adaptively
};

// 2 pi sum_s G(x - m_s) l_s |segment s| at segment midpoints m_s, with adaptive subdivision of
// segments closer to x than their length. Throws Singularity if x lies on the curve.
GreenEvaluation green_superposition(const FilamentCurve& curve, const Vec3& x);

// CSV rows "snapshot,s,x,y,z".
void write_curve(std::ostream& os, const FilamentCurve& curve, int snapshot,
                 bool header = true);

}  // namespace hyvort
