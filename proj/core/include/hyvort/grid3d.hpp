#pragma once

#include <Eigen/Core>

#include "hyvort/grid2d.hpp"

namespace hyvort {

using Vec3 = Eigen::Vector3d;

// Uniform dyadic grid on [0,1]^3 with (2^level - 1)^3 interior nodes.
struct Grid3D {
  int level = 1;
  int n = 1;
  int cells = 2;
  double h = 0.5;

  explicit Grid3D(int level);

  int interior_count() const { return n * n * n; }
  int index(int i, int j, int k) const { return i + n * (j + n * k); }
  Vec3 node(int i, int j, int k) const { return {(i + 1) * h, (j + 1) * h, (k + 1) * h}; }
};

// Seven-point Laplacian. Stiffness scaling is h * (6,-1) (the Q1 stiffness scale h^{d-2}),
// FiniteDifference scaling is h^-2 * (6,-1).
SparseOperator assemble_laplacian(const Grid3D& grid, Scaling scaling);

}  // namespace hyvort
