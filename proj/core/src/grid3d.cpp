#include "hyvort/grid3d.hpp"

#include <vector>

namespace hyvort {

Grid3D::Grid3D(int lvl) : level(lvl) {
  require(lvl >= 1 && lvl <= 8, Errc::Parameter, "3D grid level must be in [1,8]");
  cells = 1 << lvl;
  n = cells - 1;
  h = std::ldexp(1.0, -lvl);
}

SparseOperator assemble_laplacian(const Grid3D& grid, Scaling scaling) {
  const int n = grid.n;
  const double s = scaling == Scaling::Stiffness ? grid.h : 1.0 / (grid.h * grid.h);
  const int nn = n * n;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(7 * static_cast<size_t>(grid.interior_count()));
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int r = grid.index(i, j, k);
        if (k > 0) t.emplace_back(r, r - nn, -s);
        if (j > 0) t.emplace_back(r, r - n, -s);
        if (i > 0) t.emplace_back(r, r - 1, -s);
        t.emplace_back(r, r, 6.0 * s);
        if (i < n - 1) t.emplace_back(r, r + 1, -s);
        if (j < n - 1) t.emplace_back(r, r + n, -s);
        if (k < n - 1) t.emplace_back(r, r + nn, -s);
      }
    }
  }
  SparseOperator op;
  op.matrix.resize(grid.interior_count(), grid.interior_count());
  op.matrix.setFromTriplets(t.begin(), t.end());
  op.matrix.makeCompressed();
  op.space_dim = 3;
  op.level = grid.level;
  op.scaling = scaling;
  return op;
}

}  // namespace hyvort
