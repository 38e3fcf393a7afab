#include "hyvort/grid2d.hpp"

#include <cmath>
#include <vector>

namespace hyvort {

Grid2D::Grid2D(int lvl) : level(lvl) {
  require(lvl >= 1 && lvl <= 14, Errc::Parameter, "grid level must be in [1,14]");
  cells = 1 << lvl;
  n = cells - 1;
  h = std::ldexp(1.0, -lvl);
}

Vec2 Grid2D::perimeter_node(int k) const {
  require(k >= 0 && k < perimeter_count(), Errc::Dimension, "perimeter index");
  const int N = cells;
  const int side = k / N, m = k % N;
  switch (side) {
    case 0: return {m * h, 0.0};
    case 1: return {1.0, m * h};
    case 2: return {(N - m) * h, 1.0};
    default: return {0.0, (N - m) * h};
  }
}

int Grid2D::perimeter_index(int I, int J) const {
  const int N = cells;
  if (J == 0) return I;
  if (I == N) return N + J;
  if (J == N) return 2 * N + (N - I);
  if (I == 0) return 3 * N + (N - J);
  fail(Errc::Domain, "lattice point is not on the boundary");
}

SparseOperator assemble_laplacian(const Grid2D& grid, Scaling scaling) {
  const int n = grid.n;
  const double s = scaling == Scaling::Stiffness ? 1.0 : 1.0 / (grid.h * grid.h);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(5 * grid.interior_count());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int k = grid.index(i, j);
      if (j > 0) t.emplace_back(k, k - n, -s);
      if (i > 0) t.emplace_back(k, k - 1, -s);
      t.emplace_back(k, k, 4.0 * s);
      if (i < n - 1) t.emplace_back(k, k + 1, -s);
      if (j < n - 1) t.emplace_back(k, k + n, -s);
    }
  }
  SparseOperator op;
  op.matrix.resize(grid.interior_count(), grid.interior_count());
  op.matrix.setFromTriplets(t.begin(), t.end());
  op.matrix.makeCompressed();
  op.level = grid.level;
  op.scaling = scaling;
  return op;
}

namespace {

template <class Vec>
Vec dirichlet_rhs(const SparseOperator& K, const Vec& boundary) {
  require(K.space_dim == 2, Errc::Dimension, "apply_dirichlet_rhs expects a 2D operator");
  const Grid2D grid(K.level);
  require(K.dimension() == grid.interior_count(), Errc::Dimension, "operator size");
  require(boundary.size() == grid.perimeter_count(), Errc::Dimension,
          "boundary array length does not match the grid perimeter");
  const double s = K.scaling == Scaling::Stiffness ? 1.0 : 1.0 / (grid.h * grid.h);
  const int n = grid.n, N = grid.cells;
  Vec b = Vec::Zero(grid.interior_count());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int I = i + 1, J = j + 1;
      auto& bk = b[grid.index(i, j)];
      if (I == 1) bk += s * boundary[grid.perimeter_index(0, J)];
      if (I == N - 1) bk += s * boundary[grid.perimeter_index(N, J)];
      if (J == 1) bk += s * boundary[grid.perimeter_index(I, 0)];
      if (J == N - 1) bk += s * boundary[grid.perimeter_index(I, N)];
    }
  }
  return b;
}

}  // namespace

Eigen::VectorXd apply_dirichlet_rhs(const SparseOperator& K, const Eigen::VectorXd& boundary) {
  return dirichlet_rhs(K, boundary);
}

Eigen::VectorXcd apply_dirichlet_rhs(const SparseOperator& K, const Eigen::VectorXcd& boundary) {
  return dirichlet_rhs(K, boundary);
}

Stencil interpolation_stencil(const Grid2D& grid, StencilKind kind, const Vec2& point) {
  require(grid.level >= 3, Errc::Domain, "interpolation stencils need level >= 3");
  const double h = grid.h;
  const double lo = 2.0 * h, hi = 1.0 - 2.0 * h;
  require(point.x() >= lo && point.x() <= hi && point.y() >= lo && point.y() <= hi,
          Errc::Domain, "point closer than 2h to the boundary");
  const int N = grid.cells;
  const double X = point.x() / h, Y = point.y() / h;
  const int I0 = std::min(static_cast<int>(std::floor(X)), N - 3);
  const int J0 = std::min(static_cast<int>(std::floor(Y)), N - 3);
  const double tx = X - I0, ty = Y - J0;
  // interior index of lattice node (I,J)
  auto id = [&](int I, int J) { return grid.index(I - 1, J - 1); };

  Stencil s;
  if (kind == StencilKind::PointValue) {
    s.index = {id(I0, J0), id(I0 + 1, J0), id(I0, J0 + 1), id(I0 + 1, J0 + 1)};
    s.weight = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    s.size = 4;
    return s;
  }
  const double c = 0.5 / h;
  if (kind == StencilKind::GradientX) {
    // (f(I+1)-f(I-1))/2h at columns I0 and I0+1, combined per node
    const double wy[2] = {1 - ty, ty};
    int k = 0;
    for (int r = 0; r < 2; ++r) {
      const int J = J0 + r;
      s.index[k] = id(I0 - 1, J); s.weight[k++] = -c * (1 - tx) * wy[r];
      s.index[k] = id(I0, J);     s.weight[k++] = -c * tx * wy[r];
      s.index[k] = id(I0 + 1, J); s.weight[k++] = c * (1 - tx) * wy[r];
      s.index[k] = id(I0 + 2, J); s.weight[k++] = c * tx * wy[r];
    }
    s.size = 8;
    return s;
  }
  const double wx[2] = {1 - tx, tx};
  int k = 0;
  for (int q = 0; q < 2; ++q) {
    const int I = I0 + q;
    s.index[k] = id(I, J0 - 1); s.weight[k++] = -c * (1 - ty) * wx[q];
    s.index[k] = id(I, J0);     s.weight[k++] = -c * ty * wx[q];
    s.index[k] = id(I, J0 + 1); s.weight[k++] = c * (1 - ty) * wx[q];
    s.index[k] = id(I, J0 + 2); s.weight[k++] = c * ty * wx[q];
  }
  s.size = 8;
  return s;
}

Eigen::Vector2d sample_gradient(const RealField2D& field, const Vec2& point) {
  const auto sx = interpolation_stencil(field.grid, StencilKind::GradientX, point);
  const auto sy = interpolation_stencil(field.grid, StencilKind::GradientY, point);
  return {sx.apply(field.values), sy.apply(field.values)};
}

Eigen::Vector2cd sample_gradient(const ComplexField2D& field, const Vec2& point) {
  const auto sx = interpolation_stencil(field.grid, StencilKind::GradientX, point);
  const auto sy = interpolation_stencil(field.grid, StencilKind::GradientY, point);
  return {sx.apply(field.values), sy.apply(field.values)};
}

double sample_value(const RealField2D& field, const Vec2& point) {
  return interpolation_stencil(field.grid, StencilKind::PointValue, point).apply(field.values);
}

Eigen::MatrixXd nodal_array(const Grid2D& grid, const Eigen::VectorXd& interior,
                            const Eigen::VectorXd& boundary) {
  require(interior.size() == grid.interior_count(), Errc::Dimension, "interior length");
  require(boundary.size() == grid.perimeter_count(), Errc::Dimension, "boundary length");
  const int N = grid.cells;
  Eigen::MatrixXd a(N + 1, N + 1);  // a(I,J)
  for (int J = 0; J <= N; ++J) {
    for (int I = 0; I <= N; ++I) {
      const bool edge = I == 0 || J == 0 || I == N || J == N;
      a(I, J) = edge ? boundary[grid.perimeter_index(I, J)] : interior[grid.index(I - 1, J - 1)];
    }
  }
  return a;
}

}  // namespace hyvort
