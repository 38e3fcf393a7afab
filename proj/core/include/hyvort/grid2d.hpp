#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <complex>
#include <optional>

#include "hyvort/error.hpp"

namespace hyvort {

using Vec2 = Eigen::Vector2d;
using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Uniform dyadic grid on [0,1]^2 with (2^level - 1)^2 interior nodes.
struct Grid2D {
  int level = 1;
  int n = 1;       // interior nodes per side
  int cells = 2;   // 2^level
  double h = 0.5;

  explicit Grid2D(int level);

  int interior_count() const { return n * n; }
  int perimeter_count() const { return 4 * cells; }
  int index(int i, int j) const { return i + n * j; }
  Vec2 node(int i, int j) const { return {(i + 1) * h, (j + 1) * h}; }
  Vec2 node(int k) const { return node(k % n, k / n); }

  // Perimeter nodes run counterclockwise from (0,0), corners once.
  Vec2 perimeter_node(int k) const;
  // Perimeter index of the boundary lattice point (I,J), 0 <= I,J <= cells.
  int perimeter_index(int I, int J) const;

  bool operator==(const Grid2D& o) const { return level == o.level; }
};

enum class Scaling { Stiffness, FiniteDifference };

struct SparseOperator {
  SpMat matrix;
  bool symmetric = true;
  int space_dim = 2;
  int level = 1;
  Scaling scaling = Scaling::Stiffness;

  int dimension() const { return static_cast<int>(matrix.rows()); }
  double h() const { return std::ldexp(1.0, -level); }
};

template <class T>
struct Field2D {
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  Grid2D grid;
  Vector values;                  // interior nodes, flat index i + n j
  std::optional<Vector> boundary; // perimeter trace, counterclockwise

  explicit Field2D(const Grid2D& g) : grid(g), values(Vector::Zero(g.interior_count())) {}
  Field2D(const Grid2D& g, Vector v, std::optional<Vector> b = std::nullopt);
};

using RealField2D = Field2D<double>;
using ComplexField2D = Field2D<cplx>;

SparseOperator assemble_laplacian(const Grid2D& grid, Scaling scaling);

Eigen::VectorXd apply_dirichlet_rhs(const SparseOperator& K, const Eigen::VectorXd& boundary);
Eigen::VectorXcd apply_dirichlet_rhs(const SparseOperator& K, const Eigen::VectorXcd& boundary);

// Boundary trace of a function sampled at the perimeter nodes.
template <class F>
Eigen::VectorXd sample_perimeter(const Grid2D& grid, F&& f) {
  Eigen::VectorXd g(grid.perimeter_count());
  for (int k = 0; k < grid.perimeter_count(); ++k) {
    Vec2 p = grid.perimeter_node(k);
    g[k] = f(p.x(), p.y());
  }
  return g;
}

template <class F>
Eigen::VectorXd sample_interior(const Grid2D& grid, F&& f) {
  Eigen::VectorXd v(grid.interior_count());
  for (int k = 0; k < grid.interior_count(); ++k) {
    Vec2 p = grid.node(k);
    v[k] = f(p.x(), p.y());
  }
  return v;
}

// Sparse linear stencil: sum_k weight[k] * field[index[k]].
struct Stencil {
  std::array<int, 8> index{};
  std::array<double, 8> weight{};
  int size = 0;

  template <class V>
  auto apply(const V& field) const {
    typename V::Scalar s(0);
    for (int k = 0; k < size; ++k) s += weight[k] * field[index[k]];
    return s;
  }
};

enum class StencilKind { PointValue, GradientX, GradientY };

// Bilinear interpolation of nodal values or of central differences; only interior nodes are
// touched, which needs the point at distance >= 2h from the boundary and level >= 3.
Stencil interpolation_stencil(const Grid2D& grid, StencilKind kind, const Vec2& point);

Eigen::Vector2d sample_gradient(const RealField2D& field, const Vec2& point);
Eigen::Vector2cd sample_gradient(const ComplexField2D& field, const Vec2& point);
double sample_value(const RealField2D& field, const Vec2& point);

// Full nodal array a(I,J) at (I h, J h), 0 <= I,J <= cells, boundary trace filled in.
Eigen::MatrixXd nodal_array(const Grid2D& grid, const Eigen::VectorXd& interior,
                            const Eigen::VectorXd& boundary);

template <class T>
Field2D<T>::Field2D(const Grid2D& g, Vector v, std::optional<Vector> b)
    : grid(g), values(std::move(v)), boundary(std::move(b)) {
  require(values.size() == g.interior_count(), Errc::Dimension, "field value length");
  require(!boundary || boundary->size() == g.perimeter_count(), Errc::Dimension,
          "boundary trace length");
}

}  // namespace hyvort
