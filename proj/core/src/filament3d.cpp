#include "hyvort/filament3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace hyvort {

namespace {

constexpr double kPi = std::numbers::pi;

// Lattice value with zero Dirichlet data outside the interior.
double lattice_value(const Grid3D& g, const Eigen::VectorXd& v, int I, int J, int K) {
  if (I <= 0 || J <= 0 || K <= 0 || I >= g.cells || J >= g.cells || K >= g.cells) return 0.0;
  return v[g.index(I - 1, J - 1, K - 1)];
}

}  // namespace

const Vec3& FilamentCurve::node(int s) const {
  const int n = size();
  return nodes[((s % n) + n) % n];
}

double FilamentCurve::length() const {
  double L = 0.0;
  for (int s = 0; s < size(); ++s) L += (node(s + 1) - node(s)).norm();
  return L;
}

double FilamentCurve::min_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (int s = 0; s < size(); ++s) m = std::min(m, (node(s + 1) - node(s)).norm());
  return m;
}

double FilamentCurve::max_spacing() const {
  double m = 0.0;
  for (int s = 0; s < size(); ++s) m = std::max(m, (node(s + 1) - node(s)).norm());
  return m;
}

Vec3 FilamentCurve::segment_tangent(int s) const {
  const Vec3 d = node(s + 1) - node(s);
  const double l = d.norm();
  require(l > 0.0, Errc::Geometry, "zero-length filament segment");
  return d / l;
}

Vec3 FilamentCurve::curvature_vector(int s) const {
  const Vec3 a = node(s) - node(s - 1), b = node(s + 1) - node(s);
  const double la = a.norm(), lb = b.norm();
  require(la > 0.0 && lb > 0.0, Errc::Geometry, "zero-length filament segment");
  return 2.0 * (b / lb - a / la) / (la + lb);
}

Vec3 FilamentCurve::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& x : nodes) c += x;
  return c / size();
}

double FilamentCurve::planar_area() const {
  double A = 0.0;
  for (int s = 0; s < size(); ++s) {
    const Vec3& p = node(s);
    const Vec3& q = node(s + 1);
    A += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(A);
}

FilamentCurve make_circle(const Vec3& center, double radius, int n) {
  return make_ellipse(center, radius, radius, n);
}

FilamentCurve make_ellipse(const Vec3& center, double a, double b, int n) {
  require(n >= 3, Errc::Parameter, "a closed curve needs at least 3 nodes");
  require(a > 0.0 && b > 0.0, Errc::Parameter, "ellipse axes must be positive");
  FilamentCurve c;
  c.nodes.reserve(n);
  for (int s = 0; s < n; ++s) {
    const double t = 2.0 * kPi * s / n;
    c.nodes.push_back(center + Vec3(a * std::cos(t), b * std::sin(t), 0.0));
  }
  return c;
}

FilamentCurve remesh(const FilamentCurve& curve) {
  const int n = curve.size();
  std::vector<double> arc(n + 1, 0.0);
  for (int s = 0; s < n; ++s) arc[s + 1] = arc[s] + (curve.node(s + 1) - curve.node(s)).norm();
  const double L = arc[n];
  require(L > 0.0, Errc::Geometry, "degenerate filament (zero length)");
  FilamentCurve out;
  out.nodes.reserve(n);
  int seg = 0;
  for (int k = 0; k < n; ++k) {
    const double target = L * k / n;
    while (seg < n - 1 && arc[seg + 1] <= target) ++seg;
    const double span = arc[seg + 1] - arc[seg];
    const double t = span > 0.0 ? (target - arc[seg]) / span : 0.0;
    out.nodes.push_back(curve.node(seg) + t * (curve.node(seg + 1) - curve.node(seg)));
  }
  const double mean = out.mean_spacing();
  require(out.min_spacing() >= 0.5 * mean && out.max_spacing() <= 2.0 * mean, Errc::Geometry,
          "spacing degenerate after remeshing");
  return out;
}

double curvature_flow_dt_limit(const FilamentCurve& curve) {
  const double l = curve.min_spacing();
  return 0.5 * l * l;
}

FilamentCurve curvature_flow_step(const FilamentCurve& curve, double dt, bool* remeshed) {
  require(curve.size() >= 3, Errc::Geometry, "a closed curve needs at least 3 nodes");
  require(dt > 0.0, Errc::Parameter, "dt must be positive");
  const double limit = curvature_flow_dt_limit(curve);
  if (dt > limit * (1 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the explicit curvature-flow limit (min spacing)^2/2 = "
       << limit;
    fail(Errc::Parameter, os.str());
  }
  FilamentCurve next = curve;
  for (int s = 0; s < curve.size(); ++s) next.nodes[s] += dt * curve.curvature_vector(s);
  const double mean = next.mean_spacing();
  const bool trip = next.min_spacing() < 0.5 * mean || next.max_spacing() > 2.0 * mean;
  if (remeshed) *remeshed = trip;
  return trip ? remesh(next) : next;
}

VectorField3 assemble_filament_source(const FilamentCurve& curve, const Grid3D& grid) {
  const double h = grid.h, margin = 2.0 * h;
  for (const auto& x : curve.nodes)
    require(x.minCoeff() >= margin && x.maxCoeff() <= 1.0 - margin, Errc::Geometry,
            "filament closer than 2h to the boundary");
  VectorField3 f;
  for (auto& c : f) c = Eigen::VectorXd::Zero(grid.interior_count());
  const double inv_h3 = 1.0 / (h * h * h);
  for (int s = 0; s < curve.size(); ++s) {
    const Vec3 d = curve.node(s + 1) - curve.node(s);
    const Vec3 m = curve.node(s) + 0.5 * d;
    const Vec3 q = 2.0 * kPi * d * inv_h3;  // 2 pi |seg| l
    const Vec3 X = m / h;
    const int I = static_cast<int>(std::floor(X.x()));
    const int J = static_cast<int>(std::floor(X.y()));
    const int K = static_cast<int>(std::floor(X.z()));
    const Vec3 t(X.x() - I, X.y() - J, X.z() - K);
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
          const double w = (di ? t.x() : 1 - t.x()) * (dj ? t.y() : 1 - t.y()) *
                           (dk ? t.z() : 1 - t.z());
          const int r = grid.index(I + di - 1, J + dj - 1, K + dk - 1);
          for (int c = 0; c < 3; ++c) f[c][r] += w * q[c];
        }
  }
  return f;
}

Vec3 LondonField::evaluate(const Vec3& x) const {
  require(x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0, Errc::Domain, "point outside the cube");
  const double h = grid.h;
  const Vec3 X = x / h;
  const int I = std::min(static_cast<int>(std::floor(X.x())), grid.cells - 1);
  const int J = std::min(static_cast<int>(std::floor(X.y())), grid.cells - 1);
  const int K = std::min(static_cast<int>(std::floor(X.z())), grid.cells - 1);
  const Vec3 t(X.x() - I, X.y() - J, X.z() - K);
  Vec3 out = Vec3::Zero();
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double w =
            (di ? t.x() : 1 - t.x()) * (dj ? t.y() : 1 - t.y()) * (dk ? t.z() : 1 - t.z());
        if (w == 0.0) continue;
        for (int c = 0; c < 3; ++c) out[c] += w * lattice_value(grid, H[c], I + di, J + dj, K + dk);
      }
  return out;
}

LondonField solve_london(const VectorField3& f, const Grid3D& grid, double tol, int threads) {
  for (const auto& c : f)
    require(c.size() == grid.interior_count(), Errc::Dimension, "source length");
  const double h3 = grid.h * grid.h * grid.h;
  const SparseOperator K = assemble_laplacian(grid, Scaling::Stiffness);
  SpMat A = K.matrix;
  for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) += h3;
  const auto bpx = build_bpx(3, grid.level);
  LondonField out;
  out.grid = grid;
  auto solve = [&](int c) {
    out.H[c] = Eigen::VectorXd::Zero(grid.interior_count());
    out.reports[c] = bpx_pcg(A, *bpx, Eigen::VectorXd(h3 * f[c]), out.H[c], tol);
  };
  if (threads > 1) {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex m;
    for (int c = 0; c < 3; ++c)
      pool.emplace_back([&, c] {
        try {
          solve(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!err) err = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
  } else {
    for (int c = 0; c < 3; ++c) solve(c);
  }
  return out;
}

LondonField solve_london(const FilamentCurve& curve, const Grid3D& grid, double tol,
                         int threads) {
  return solve_london(assemble_filament_source(curve, grid), grid, tol, threads);
}

double london_green(double r) {
  require(r > 0.0, Errc::Singularity, "Green function at r = 0");
  return std::exp(-r) / (4.0 * kPi * r);
}

namespace {

// 2 pi int over [p, q] of G(x - X) l ds by midpoint rule, halving near x.
Vec3 segment_integral(const Vec3& x, const Vec3& p, const Vec3& q, int depth, bool& refined) {
  const Vec3 d = q - p;
  const double len = d.norm();
  const Vec3 m = p + 0.5 * d;
  const double r = (x - m).norm();
  require(r > 1e-14, Errc::Singularity, "evaluation point on the filament");
  if (r < 4.0 * len && depth < 40) {
    refined = true;
    return segment_integral(x, p, m, depth + 1, refined) +
           segment_integral(x, m, q, depth + 1, refined);
  }
  return 2.0 * kPi * london_green(r) * d;
}

}  // namespace

GreenEvaluation green_superposition(const FilamentCurve& curve, const Vec3& x) {
  GreenEvaluation out;
  for (int s = 0; s < curve.size(); ++s) {
    const Vec3& p = curve.node(s);
    const Vec3& q = curve.node(s + 1);
    const double len = (q - p).norm();
    if ((x - (p + 0.5 * (q - p))).norm() < len) {
      bool refined = false;
      out.value += segment_integral(x, p, q, 0, refined);
      out.subdivided_segments += refined;
    } else {
      out.value += 2.0 * kPi * london_green((x - (p + 0.5 * (q - p))).norm()) * (q - p);
    }
  }
  return out;
}

void write_curve(std::ostream& os, const FilamentCurve& curve, int snapshot, bool header) {
  if (header) os << "snapshot,s,x,y,z\n";
  os.precision(17);
  for (int s = 0; s < curve.size(); ++s) {
    const Vec3& x = curve.nodes[s];
    os << snapshot << ',' << s << ',' << x.x() << ',' << x.y() << ',' << x.z() << '\n';
  }
}

}  // namespace hyvort
