#include "hyvort/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace hyvort {

namespace {

void check_pair(const ComplexField2D& a, const ComplexField2D& b, const MaskRegion& mask) {
  require(a.grid == b.grid && a.grid == mask.grid, Errc::Dimension,
          "fields and mask live on different grids");
}

}  // namespace

int MaskRegion::count() const {
  int c = 0;
  for (char m : member) c += m != 0;
  return c;
}

MaskRegion build_mask(const VortexConfig& config, double r_mask, const Grid2D& grid) {
  require(r_mask >= 0.0, Errc::Parameter, "mask radius must be non-negative");
  MaskRegion m;
  m.grid = grid;
  m.centers = config.positions;
  m.radius = r_mask;
  m.member.assign(grid.interior_count(), 1);
  for (int k = 0; k < grid.interior_count(); ++k) {
    const Vec2 x = grid.node(k);
    for (const auto& c : config.positions)
      if ((x - c).norm() < r_mask) {
        m.member[k] = 0;
        break;
      }
  }
  return m;
}

cplx masked_inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const MaskRegion& mask) {
  require(a.size() == mask.grid.interior_count() && b.size() == a.size(), Errc::Dimension,
          "vector length does not match the mask");
  cplx s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (mask.member[k]) s += std::conj(a[k]) * b[k];
  return s * (mask.grid.h * mask.grid.h);
}

double masked_norm(const Eigen::VectorXcd& a, const MaskRegion& mask) {
  return std::sqrt(masked_inner(a, a, mask).real());
}

PhaseAlignment align_phase(const ComplexField2D& u_ref, const ComplexField2D& u_approx,
                           const MaskRegion& mask) {
  check_pair(u_ref, u_approx, mask);
  require(mask.count() > 0, Errc::Degenerate, "empty mask");
  const cplx s = masked_inner(u_approx.values, u_ref.values, mask);
  const double scale = masked_norm(u_ref.values, mask) * masked_norm(u_approx.values, mask);
  require(scale > 0.0 && std::abs(s) > 1e-14 * scale, Errc::DegenerateAlignment,
          "zero masked overlap, the global phase is undetermined");
  PhaseAlignment out;
  out.alpha = std::arg(s);
  out.aligned = std::polar(1.0, out.alpha) * u_approx.values;
  return out;
}

double masked_relative_error(const ComplexField2D& u_ref, const ComplexField2D& u_approx,
                             const MaskRegion& mask) {
  check_pair(u_ref, u_approx, mask);
  require(mask.count() > 0, Errc::Degenerate, "empty mask");
  const double nref = masked_norm(u_ref.values, mask);
  require(nref > 0.0, Errc::Degenerate, "reference field vanishes on the mask");
  // with zero overlap the distance does not depend on the phase
  const cplx s = masked_inner(u_approx.values, u_ref.values, mask);
  const double alpha = std::abs(s) > 0.0 ? std::arg(s) : 0.0;
  const Eigen::VectorXcd d = u_ref.values - std::polar(1.0, alpha) * u_approx.values;
  return masked_norm(d, mask) / nref;
}

Eigen::VectorXd phase_mismatch(const ComplexField2D& u_ref, const ComplexField2D& u_approx,
                               const MaskRegion& mask) {
  check_pair(u_ref, u_approx, mask);
  Eigen::VectorXd out(u_ref.values.size());
  for (Eigen::Index k = 0; k < out.size(); ++k)
    out[k] = mask.member[k] ? std::arg(u_ref.values[k] * std::conj(u_approx.values[k]))
                            : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double loglog_slope(const std::vector<double>& eps, const std::vector<double>& err) {
  require(eps.size() == err.size() && eps.size() >= 2, Errc::Dimension,
          "slope needs at least two matching points");
  const double n = static_cast<double>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    require(eps[i] > 0 && err[i] > 0, Errc::Parameter, "log-log slope of non-positive data");
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  require(den > 0.0, Errc::Degenerate, "all eps values coincide");
  return (n * sxy - sx * sy) / den;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "eps,E_M1,E_M2,ratio,level,dt\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.eps << ',' << r.e_m1 << ',' << r.e_m2 << ',' << r.ratio() << ',' << r.level << ','
       << r.dt << '\n';
}

}  // namespace hyvort
