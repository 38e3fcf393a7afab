#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hyvort/metrics.hpp"

using namespace hyvort;

namespace {

constexpr double kPi = std::numbers::pi;

VortexConfig default_pair() { return {{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0}; }

ComplexField2D random_field(const Grid2D& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXcd v(g.interior_count());
  for (int k = 0; k < v.size(); ++k) v[k] = cplx(d(rng), d(rng));
  return ComplexField2D(g, v);
}

ComplexField2D scaled(const ComplexField2D& u, cplx c) {
  return ComplexField2D(u.grid, c * u.values);
}

double masked_distance(const ComplexField2D& a, const Eigen::VectorXcd& b, const MaskRegion& m) {
  return masked_norm(a.values - b, m);
}

}  // namespace

TEST(Mask, ZeroRadiusKeepsEverything) {
  const Grid2D g(5);
  const auto m = build_mask(default_pair(), 0.0, g);
  EXPECT_EQ(m.count(), g.interior_count());
  EXPECT_THROW(build_mask(default_pair(), -0.1, g), Error);
}

TEST(Mask, DefaultConfigurationArea) {
  for (int level : {5, 6, 7, 8}) {
    const Grid2D g(level);
    const auto m = build_mask(default_pair(), 0.1, g);
    // interior nodes carry weight h^2 over (1 - 2h)^2 of the square
    const double expected = 1.0 - 2 * kPi * 0.01;
    EXPECT_NEAR(m.area(), expected, 4 * g.h) << level;
  }
}

TEST(Mask, MembershipRule) {
  const Grid2D g(6);
  const auto m = build_mask(default_pair(), 0.1, g);
  for (int k = 0; k < g.interior_count(); ++k) {
    const Vec2 x = g.node(k);
    const bool out = (x - default_pair().positions[0]).norm() >= 0.1 &&
                     (x - default_pair().positions[1]).norm() >= 0.1;
    EXPECT_EQ(m.contains(k), out);
  }
}

TEST(Mask, CentersOutsideDomain) {
  const Grid2D g(5);
  const VortexConfig far{{Vec2(3.0, 3.0), Vec2(-2.0, 0.5)}, 0.0};
  EXPECT_EQ(build_mask(far, 0.1, g).count(), g.interior_count());
}

TEST(AlignPhase, ExactPhaseFactor) {
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 1);
  const auto a = align_phase(u, scaled(u, std::polar(1.0, 0.7)), mask);
  EXPECT_NEAR(a.alpha, -0.7, 1e-14);
  EXPECT_LE(masked_distance(u, a.aligned, mask), 1e-13 * masked_norm(u.values, mask));
  EXPECT_NEAR(align_phase(u, u, mask).alpha, 0.0, 1e-15);
}

TEST(AlignPhase, RecoversReferencePhaseConvention) {
  // u_approx = e^{i0.7} u_ref is aligned by e^{-i0.7}; equivalently u_ref = e^{i0.7} u_approx
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto v = random_field(g, 2);
  const auto a = align_phase(scaled(v, std::polar(1.0, 0.7)), v, mask);
  EXPECT_NEAR(a.alpha, 0.7, 1e-14);
}

TEST(AlignPhase, Optimality) {
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 3), v = random_field(g, 4);
  const auto a = align_phase(u, v, mask);
  const double d0 = masked_distance(u, a.aligned, mask);
  for (double da : {-0.01, 0.01}) {
    const Eigen::VectorXcd w = std::polar(1.0, a.alpha + da) * v.values;
    EXPECT_GT(masked_distance(u, w, mask), d0);
  }
}

TEST(AlignPhase, Idempotent) {
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 5), v = random_field(g, 6);
  const auto a = align_phase(u, v, mask);
  const auto b = align_phase(u, ComplexField2D(g, a.aligned), mask);
  EXPECT_NEAR(b.alpha, 0.0, 1e-10);
}

TEST(AlignPhase, ZeroOverlapIsDegenerate) {
  const Grid2D g(4);
  const auto mask = build_mask(default_pair(), 0.0, g);
  const auto u = random_field(g, 7);
  try {
    align_phase(u, ComplexField2D(g), mask);
    FAIL() << "expected degenerate alignment";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateAlignment);
  }
}

TEST(MaskedError, TrivialCases) {
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 8);
  EXPECT_EQ(masked_relative_error(u, u, mask), 0.0);
  EXPECT_NEAR(masked_relative_error(u, ComplexField2D(g), mask), 1.0, 1e-15);
  const auto empty = build_mask(VortexConfig{{Vec2(0.5, 0.5)}, 0.0}, 2.0, g);
  EXPECT_THROW(masked_relative_error(u, u, empty), Error);
}

TEST(MaskedError, PythagoreanConstruction) {
  const Grid2D g(6);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 9);
  auto w = random_field(g, 10);
  // project w off span_C{u} in the masked inner product and zero it outside the mask
  for (int k = 0; k < g.interior_count(); ++k)
    if (!mask.contains(k)) w.values[k] = 0.0;
  const cplx c = masked_inner(u.values, w.values, mask) / masked_inner(u.values, u.values, mask);
  w.values -= c * u.values;
  for (int k = 0; k < g.interior_count(); ++k)
    if (!mask.contains(k)) w.values[k] = 0.0;
  w.values *= masked_norm(u.values, mask) / masked_norm(w.values, mask);
  ASSERT_LE(std::abs(masked_inner(u.values, w.values, mask)), 1e-12 * std::pow(masked_norm(u.values, mask), 2));
  const double delta = 1e-3;
  const ComplexField2D v(g, u.values + delta * w.values);
  EXPECT_NEAR(masked_relative_error(u, v, mask), delta, 1e-6);
}

TEST(MaskedError, GlobalPhaseInvariance) {
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 11), v = random_field(g, 12);
  const cplx c = std::polar(1.0, 1.234);
  EXPECT_NEAR(masked_relative_error(u, v, mask),
              masked_relative_error(scaled(u, c), scaled(v, c), mask), 1e-14);
}

TEST(PhaseMismatch, ConstantShift) {
  const Grid2D g(5);
  const auto mask = build_mask(default_pair(), 0.1, g);
  const auto u = random_field(g, 13);
  const auto same = phase_mismatch(u, u, mask);
  const auto shifted = phase_mismatch(u, scaled(u, std::polar(1.0, -0.2)), mask);
  for (int k = 0; k < g.interior_count(); ++k) {
    if (mask.contains(k)) {
      EXPECT_EQ(same[k], 0.0);
      EXPECT_NEAR(shifted[k], 0.2, 1e-14);
    } else {
      EXPECT_TRUE(std::isnan(same[k]));
    }
  }
}

TEST(PhaseMismatch, AlignedWeightedMeanVanishes) {
  // small phase perturbation of a unit-modulus field, then alignment
  const Grid2D g(6);
  const auto mask = build_mask(default_pair(), 0.1, g);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ComplexField2D u(g), v(g);
  for (int k = 0; k < g.interior_count(); ++k) {
    const double th = 3.0 * g.node(k).x() + std::sin(4.0 * g.node(k).y());
    u.values[k] = std::polar(1.0, th);
    v.values[k] = std::polar(1.0, th + 0.4 + 1e-3 * d(rng));
  }
  const auto a = align_phase(u, v, mask);
  const auto dphi = phase_mismatch(u, ComplexField2D(g, a.aligned), mask);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < g.interior_count(); ++k) {
    if (!mask.contains(k)) continue;
    const double w = std::abs(u.values[k] * a.aligned[k]);
    num += w * dphi[k];
    den += w;
  }
  EXPECT_LE(std::abs(num / den), 1e-8);
}

TEST(Sweep, SlopeAndCsv) {
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::vector<double> err;
  for (double e : eps) err.push_back(0.3 * e);
  EXPECT_NEAR(loglog_slope(eps, err), 1.0, 1e-12);
  for (auto& e : err) e = e * e;
  EXPECT_NEAR(loglog_slope(eps, err), 2.0, 1e-12);
  EXPECT_THROW(loglog_slope({0.1}, {0.1}), Error);
  std::ostringstream os;
  write_sweep_csv(os, {{0.1, 0.2, 0.1, 6, 1e-4}});
  EXPECT_EQ(os.str(), "eps,E_M1,E_M2,ratio,level,dt\n0.1,0.2,0.1,0.5,6,0.0001\n");
}
