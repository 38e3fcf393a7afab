#include "hyvort/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "hyvort/error.hpp"

namespace hyvort {

GaussRule gauss_legendre(int n) {
  require(n >= 1, Errc::Parameter, "Gauss rule needs at least one node");
  GaussRule g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    g.nodes[i] = -x;
    g.nodes[n - 1 - i] = x;
    g.weights[i] = g.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

}  // namespace hyvort
