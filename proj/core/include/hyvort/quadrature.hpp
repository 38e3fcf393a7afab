#pragma once

#include <vector>

namespace hyvort {

struct GaussRule {
  std::vector<double> nodes;    // on [-1,1]
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

}  // namespace hyvort
