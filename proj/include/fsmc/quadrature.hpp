#pragma once

#include <vector>

namespace fsmc {

// Gauss-Hermite rule in the physicists' convention: sum_k w_k f(s_k)
// approximates the integral of f(s) exp(-s^2) ds over the real line.
// Nodes are strictly increasing and symmetric about 0; weights sum to
// sqrt(pi).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

// Newton iteration on the orthonormal Hermite recurrence; 1 <= order <= 512.
QuadratureRule gauss_hermite(int order);

}  // namespace fsmc
