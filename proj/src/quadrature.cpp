#include "fsmc/quadrature.hpp"

#include <cfloat>
#include <cmath>
#include <string>

#include "fsmc/errors.hpp"

namespace fsmc {

namespace {
// pi^{-1/4}, leading coefficient of the orthonormal Hermite recurrence
constexpr double kPiM4 = 0.75112554446494248286;
constexpr double kRescale = 0x1p500;  // power of two, so rescaling is exact

// Orthonormal Hermite polynomial of degree n at z, with power-of-two
// rescaling so high orders do not overflow: the true values are
// pn * 2^(500 k) and pnm1 * 2^(500 k).
struct HermiteEval {
  double pn;
  double pnm1;
  int scale_count;
};

HermiteEval eval_hermite(int n, double z) {
  double p1 = kPiM4;
  double p2 = 0.0;
  int k = 0;
  for (int j = 0; j < n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
    if (std::abs(p1) > kRescale) {
      p1 /= kRescale;
      p2 /= kRescale;
      ++k;
    }
  }
  return {p1, p2, k};
}

// The nodes are the eigenvalues of the Jacobi tridiagonal (zero diagonal,
// off-diagonal sqrt(j/2)).  Sturm count: number of eigenvalues below x.
int sturm_count_below(int n, double x) {
  int count = 0;
  double d = -x;
  if (d < 0.0) ++count;
  for (int j = 1; j < n; ++j) {
    const double b2 = 0.5 * j;
    if (d == 0.0) d = -1e-300;
    d = -x - b2 / d;
    if (d < 0.0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based) by bisection; robust at every order.
double bisect_root(int n, int k, double lo, double hi) {
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count_below(n, mid) <= k) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
  if (order < 1 || order > 512) {
    throw ConfigError("gauss_hermite: order must be in [1, 512], got " + std::to_string(order));
  }

  const int n = order;
  const int m = (n + 1) / 2;
  std::vector<double> root(m), weight(m);

  const double bound = std::sqrt(2.0 * n + 1.0) + 1.0;
  for (int i = 0; i < m; ++i) {
    // root[i] is the i-th largest node: eigenvalue n-1-i of the Jacobi matrix
    double z = bisect_root(n, n - 1 - i, 0.0 - (n % 2 ? 1e-9 : 0.0), bound);

    // Newton polish to machine precision
    bool converged = false;
    HermiteEval ev{0.0, 0.0, 0};
    for (int it = 0; it < 50; ++it) {
      ev = eval_hermite(n, z);
      const double pp = std::sqrt(2.0 * n) * ev.pnm1;  // same scale as ev.pn
      const double z_old = z;
      z = z_old - ev.pn / pp;
      if (std::abs(z - z_old) <= 1e-14 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw EvalError("gauss_hermite: Newton polish failed to converge at order " +
                      std::to_string(order));
    }
    root[i] = z;

    const double pp_scaled = std::sqrt(2.0 * n) * ev.pnm1;
    if (ev.scale_count == 0 && std::abs(pp_scaled) < 1e100) {
      weight[i] = 2.0 / (pp_scaled * pp_scaled);
    } else {
      // extreme nodes: the true weight can fall below the double range;
      // clamp to the smallest normal to keep the positivity invariant
      const double log2_w =
          1.0 - 2.0 * (std::log2(std::abs(pp_scaled)) + 500.0 * ev.scale_count);
      const double w = std::exp2(log2_w);
      weight[i] = (w >= DBL_MIN) ? w : DBL_MIN;
    }
  }

  QuadratureRule rule;
  rule.order = n;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  for (int i = 0; i < m; ++i) {
    rule.nodes[i] = -root[i];
    rule.nodes[n - 1 - i] = root[i];
    rule.weights[i] = weight[i];
    rule.weights[n - 1 - i] = weight[i];
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace fsmc
