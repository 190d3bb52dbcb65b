#include "mrlab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace mrlab {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre needs at least one point");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Map [-1, 1] -> [0, 1].
    nodes[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

QuadratureRule triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature degree must be non-negative");
  // x = u (1 - v), y = v, Jacobian (1 - v): degree d in u and d + 1 in v.
  const int n = (degree + 3) / 2;
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);

  QuadratureRule rule;
  rule.name = fmt::format("collapsed-gauss-{}x{}", n, n);
  rule.degree = degree;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double u = gx[i];
      const double v = gx[j];
      rule.points.emplace_back(u * (1.0 - v), v);
      rule.weights.push_back(gw[i] * gw[j] * (1.0 - v));
    }
  }
  return rule;
}

}  // namespace mrlab
