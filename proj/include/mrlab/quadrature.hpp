#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace mrlab {

/// Quadrature on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct QuadratureRule {
  std::string name;
  int degree = 0;
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate Gauss product rule exact for polynomials of total
/// degree <= `degree`.
QuadratureRule triangle_rule(int degree);

}  // namespace mrlab
