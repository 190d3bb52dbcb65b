#pragma once

#include <functional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "mrlab/mesh.hpp"
#include "mrlab/quadrature.hpp"

namespace mrlab {

/// Symmetric diffusion tensor a_ij(x) with its claimed ellipticity constant:
/// lambda^{-1} |xi|^2 <= xi . a(x) xi <= lambda |xi|^2.
struct CoefficientField {
  std::string descriptor;
  double lambda = 1.0;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> a;

  Eigen::Matrix2d operator()(const Eigen::Vector2d& x) const { return a(x); }

  /// c * a with lambda widened so that the scaled field stays admissible.
  CoefficientField scaled(double c) const;
};

CoefficientField identity_coefficients();
/// [[1 + sin(pi x) sin(pi y)/2, xy/4], [xy/4, 1 + cos(pi x)/2]], lambda = 4.
CoefficientField smooth_anisotropic_coefficients();
/// delta_ij (1 + |x - 1/2|^0.6 / 2), lambda = 2.
CoefficientField holder_rough_coefficients();
CoefficientField constant_coefficients(const Eigen::Matrix2d& a, double lambda, std::string descriptor);

/// identity | anisotropic | rough
CoefficientField coefficient_from_name(std::string_view name);

struct EllipticityReport {
  bool ok = true;
  /// Smallest lambda that would be admissible at the sampled points:
  /// max over points of max(mu_max, 1 / mu_min).
  double worst_ratio = 1.0;
  Eigen::Vector2d worst_point = Eigen::Vector2d::Zero();
  /// max |a_12 - a_21| over the points.
  double asymmetry = 0.0;
};

EllipticityReport check_ellipticity(const CoefficientField& coeff, const Mesh& mesh, const QuadratureRule& rule);
EllipticityReport check_ellipticity_at(const CoefficientField& coeff, const std::vector<Eigen::Vector2d>& points);

}  // namespace mrlab
