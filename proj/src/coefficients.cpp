#include "mrlab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace mrlab {

CoefficientField CoefficientField::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("coefficient scaling must be positive");
  CoefficientField out = *this;
  out.descriptor = fmt::format("{}*{}", c, descriptor);
  out.lambda = std::max(c * lambda, lambda / c);
  out.a = [inner = a, c](const Eigen::Vector2d& x) -> Eigen::Matrix2d { return c * inner(x); };
  return out;
}

CoefficientField identity_coefficients() {
  return {"identity", 1.0, [](const Eigen::Vector2d&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Identity(); }};
}

CoefficientField smooth_anisotropic_coefficients() {
  using std::numbers::pi;
  return {"anisotropic", 4.0, [](const Eigen::Vector2d& p) -> Eigen::Matrix2d {
            const double x = p.x(), y = p.y();
            Eigen::Matrix2d a;
            a(0, 0) = 1.0 + 0.5 * std::sin(pi * x) * std::sin(pi * y);
            a(0, 1) = a(1, 0) = 0.25 * x * y;
            a(1, 1) = 1.0 + 0.5 * std::cos(pi * x);
            return a;
          }};
}

CoefficientField holder_rough_coefficients() {
  return {"rough", 2.0, [](const Eigen::Vector2d& p) -> Eigen::Matrix2d {
            const double s = 1.0 + 0.5 * std::pow(std::abs(p.x() - 0.5), 0.6);
            return s * Eigen::Matrix2d::Identity();
          }};
}

CoefficientField constant_coefficients(const Eigen::Matrix2d& a, double lambda, std::string descriptor) {
  return {std::move(descriptor), lambda, [a](const Eigen::Vector2d&) -> Eigen::Matrix2d { return a; }};
}

CoefficientField coefficient_from_name(std::string_view name) {
  if (name == "identity") return identity_coefficients();
  if (name == "anisotropic") return smooth_anisotropic_coefficients();
  if (name == "rough") return holder_rough_coefficients();
  throw std::invalid_argument(fmt::format("unknown coefficient field '{}'", name));
}

EllipticityReport check_ellipticity_at(const CoefficientField& coeff, const std::vector<Eigen::Vector2d>& points) {
  EllipticityReport report;
  report.worst_ratio = 0.0;
  for (const auto& x : points) {
    const Eigen::Matrix2d a = coeff(x);
    report.asymmetry = std::max(report.asymmetry, std::abs(a(0, 1) - a(1, 0)));
    const Eigen::Vector2d mu = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(0.5 * (a + a.transpose()),
                                                                              Eigen::EigenvaluesOnly)
                                   .eigenvalues();
    const double ratio = mu[0] > 0.0 ? std::max(mu[1], 1.0 / mu[0]) : std::numeric_limits<double>::infinity();
    if (ratio > report.worst_ratio) {
      report.worst_ratio = ratio;
      report.worst_point = x;
    }
  }
  report.ok = report.worst_ratio <= coeff.lambda * (1.0 + 1e-12) && report.asymmetry <= 1e-14;
  return report;
}

EllipticityReport check_ellipticity(const CoefficientField& coeff, const Mesh& mesh, const QuadratureRule& rule) {
  std::vector<Eigen::Vector2d> points;
  points.reserve(mesh.num_triangles() * rule.size());
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector2d& p0 = mesh.vertices[tri[0]];
    const Eigen::Vector2d e1 = mesh.vertices[tri[1]] - p0;
    const Eigen::Vector2d e2 = mesh.vertices[tri[2]] - p0;
    for (const auto& ref : rule.points) points.push_back(p0 + ref.x() * e1 + ref.y() * e2);
  }
  return check_ellipticity_at(coeff, points);
}

}  // namespace mrlab
