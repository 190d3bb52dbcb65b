#include "mrlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace mrlab {

double real_power(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  if (e == 3.0) return x * x * x;
  if (e == 4.0) {
    const double x2 = x * x;
    return x2 * x2;
  }
  return std::pow(x, e);
}

double weighted_lq(const RealVector& weights, const RealVector& a, double q) {
  if (std::isinf(q)) return a.size() == 0 ? 0.0 : a.maxCoeff();
  if (q == 2.0) return std::sqrt(weights.dot(a.cwiseAbs2()));
  if (q == 1.0) return weights.dot(a);
  // Scale by the maximum so that large q neither overflows nor underflows.
  const double m = a.size() == 0 ? 0.0 : a.maxCoeff();
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += weights[i] * real_power(a[i] / m, q);
  return m * std::pow(sum, 1.0 / q);
}

namespace {

void check_q(double q) {
  if (!(q >= 1.0)) throw std::invalid_argument(fmt::format("spatial exponent must lie in [1, inf], got {}", q));
}

}  // namespace

void NormSpec::validate() const {
  if (!(p >= 1.0)) throw std::invalid_argument(fmt::format("temporal exponent must lie in [1, inf], got {}", p));
  check_q(q);
  if (kind == SpatialKind::Wm1q && (q <= 1.0 || std::isinf(q)))
    throw std::invalid_argument(fmt::format("negative norm needs 1 < q < inf, got {}", q));
}

double parse_exponent(const std::string& text) {
  if (text == "inf" || text == "infinity") return kInfinity;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 1.0))
    throw std::invalid_argument(fmt::format("invalid exponent '{}' (expected a number >= 1 or inf)", text));
  return v;
}

std::string format_exponent(double e) { return std::isinf(e) ? "inf" : fmt::format("{:g}", e); }

template <class Scalar>
double lq_norm_nodal(const FESpace& space, const Vector<Scalar>& nodal, double q) {
  check_q(q);
  if (nodal.size() != static_cast<Eigen::Index>(space.num_nodes()))
    throw std::invalid_argument("nodal vector does not match the space");
  const Vector<Scalar> at_qp = space.value_matrix() * nodal;
  const RealVector abs_qp = at_qp.cwiseAbs();
  if (std::isinf(q)) {
    const double nodes = nodal.size() == 0 ? 0.0 : nodal.cwiseAbs().maxCoeff();
    return std::max(nodes, weighted_lq(space.quadrature_weights(), abs_qp, q));
  }
  return weighted_lq(space.quadrature_weights(), abs_qp, q);
}

template double lq_norm_nodal<double>(const FESpace&, const RealVector&, double);
template double lq_norm_nodal<Complex>(const FESpace&, const ComplexVector&, double);

double lq_norm(const FEFunction& u, double q) { return lq_norm_nodal(*u.space, u.nodal(), q); }

double gradient_lq_norm(const FESpace& space, const RealVector& nodal, double q) {
  check_q(q);
  const RealVector gx = space.dx_matrix() * nodal;
  const RealVector gy = space.dy_matrix() * nodal;
  const RealVector length = (gx.cwiseAbs2() + gy.cwiseAbs2()).cwiseSqrt();
  return weighted_lq(space.quadrature_weights(), length, q);
}

double w1q_norm(const FEFunction& u, double q) {
  const RealVector nodal = u.nodal();
  const double a = lq_norm_nodal(*u.space, nodal, q);
  const double b = gradient_lq_norm(*u.space, nodal, q);
  if (std::isinf(q)) return std::max(a, b);
  const double m = std::max(a, b);
  if (m == 0.0) return 0.0;
  return m * std::pow(std::pow(a / m, q) + std::pow(b / m, q), 1.0 / q);
}

double neg_norm(const AssembledPair& pair, const FEFunction& f, double q) {
  if (!(q > 1.0) || std::isinf(q)) throw std::invalid_argument(fmt::format("negative norm needs 1 < q < inf, got {}", q));
  if (f.layout != Layout::interior) throw std::invalid_argument("negative norm expects an interior-dof function");
  const RealVector z = pair.solve_stiffness(RealVector(pair.mass() * f.coeffs));
  const RealVector nodal = pair.space().to_nodal(z);
  return gradient_lq_norm(pair.space(), nodal, q) + lq_norm_nodal(pair.space(), nodal, q);
}

double lp_time_norm(const std::vector<double>& values, double p, double tau) {
  if (!(p >= 1.0)) throw std::invalid_argument(fmt::format("temporal exponent must lie in [1, inf], got {}", p));
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (values.empty()) return 0.0;
  const double m = *std::max_element(values.begin(), values.end());
  if (std::isinf(p)) return m;
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += std::pow(v / m, p);
  return m * std::pow(tau * sum, 1.0 / p);
}

double spatial_norm(const AssembledPair& pair, const RealVector& interior, const NormSpec& spec) {
  const FEFunction u{pair.space_ptr(), interior, Layout::interior};
  switch (spec.kind) {
    case SpatialKind::Lq:
      return lq_norm(u, spec.q);
    case SpatialKind::W1q:
      return w1q_norm(u, spec.q);
    case SpatialKind::Wm1q:
      return neg_norm(pair, u, spec.q);
  }
  return 0.0;
}

std::vector<double> spatial_norms(const AssembledPair& pair, const Sequence& sequence, const NormSpec& spec) {
  spec.validate();
  std::vector<double> out;
  out.reserve(sequence.values.size());
  for (const auto& v : sequence.values) out.push_back(spatial_norm(pair, v, spec));
  return out;
}

double sequence_norm(const AssembledPair& pair, const Sequence& sequence, const NormSpec& spec, double tau) {
  return lp_time_norm(spatial_norms(pair, sequence, spec), spec.p, tau);
}

double square_function_norm(const FESpace& space, const std::vector<ComplexVector>& nodal, double q) {
  check_q(q);
  RealVector sum = RealVector::Zero(static_cast<Eigen::Index>(space.num_quadrature_points()));
  for (const auto& w : nodal) {
    if (w.size() != static_cast<Eigen::Index>(space.num_nodes()))
      throw std::invalid_argument("nodal vector does not match the space");
    const ComplexVector at_qp = space.value_matrix() * w;
    sum += at_qp.cwiseAbs2();
  }
  return weighted_lq(space.quadrature_weights(), RealVector(sum.cwiseSqrt()), q);
}

}  // namespace mrlab
