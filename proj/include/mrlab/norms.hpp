#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mrlab/assembly.hpp"
#include "mrlab/bdf.hpp"

namespace mrlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class SpatialKind { Lq, W1q, Wm1q };

/// Exponents of an l^p(X) norm, X in {L^q, W^{1,q}, discrete W^{-1,q}}.
struct NormSpec {
  double p = 2.0;
  double q = 2.0;
  SpatialKind kind = SpatialKind::Lq;

  /// Throws std::invalid_argument for p outside [1, inf], q outside [1, inf],
  /// or a negative norm with q not in (1, inf).
  void validate() const;
};

/// Exponent from text: a number or "inf".
double parse_exponent(const std::string& text);
std::string format_exponent(double e);

// x^e, by repeated multiplication when e is a small nonnegative integer.
double real_power(double x, double e);

/// (sum_i w_i a_i^q)^{1/q} for nonnegative samples a_i; the maximum for q = inf.
double weighted_lq(const RealVector& weights, const RealVector& a, double q);

/// (int |u|^q)^{1/q} by quadrature; q = inf takes the max of |u| over the
/// quadrature points and the Lagrange nodes.
template <class Scalar>
double lq_norm_nodal(const FESpace& space, const Vector<Scalar>& nodal, double q);
double lq_norm(const FEFunction& u, double q);

/// || |grad u| ||_{L^q} with the Euclidean length of the elementwise gradient.
double gradient_lq_norm(const FESpace& space, const RealVector& nodal, double q);

/// (||u||_q^q + ||grad u||_q^q)^{1/q}; for q = inf the larger of the two.
double w1q_norm(const FEFunction& u, double q);

/// ||grad z_h||_q + ||z_h||_q with K Z = M F, the discrete elliptic lift of f.
double neg_norm(const AssembledPair& pair, const FEFunction& f, double q);

/// (tau sum_n v_n^p)^{1/p}, or max_n v_n for p = inf.
double lp_time_norm(const std::vector<double>& values, double p, double tau);

/// Spatial norm of one interior coefficient vector of pair's space.
double spatial_norm(const AssembledPair& pair, const RealVector& interior, const NormSpec& spec);
/// Spatial norms of every entry of a sequence, in order.
std::vector<double> spatial_norms(const AssembledPair& pair, const Sequence& sequence, const NormSpec& spec);
/// l^p(X) norm of a sequence.
double sequence_norm(const AssembledPair& pair, const Sequence& sequence, const NormSpec& spec, double tau);

/// || (sum_j |w_j|^2)^{1/2} ||_{L^q}, the square function formed pointwise at
/// the quadrature points. Entries are nodal vectors (all Lagrange nodes).
double square_function_norm(const FESpace& space, const std::vector<ComplexVector>& nodal, double q);

}  // namespace mrlab
