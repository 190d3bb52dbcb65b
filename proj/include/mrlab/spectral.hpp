#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseLU>

#include "mrlab/assembly.hpp"

namespace mrlab {

using ComplexSparseMatrix = Eigen::SparseMatrix<Complex>;

/// Points of the sector Sigma_{theta + pi/2}: every ray crossed with every radius.
struct SectorSample {
  double theta = 0.0;
  std::vector<double> radii;
  std::vector<double> rays;
  std::vector<Complex> points;

  /// Throws std::invalid_argument unless 0 < theta < pi/2, every ray satisfies
  /// |arg z| <= theta + pi/2 and every radius is positive.
  static SectorSample make(double theta, std::vector<double> rays, std::vector<double> radii);
  /// Boundary rays +-(theta + pi/2) and the positive real axis with
  /// `count` log-spaced radii in [lambda_min 1e-3, lambda_max 1e3].
  static SectorSample standard(double theta, double lambda_min, double lambda_max, int count = 25);
};

/// K Phi = M Phi Lambda with Phi^T M Phi = I, eigenvalues ascending.
struct Eigensystem {
  RealVector lambdas;
  Eigen::MatrixXd phi;

  double residual = 0.0;             // max |K Phi - M Phi Lambda| / max |K|
  double orthonormality_defect = 0.0;  // max |Phi^T M Phi - I|
};

/// Dense generalized eigendecomposition; throws std::invalid_argument above
/// `max_dofs` degrees of freedom.
Eigensystem compute_eigensystem(const AssembledPair& pair, std::size_t max_dofs = 5000);

struct ExtremeEigenpairs {
  double lambda_min = 0.0;
  RealVector phi_min;  // M-normalized, positive coefficient sum
  double lambda_max = 0.0;
};

/// Inverse iteration for the smallest eigenpair and power iteration on
/// M^{-1} K for the largest eigenvalue.
ExtremeEigenpairs extreme_eigenpairs(const AssembledPair& pair, double tol = 1e-13, int max_iterations = 2000);

/// Linear map on interior coefficient vectors together with its adjoint in
/// the L^2 (mass matrix) inner product.
struct LinearOperator {
  std::function<ComplexVector(const ComplexVector&)> apply;
  std::function<ComplexVector(const ComplexVector&)> adjoint;
};

/// z (z - A_h)^{-1} P_h restricted to S_h, i.e. U -> z (zM + K)^{-1} M U, with
/// one sparse LU factorization of zM + K.
class Resolvent {
public:
  Resolvent(std::shared_ptr<const AssembledPair> pair, Complex z);

  Complex z() const { return z_; }
  /// z (zM + K)^{-1} M g.
  ComplexVector apply(const ComplexVector& g) const;
  /// (zM + K)^{-1} M g, the matrix form of (z - A_h)^{-1} g.
  ComplexVector solve(const ComplexVector& g) const;
  /// The L^2 adjoint, equal to the same operator at conj(z).
  ComplexVector adjoint(const ComplexVector& g) const;
  LinearOperator as_operator() const;

private:
  std::shared_ptr<const AssembledPair> pair_;
  Complex z_;
  std::shared_ptr<Eigen::SparseLU<ComplexSparseMatrix>> lu_;
};

/// One-shot z (z - A_h)^{-1} P_h g; throws SolverError when zM + K is singular.
ComplexFEFunction resolvent_apply(std::shared_ptr<const AssembledPair> pair, Complex z, const ComplexFEFunction& g);

/// Phi e^{-z Lambda} Phi^T M v; requires Re z >= 0.
ComplexVector semigroup_apply(const Eigensystem& eig, const SparseMatrix& mass, Complex z, const ComplexVector& v);

struct NormEstimateOptions {
  int restarts = 5;
  int iterations = 50;
  /// Krylov dimension of the q = 2 Lanczos path.
  int krylov_dim = 200;
  std::uint64_t seed = 20240601;
  /// Dense operators for q in {1, inf} are only formed up to this size.
  std::size_t explicit_max_dofs = 3000;
};

/// Lower bound for ||T||_{L^q -> L^q} over S_h.
///
/// 1 < q < inf: maximum over random restarts of an ascent on the ratio
/// ||T v||_q / ||v||_q; for q = 2 the ascent is Lanczos on T*T in the mass
/// inner product, otherwise the nonlinear power iteration
/// y = T v, g = |y|^{q-2} y, x = T* P_h g, v = I_h(|x|^{q'-2} x).
/// q in {1, inf}: the operator is formed column by column; q = inf uses the
/// maximal nodal row sum and its sign vector, q = 1 the images of the hat
/// functions. Every reported value is the ratio of an actual test function.
double operator_norm_q(const FESpace& space, const LinearOperator& op, double q,
                       const NormEstimateOptions& options = {});

struct RBoundOptions {
  int trials = 200;
  /// Ascent steps from each random batch (0 evaluates the batches only).
  int ascent_iterations = 0;
  int krylov_dim = 200;
  std::uint64_t seed = 20240601;
  /// Sub-collections are enumerated exhaustively up to this many points;
  /// beyond it only the full collection and the singletons are evaluated.
  int max_subset_points = 10;
};

struct RBoundResult {
  double estimate = 0.0;
  int best_trial = -1;
  /// Bitmask of the sub-collection that attains the estimate.
  std::uint64_t best_subset = 0;
};

/// One batch v_1..v_m of interior coefficient vectors.
using Batch = std::vector<ComplexVector>;

/// Square-function ratio ||(sum |T_j v_j|^2)^{1/2}||_q / ||(sum |v_j|^2)^{1/2}||_q.
double square_function_ratio(const FESpace& space, const std::vector<LinearOperator>& ops, const Batch& batch, double q);

/// Sampled R-bound of {T_1..T_m}: the maximum square-function ratio over the
/// given batches (or `trials` seeded Gaussian batches) and over their
/// sub-collections, optionally after ascent. Random entries are drawn from a
/// stream keyed by (seed, trial, j), so adding operators leaves the existing
/// entries unchanged.
RBoundResult rbound_sample(const FESpace& space, const std::vector<LinearOperator>& ops, double q,
                           const RBoundOptions& options = {}, const std::vector<Batch>* batches = nullptr);

/// Gaussian complex vector from the stream (seed, a, b).
ComplexVector seeded_complex_vector(Eigen::Index n, std::uint64_t seed, std::uint64_t a, std::uint64_t b);

struct SweepRow {
  Complex z;
  double estimate = 0.0;
  /// 1 for |arg z| <= pi/2, else 1 / sin(pi - |arg z|).
  double q2_bound = 0.0;
};

/// Resolvent norm estimates at every point of the sample.
std::vector<SweepRow> sector_sweep(std::shared_ptr<const AssembledPair> pair, double q, const SectorSample& sample,
                                   const NormEstimateOptions& options = {});

/// max_j |z| / |z + lambda_j|.
double resolvent_norm_q2(const RealVector& lambdas, Complex z);
double q2_sector_bound(Complex z);

}  // namespace mrlab
