#include "mrlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mrlab/norms.hpp"

namespace mrlab {

namespace {

constexpr double kPi = std::numbers::pi;

void check_sector_angle(double theta) {
  if (!(theta > 0.0 && theta < kPi / 2))
    throw std::invalid_argument(fmt::format("sector angle theta must lie in (0, pi/2), got {}", theta));
}

// |u|^2 at the quadrature points for an interior coefficient vector.
RealVector qp_abs2(const FESpace& space, const ComplexVector& interior) {
  const ComplexVector at_qp = space.value_matrix() * space.to_nodal(interior);
  return at_qp.cwiseAbs2();
}

}  // namespace

SectorSample SectorSample::make(double theta, std::vector<double> rays, std::vector<double> radii) {
  check_sector_angle(theta);
  if (rays.empty() || radii.empty()) throw std::invalid_argument("sector sample needs at least one ray and one radius");
  const double opening = theta + kPi / 2;
  for (double r : rays)
    if (!(std::abs(r) <= opening * (1 + 1e-15)))
      throw std::invalid_argument(fmt::format("ray arg {} lies outside the sector |arg z| <= {}", r, opening));
  for (double r : radii)
    if (!(r > 0.0) || std::isinf(r)) throw std::invalid_argument(fmt::format("sector radius must be positive, got {}", r));
  SectorSample s;
  s.theta = theta;
  s.rays = std::move(rays);
  s.radii = std::move(radii);
  for (double arg : s.rays)
    for (double r : s.radii) s.points.push_back(std::polar(r, arg));
  return s;
}

SectorSample SectorSample::standard(double theta, double lambda_min, double lambda_max, int count) {
  check_sector_angle(theta);
  if (!(lambda_min > 0.0 && lambda_max >= lambda_min) || count < 2)
    throw std::invalid_argument("standard sector sample needs 0 < lambda_min <= lambda_max and count >= 2");
  const double lo = std::log(lambda_min * 1e-3);
  const double hi = std::log(lambda_max * 1e3);
  std::vector<double> radii;
  for (int i = 0; i < count; ++i) radii.push_back(std::exp(lo + (hi - lo) * i / (count - 1)));
  const double edge = theta + kPi / 2;
  return make(theta, {-edge, 0.0, edge}, std::move(radii));
}

Eigensystem compute_eigensystem(const AssembledPair& pair, std::size_t max_dofs) {
  if (pair.num_dofs() > max_dofs)
    throw std::invalid_argument(
        fmt::format("dense eigensystem limited to {} dofs, space has {}", max_dofs, pair.num_dofs()));
  const Eigen::MatrixXd K(pair.stiffness());
  const Eigen::MatrixXd M(pair.mass());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, M);
  if (solver.info() != Eigen::Success) throw SolverError("generalized eigensolver failed");
  Eigensystem eig;
  eig.lambdas = solver.eigenvalues();
  eig.phi = solver.eigenvectors();
  const double kmax = K.cwiseAbs().maxCoeff();
  eig.residual = (K * eig.phi - M * eig.phi * eig.lambdas.asDiagonal()).cwiseAbs().maxCoeff() / kmax;
  const Eigen::MatrixXd gram = eig.phi.transpose() * M * eig.phi;
  eig.orthonormality_defect =
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  return eig;
}

ExtremeEigenpairs extreme_eigenpairs(const AssembledPair& pair, double tol, int max_iterations) {
  const auto n = static_cast<Eigen::Index>(pair.num_dofs());
  if (n == 0) throw std::invalid_argument("space has no interior dofs");
  const SparseMatrix& M = pair.mass();
  const SparseMatrix& K = pair.stiffness();
  ExtremeEigenpairs out;

  RealVector x = RealVector::Ones(n);
  x /= std::sqrt(x.dot(M * x));
  double lambda = x.dot(K * x);
  double change = kInfinity;
  for (int it = 0; it < max_iterations; ++it) {
    RealVector y = pair.solve_stiffness(RealVector(M * x));
    y /= std::sqrt(y.dot(M * y));
    if (y.dot(M * x) < 0) y = -y;
    const RealVector diff = y - x;
    const double next_change = std::sqrt(diff.dot(M * diff));
    const double next = y.dot(K * y);
    x = y;
    // Stop once the vector settles, or once the eigenvalue has converged and
    // the vector updates no longer shrink (round-off floor).
    const bool settled = std::abs(next - lambda) <= tol * next;
    const bool done = next_change <= 1e-12 || (settled && next_change >= change);
    lambda = next;
    change = next_change;
    if (done) break;
  }
  if (x.sum() < 0) x = -x;
  out.lambda_min = lambda;
  out.phi_min = x;

  // Alternating signs excite the high end of the spectrum.
  RealVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  v /= std::sqrt(v.dot(M * v));
  double top = v.dot(K * v);
  const int power_iterations = std::min(max_iterations, 500);
  for (int it = 0; it < power_iterations; ++it) {
    RealVector y = pair.solve_mass(RealVector(K * v));
    y /= std::sqrt(y.dot(M * y));
    const double next = y.dot(K * y);
    v = y;
    const bool done = std::abs(next - top) <= 1e-8 * next;
    top = next;
    if (done) break;
  }
  out.lambda_max = top;
  return out;
}

Resolvent::Resolvent(std::shared_ptr<const AssembledPair> pair, Complex z) : pair_(std::move(pair)), z_(z) {
  if (!pair_) throw std::invalid_argument("resolvent needs an assembled pair");
  if (z == Complex(0.0)) throw std::invalid_argument("resolvent point z must be nonzero");
  ComplexSparseMatrix shifted = z * pair_->mass().cast<Complex>() + pair_->stiffness().cast<Complex>();
  shifted.makeCompressed();
  lu_ = std::make_shared<Eigen::SparseLU<ComplexSparseMatrix>>();
  lu_->analyzePattern(shifted);
  lu_->factorize(shifted);
  if (lu_->info() != Eigen::Success)
    throw SolverError(fmt::format("zM + K is singular at z = {} + {}i", z.real(), z.imag()));
}

ComplexVector Resolvent::solve(const ComplexVector& g) const {
  if (g.size() != static_cast<Eigen::Index>(pair_->num_dofs()))
    throw std::invalid_argument("resolvent input does not match the space");
  ComplexVector out = lu_->solve(ComplexVector(pair_->mass() * g));
  if (lu_->info() != Eigen::Success) throw SolverError("shifted solve failed");
  return out;
}

ComplexVector Resolvent::apply(const ComplexVector& g) const { return z_ * solve(g); }

ComplexVector Resolvent::adjoint(const ComplexVector& g) const {
  if (g.size() != static_cast<Eigen::Index>(pair_->num_dofs()))
    throw std::invalid_argument("resolvent input does not match the space");
  // (conj(z) M + K)^{-1} y = conj((zM + K)^{-1} conj(y)) because M and K are real.
  const ComplexVector rhs = (pair_->mass() * g).conjugate();
  const ComplexVector solved = lu_->solve(rhs);
  return std::conj(z_) * solved.conjugate();
}

LinearOperator Resolvent::as_operator() const {
  const auto self = std::make_shared<Resolvent>(*this);
  return {[self](const ComplexVector& v) { return self->apply(v); },
          [self](const ComplexVector& v) { return self->adjoint(v); }};
}

ComplexFEFunction resolvent_apply(std::shared_ptr<const AssembledPair> pair, Complex z, const ComplexFEFunction& g) {
  if (g.space.get() != &pair->space()) throw std::invalid_argument("function does not belong to the pair's space");
  const ComplexVector interior = g.layout == Layout::interior ? g.coeffs : pair->space().to_interior(g.coeffs);
  const Resolvent r(pair, z);
  return {pair->space_ptr(), r.apply(interior), Layout::interior};
}

ComplexVector semigroup_apply(const Eigensystem& eig, const SparseMatrix& mass, Complex z, const ComplexVector& v) {
  if (z.real() < 0.0) throw std::invalid_argument("semigroup needs Re z >= 0");
  if (v.size() != eig.phi.rows()) throw std::invalid_argument("vector does not match the eigensystem");
  const ComplexVector modal = eig.phi.transpose().cast<Complex>() * (mass * v);
  ComplexVector scaled(modal.size());
  for (Eigen::Index i = 0; i < modal.size(); ++i) scaled[i] = std::exp(-z * eig.lambdas[i]) * modal[i];
  return eig.phi.cast<Complex>() * scaled;
}

ComplexVector seeded_complex_vector(Eigen::Index n, std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  ComplexVector v(n);
  for (auto& x : v) {
    const double re = g(rng);
    const double im = g(rng);
    x = Complex(re, im);
  }
  return v;
}

double square_function_ratio(const FESpace& space, const std::vector<LinearOperator>& ops, const Batch& batch,
                             double q) {
  if (ops.size() != batch.size()) throw std::invalid_argument("batch size must match the number of operators");
  const auto nqp = static_cast<Eigen::Index>(space.num_quadrature_points());
  RealVector top = RealVector::Zero(nqp);
  RealVector bottom = RealVector::Zero(nqp);
  for (std::size_t j = 0; j < ops.size(); ++j) {
    top += qp_abs2(space, ops[j].apply(batch[j]));
    bottom += qp_abs2(space, batch[j]);
  }
  const RealVector& w = space.quadrature_weights();
  const double den = weighted_lq(w, RealVector(bottom.cwiseSqrt()), q);
  if (den == 0.0) return 0.0;
  return weighted_lq(w, RealVector(top.cwiseSqrt()), q) / den;
}

namespace {

// Maximizes square-function ratios of an operator family; shared by the
// single-operator norm estimate and the R-bound sampler.
class FamilyEngine {
public:
  FamilyEngine(const FESpace& space, const std::vector<LinearOperator>& ops, double q, int max_subset_points)
      : space_(space), ops_(ops), q_(q), max_subset_(max_subset_points) {}

  struct Candidate {
    double ratio = 0.0;
    std::uint64_t subset = 0;
  };

  // Best ratio over the sub-collections of one batch.
  Candidate evaluate(const Batch& batch) const {
    const std::size_t m = ops_.size();
    std::vector<RealVector> top(m), bottom(m);
    for (std::size_t j = 0; j < m; ++j) {
      top[j] = qp_abs2(space_, ops_[j].apply(batch[j]));
      bottom[j] = qp_abs2(space_, batch[j]);
    }
    std::vector<std::uint64_t> masks;
    if (static_cast<int>(m) <= max_subset_) {
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) masks.push_back(mask);
    } else {
      for (std::size_t j = 0; j < m; ++j) masks.push_back(std::uint64_t{1} << j);
      masks.push_back(~std::uint64_t{0} >> (64 - m));
    }
    const RealVector& w = space_.quadrature_weights();
    Candidate best;
    const auto nqp = static_cast<Eigen::Index>(space_.num_quadrature_points());
    for (std::uint64_t mask : masks) {
      RealVector t = RealVector::Zero(nqp);
      RealVector b = RealVector::Zero(nqp);
      for (std::size_t j = 0; j < m; ++j) {
        if (!(mask >> j & 1U)) continue;
        t += top[j];
        b += bottom[j];
      }
      const double den = weighted_lq(w, RealVector(b.cwiseSqrt()), q_);
      if (den == 0.0) continue;
      const double r = weighted_lq(w, RealVector(t.cwiseSqrt()), q_) / den;
      if (r > best.ratio) best = {r, mask};
    }
    return best;
  }

  // Nonlinear power iteration on the block ratio; returns the best iterate.
  // Stops early once the ratio has converged to rounding level.
  Batch ascend_power(Batch v, int iterations) const {
    const std::size_t m = ops_.size();
    const RealVector& w = space_.quadrature_weights();
    const SparseMatrix& E = space_.value_matrix();
    const double qd = q_ / (q_ - 1.0);
    const auto nqp = static_cast<Eigen::Index>(space_.num_quadrature_points());
    const auto nodes = static_cast<Eigen::Index>(space_.num_nodes());
    Batch best = v;
    double best_ratio = -1.0;
    double previous = -1.0;
    for (int it = 0; it <= iterations; ++it) {
      std::vector<ComplexVector> y(m);
      RealVector s2 = RealVector::Zero(nqp);
      RealVector b2 = RealVector::Zero(nqp);
      for (std::size_t j = 0; j < m; ++j) {
        y[j] = E * space_.to_nodal(ops_[j].apply(v[j]));
        s2 += y[j].cwiseAbs2();
        b2 += qp_abs2(space_, v[j]);
      }
      const double den = weighted_lq(w, RealVector(b2.cwiseSqrt()), q_);
      const double r = den > 0.0 ? weighted_lq(w, RealVector(s2.cwiseSqrt()), q_) / den : 0.0;
      if (r > best_ratio) {
        best_ratio = r;
        best = v;
      }
      if (it == iterations || (it > 0 && std::abs(r - previous) <= 1e-13 * r)) break;
      previous = r;
      RealVector weight(nqp);
      for (Eigen::Index i = 0; i < nqp; ++i) weight[i] = s2[i] > 0.0 ? w[i] * real_power(s2[i], (q_ - 2.0) / 2.0) : 0.0;
      std::vector<ComplexVector> x(m);
      RealVector sigma2 = RealVector::Zero(nodes);
      for (std::size_t j = 0; j < m; ++j) {
        const ComplexVector b = space_.to_interior(ComplexVector(E.transpose() * weight.cwiseProduct(y[j])));
        x[j] = space_.to_nodal(ops_[j].adjoint(pair_mass_solve(b)));
        sigma2 += x[j].cwiseAbs2();
      }
      if (sigma2.maxCoeff() == 0.0) break;
      for (std::size_t j = 0; j < m; ++j) {
        ComplexVector nodal = x[j];
        for (Eigen::Index i = 0; i < nodes; ++i)
          nodal[i] = sigma2[i] > 0.0 ? nodal[i] * std::pow(sigma2[i], (qd - 2.0) / 2.0) : Complex(0.0);
        v[j] = space_.to_interior(nodal);
      }
    }
    return best;
  }

  // Lanczos on diag(T_j* T_j) in the mass inner product, started from v.
  // Stops once the residual bound beta_j |s_J| of the top Ritz pair is below 1e-9 of the Ritz value.
  Batch ascend_lanczos(const Batch& v, int krylov_dim) const {
    const std::size_t m = ops_.size();
    const auto n = static_cast<Eigen::Index>(space_.num_dofs());
    const SparseMatrix& M = *mass_;
    auto stack = [&](const Batch& b) {
      ComplexVector s(n * static_cast<Eigen::Index>(m));
      for (std::size_t j = 0; j < m; ++j) s.segment(static_cast<Eigen::Index>(j) * n, n) = b[j];
      return s;
    };
    auto unstack = [&](const ComplexVector& s) {
      Batch b(m);
      for (std::size_t j = 0; j < m; ++j) b[j] = s.segment(static_cast<Eigen::Index>(j) * n, n);
      return b;
    };
    auto mass_times = [&](const ComplexVector& s) {
      ComplexVector out(s.size());
      for (std::size_t j = 0; j < m; ++j) {
        const auto off = static_cast<Eigen::Index>(j) * n;
        out.segment(off, n) = M * s.segment(off, n);
      }
      return out;
    };
    auto apply = [&](const ComplexVector& s) {
      ComplexVector out(s.size());
      for (std::size_t j = 0; j < m; ++j) {
        const auto off = static_cast<Eigen::Index>(j) * n;
        out.segment(off, n) = ops_[j].adjoint(ops_[j].apply(s.segment(off, n)));
      }
      return out;
    };
    auto tridiagonal = [](const std::vector<double>& alpha, const std::vector<double>& beta) {
      const auto J = static_cast<Eigen::Index>(alpha.size());
      const RealVector diag = Eigen::Map<const RealVector>(alpha.data(), J);
      const RealVector sub = Eigen::Map<const RealVector>(beta.data(), J - 1);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      return tri;
    };

    const ComplexVector start = stack(v);
    const ComplexVector mstart = mass_times(start);
    const double norm0 = std::sqrt(start.dot(mstart).real());
    if (norm0 == 0.0) return v;
    const Eigen::Index dim = n * static_cast<Eigen::Index>(m);
    const int steps = static_cast<int>(std::min<Eigen::Index>(krylov_dim, dim));
    Eigen::MatrixXcd V(dim, steps), MV(dim, steps);
    V.col(0) = start / norm0;
    MV.col(0) = mstart / norm0;
    std::vector<double> alpha, beta;
    for (int j = 0; j < steps; ++j) {
      ComplexVector w = apply(V.col(j));
      alpha.push_back(MV.col(j).dot(w).real());
      for (int pass = 0; pass < 2; ++pass) {
        const ComplexVector h = MV.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * h;
      }
      const ComplexVector mw = mass_times(w);
      const double bnorm = std::sqrt(std::max(w.dot(mw).real(), 0.0));
      const double scale = *std::max_element(alpha.begin(), alpha.end(),
                                             [](double a, double b) { return std::abs(a) < std::abs(b); });
      if (j + 1 == steps || bnorm <= 1e-13 * std::max(std::abs(scale), 1e-300)) break;
      if ((j + 1) % 20 == 0) {
        const auto tri = tridiagonal(alpha, beta);
        const auto J = static_cast<Eigen::Index>(alpha.size());
        const double top = tri.eigenvalues()[J - 1];
        if (bnorm * std::abs(tri.eigenvectors()(J - 1, J - 1)) <= 1e-9 * std::abs(top)) break;
      }
      beta.push_back(bnorm);
      V.col(j + 1) = w / bnorm;
      MV.col(j + 1) = mw / bnorm;
    }
    const auto tri = tridiagonal(alpha, beta);
    const auto J = static_cast<Eigen::Index>(alpha.size());
    const ComplexVector ritz = V.leftCols(J) * tri.eigenvectors().col(J - 1).cast<Complex>();
    return unstack(ritz);
  }

  void set_mass(const SparseMatrix* mass, std::function<ComplexVector(const ComplexVector&)> solve) {
    mass_ = mass;
    mass_solve_ = std::move(solve);
  }

private:
  ComplexVector pair_mass_solve(const ComplexVector& b) const { return mass_solve_(b); }

  const FESpace& space_;
  const std::vector<LinearOperator>& ops_;
  double q_;
  int max_subset_;
  const SparseMatrix* mass_ = nullptr;
  std::function<ComplexVector(const ComplexVector&)> mass_solve_;
};

// Mass matrix and its factorization for a bare space, built on demand.
struct MassData {
  SparseMatrix mass;
  CholeskySolver solver;

  explicit MassData(const FESpace& space) {
    const auto n = static_cast<Eigen::Index>(space.num_dofs());
    SparseMatrix R(n, static_cast<Eigen::Index>(space.num_nodes()));
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t d = 0; d < space.num_dofs(); ++d)
      trips.emplace_back(static_cast<int>(d), space.node_of_dof(d), 1.0);
    R.setFromTriplets(trips.begin(), trips.end());
    mass = R * assemble_mass_all_nodes(space) * R.transpose();
    solver.compute(mass);
    if (solver.info() != Eigen::Success) throw SolverError("mass matrix factorization failed");
  }
};

RBoundResult run_family(const FESpace& space, const std::vector<LinearOperator>& ops, double q, int trials,
                        int ascent, int krylov_dim, std::uint64_t seed, int max_subset,
                        const std::vector<Batch>* batches) {
  if (ops.empty()) throw std::invalid_argument("operator family is empty");
  if (!(q > 1.0) || std::isinf(q)) throw std::invalid_argument(fmt::format("square-function path needs 1 < q < inf, got {}", q));
  const auto n = static_cast<Eigen::Index>(space.num_dofs());
  FamilyEngine engine(space, ops, q, max_subset);
  std::unique_ptr<MassData> mass;
  if (ascent > 0) {
    mass = std::make_unique<MassData>(space);
    const MassData* md = mass.get();
    engine.set_mass(&md->mass, [md](const ComplexVector& b) { return ComplexVector(md->solver.solve(b)); });
  }
  const int count = batches ? static_cast<int>(batches->size()) : trials;
  RBoundResult result;
  for (int t = 0; t < count; ++t) {
    Batch batch;
    if (batches) {
      batch = (*batches)[static_cast<std::size_t>(t)];
      if (batch.size() != ops.size()) throw std::invalid_argument("batch size must match the number of operators");
      for (const auto& v : batch)
        if (v.size() != n) throw std::invalid_argument("batch vector does not match the space");
    } else {
      for (std::size_t j = 0; j < ops.size(); ++j)
        batch.push_back(seeded_complex_vector(n, seed, static_cast<std::uint64_t>(t), j));
    }
    auto consider = [&](const Batch& b) {
      const auto c = engine.evaluate(b);
      if (c.ratio > result.estimate) {
        result.estimate = c.ratio;
        result.best_trial = t;
        result.best_subset = c.subset;
      }
    };
    consider(batch);
    if (ascent > 0) consider(q == 2.0 ? engine.ascend_lanczos(batch, krylov_dim) : engine.ascend_power(batch, ascent));
  }
  return result;
}

// Dense matrix of an operator, column j the image of the j-th interior basis vector.
Eigen::MatrixXcd explicit_matrix(const FESpace& space, const LinearOperator& op, std::size_t max_dofs) {
  const auto n = static_cast<Eigen::Index>(space.num_dofs());
  if (space.num_dofs() > max_dofs)
    throw std::invalid_argument(
        fmt::format("q in {{1, inf}} needs the explicit operator, limited to {} dofs (space has {})", max_dofs, n));
  Eigen::MatrixXcd T(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    ComplexVector e = ComplexVector::Zero(n);
    e[j] = 1.0;
    T.col(j) = op.apply(e);
  }
  return T;
}

double ratio_nodal(const FESpace& space, const ComplexVector& image, const ComplexVector& v, double q) {
  const double den = lq_norm_nodal(space, ComplexVector(space.to_nodal(v)), q);
  if (den == 0.0) return 0.0;
  return lq_norm_nodal(space, ComplexVector(space.to_nodal(image)), q) / den;
}

}  // namespace

double operator_norm_q(const FESpace& space, const LinearOperator& op, double q, const NormEstimateOptions& options) {
  if (!(q >= 1.0)) throw std::invalid_argument(fmt::format("exponent must lie in [1, inf], got {}", q));
  if (space.num_dofs() == 0) return 0.0;
  if (q == 1.0 || std::isinf(q)) {
    const Eigen::MatrixXcd T = explicit_matrix(space, op, options.explicit_max_dofs);
    const Eigen::Index n = T.rows();
    double best = 0.0;
    if (std::isinf(q)) {
      // Rows with the largest absolute sums, tested with their sign vectors.
      std::vector<std::pair<double, Eigen::Index>> rows;
      for (Eigen::Index i = 0; i < n; ++i) rows.emplace_back(T.row(i).cwiseAbs().sum(), i);
      std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      const auto tries = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(std::max(options.restarts, 1)));
      for (std::size_t r = 0; r < tries; ++r) {
        const Eigen::Index i = rows[r].second;
        ComplexVector v(n);
        for (Eigen::Index j = 0; j < n; ++j) {
          const double a = std::abs(T(i, j));
          v[j] = a > 0.0 ? std::conj(T(i, j)) / a : Complex(1.0);
        }
        best = std::max(best, ratio_nodal(space, ComplexVector(T * v), v, q));
      }
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        ComplexVector e = ComplexVector::Zero(n);
        e[j] = 1.0;
        best = std::max(best, ratio_nodal(space, ComplexVector(T.col(j)), e, q));
      }
    }
    return best;
  }
  const std::vector<LinearOperator> ops{op};
  return run_family(space, ops, q, options.restarts, options.iterations, options.krylov_dim, options.seed, 1, nullptr)
      .estimate;
}

RBoundResult rbound_sample(const FESpace& space, const std::vector<LinearOperator>& ops, double q,
                           const RBoundOptions& options, const std::vector<Batch>* batches) {
  if (options.max_subset_points < 1 || options.max_subset_points > 20)
    throw std::invalid_argument("max_subset_points must lie in [1, 20]");
  return run_family(space, ops, q, options.trials, options.ascent_iterations, options.krylov_dim, options.seed,
                    options.max_subset_points, batches);
}

double resolvent_norm_q2(const RealVector& lambdas, Complex z) {
  double best = 0.0;
  for (double l : lambdas) best = std::max(best, std::abs(z) / std::abs(z + l));
  return best;
}

double q2_sector_bound(Complex z) {
  const double arg = std::abs(std::arg(z));
  if (arg <= kPi / 2) return 1.0;
  return 1.0 / std::sin(kPi - arg);
}

std::vector<SweepRow> sector_sweep(std::shared_ptr<const AssembledPair> pair, double q, const SectorSample& sample,
                                   const NormEstimateOptions& options) {
  check_sector_angle(sample.theta);
  std::vector<SweepRow> rows;
  rows.reserve(sample.points.size());
  for (Complex z : sample.points) {
    const Resolvent r(pair, z);
    rows.push_back({z, operator_norm_q(pair->space(), r.as_operator(), q, options), q2_sector_bound(z)});
  }
  return rows;
}

}  // namespace mrlab
