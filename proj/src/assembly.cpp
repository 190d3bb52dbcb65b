#include "mrlab/assembly.hpp"

#include <ostream>

#include <fmt/format.h>

namespace mrlab {

namespace {

// Selection matrix from all Lagrange nodes to interior dofs.
SparseMatrix restriction(const FESpace& space) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(space.num_dofs());
  for (std::size_t d = 0; d < space.num_dofs(); ++d)
    t.emplace_back(static_cast<int>(d), space.node_of_dof(d), 1.0);
  SparseMatrix r(static_cast<Eigen::Index>(space.num_dofs()), static_cast<Eigen::Index>(space.num_nodes()));
  r.setFromTriplets(t.begin(), t.end());
  return r;
}

struct CoefficientSamples {
  RealVector a11, a12, a22;
};

// w_q a_kl(x_q) at the given points.
CoefficientSamples weighted_coefficients(const CoefficientField& coeff, const std::vector<Eigen::Vector2d>& points,
                                         const RealVector& weights) {
  const auto n = static_cast<Eigen::Index>(points.size());
  CoefficientSamples s{RealVector(n), RealVector(n), RealVector(n)};
  for (Eigen::Index q = 0; q < n; ++q) {
    const Eigen::Matrix2d a = coeff(points[static_cast<std::size_t>(q)]);
    s.a11[q] = weights[q] * a(0, 0);
    s.a12[q] = weights[q] * 0.5 * (a(0, 1) + a(1, 0));
    s.a22[q] = weights[q] * a(1, 1);
  }
  return s;
}

SparseMatrix energy_product(const SparseMatrix& test_dx, const SparseMatrix& test_dy, const SparseMatrix& trial_dx,
                            const SparseMatrix& trial_dy, const CoefficientSamples& s) {
  const SparseMatrix tx = test_dx.transpose();
  const SparseMatrix ty = test_dy.transpose();
  SparseMatrix k = tx * s.a11.asDiagonal() * trial_dx;
  k += SparseMatrix(tx * s.a12.asDiagonal() * trial_dy);
  k += SparseMatrix(ty * s.a12.asDiagonal() * trial_dx);
  k += SparseMatrix(ty * s.a22.asDiagonal() * trial_dy);
  return k;
}

std::shared_ptr<const CholeskySolver> factorize(const SparseMatrix& a, const char* what) {
  auto solver = std::make_shared<CholeskySolver>(a);
  if (solver->info() != Eigen::Success) throw SolverError(fmt::format("{} factorization failed", what));
  return solver;
}

template <class Scalar>
Vector<Scalar> solve_with(const CholeskySolver& solver, const Vector<Scalar>& rhs) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return solver.solve(rhs);
  } else {
    ComplexVector out(rhs.size());
    out.real() = solver.solve(RealVector(rhs.real()));
    out.imag() = solver.solve(RealVector(rhs.imag()));
    return out;
  }
}

void check_size(const AssembledPair& pair, Eigen::Index n) {
  if (n != static_cast<Eigen::Index>(pair.num_dofs()))
    throw std::invalid_argument(fmt::format("vector of size {} does not match {} dofs", n, pair.num_dofs()));
}

}  // namespace

AssembledPair::AssembledPair(std::shared_ptr<const FESpace> space, CoefficientField coeff, SparseMatrix mass,
                             SparseMatrix stiffness)
    : space_(std::move(space)),
      coeff_(std::move(coeff)),
      mass_(std::move(mass)),
      stiffness_(std::move(stiffness)),
      mass_solver_(factorize(mass_, "mass matrix")),
      stiffness_solver_(factorize(stiffness_, "stiffness matrix")) {}

RealVector AssembledPair::solve_mass(const RealVector& rhs) const {
  check_size(*this, rhs.size());
  return solve_with(*mass_solver_, rhs);
}
ComplexVector AssembledPair::solve_mass(const ComplexVector& rhs) const {
  check_size(*this, rhs.size());
  return solve_with(*mass_solver_, rhs);
}
RealVector AssembledPair::solve_stiffness(const RealVector& rhs) const {
  check_size(*this, rhs.size());
  return solve_with(*stiffness_solver_, rhs);
}
ComplexVector AssembledPair::solve_stiffness(const ComplexVector& rhs) const {
  check_size(*this, rhs.size());
  return solve_with(*stiffness_solver_, rhs);
}

AssembledPair assemble(std::shared_ptr<const FESpace> space, CoefficientField coeff) {
  if (!space) throw std::invalid_argument("assemble needs a space");
  if (space->num_dofs() == 0) throw AssemblyError("space has no interior degrees of freedom");
  const auto report = check_ellipticity_at(coeff, space->quadrature_points());
  if (!report.ok) {
    throw AssemblyError(fmt::format("coefficient '{}' violates ellipticity with lambda = {} at ({:.6g}, {:.6g}): "
                                    "ratio {:.6g}, asymmetry {:.3g}",
                                    coeff.descriptor, coeff.lambda, report.worst_point.x(), report.worst_point.y(),
                                    report.worst_ratio, report.asymmetry));
  }

  const SparseMatrix r = restriction(*space);
  const RealVector& w = space->quadrature_weights();
  const SparseMatrix& e = space->value_matrix();
  const SparseMatrix et = e.transpose();
  const SparseMatrix mass_all = et * w.asDiagonal() * e;
  const auto s = weighted_coefficients(coeff, space->quadrature_points(), w);
  const SparseMatrix stiff_all = energy_product(space->dx_matrix(), space->dy_matrix(), space->dx_matrix(),
                                                space->dy_matrix(), s);

  SparseMatrix mass = r * mass_all * r.transpose();
  SparseMatrix stiffness = r * stiff_all * r.transpose();
  mass.makeCompressed();
  stiffness.makeCompressed();
  return AssembledPair(std::move(space), std::move(coeff), std::move(mass), std::move(stiffness));
}

SparseMatrix assemble_mass_all_nodes(const FESpace& space) {
  const SparseMatrix& e = space.value_matrix();
  const SparseMatrix et = e.transpose();
  return et * space.quadrature_weights().asDiagonal() * e;
}

RealVector load_vector(const FESpace& space, const ScalarFunction& f) {
  const auto& pts = space.quadrature_points();
  RealVector g(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t q = 0; q < pts.size(); ++q)
    g[static_cast<Eigen::Index>(q)] = f(pts[q]) * space.quadrature_weights()[static_cast<Eigen::Index>(q)];
  const RealVector all = space.value_matrix().transpose() * g;
  return space.to_interior(all);
}

FEFunction l2_project(const AssembledPair& pair, const ScalarFunction& f) {
  return {pair.space_ptr(), pair.solve_mass(load_vector(pair.space(), f)), Layout::interior};
}

FEFunction ritz_project(const AssembledPair& pair, const SmoothFunction& u) {
  const FESpace& space = pair.space();
  const auto& pts = space.quadrature_points();
  const auto n = static_cast<Eigen::Index>(pts.size());
  RealVector fx(n), fy(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    const Eigen::Vector2d& x = pts[static_cast<std::size_t>(q)];
    const Eigen::Vector2d flux = pair.coefficients()(x) * u.gradient(x);
    fx[q] = flux.x() * space.quadrature_weights()[q];
    fy[q] = flux.y() * space.quadrature_weights()[q];
  }
  const RealVector all = space.dx_matrix().transpose() * fx + space.dy_matrix().transpose() * fy;
  return {pair.space_ptr(), pair.solve_stiffness(space.to_interior(all)), Layout::interior};
}

FEFunction apply_Ah(const AssembledPair& pair, const FEFunction& u) {
  if (u.layout != Layout::interior) throw std::invalid_argument("apply_Ah expects an interior-dof function");
  check_size(pair, u.coeffs.size());
  return {pair.space_ptr(), -pair.solve_mass(RealVector(pair.stiffness() * u.coeffs)), Layout::interior};
}

NestedTransfer::NestedTransfer(std::shared_ptr<const AssembledPair> coarse, std::shared_ptr<const FESpace> fine,
                               const std::vector<int>& coarse_element)
    : coarse_(std::move(coarse)) {
  const FESpace& cs = coarse_->space();
  const FESpace& fs = *fine;
  if (coarse_element.size() != fs.num_elements())
    throw std::invalid_argument("coarse element map does not match the fine mesh");

  // Coarse basis tabulated at the fine quadrature points.
  const int nloc = cs.nodes_per_element();
  const auto nqp = fs.num_quadrature_points();
  std::vector<Eigen::Triplet<double>> tv, tx, ty;
  tv.reserve(nqp * nloc);
  tx.reserve(nqp * nloc);
  ty.reserve(nqp * nloc);
  Eigen::VectorXd values(nloc);
  Eigen::MatrixXd derivs(nloc, 3);
  for (std::size_t q = 0; q < nqp; ++q) {
    const auto c = static_cast<std::size_t>(coarse_element[fs.element_of_quadrature_point(q)]);
    const ElementGeometry& g = cs.geometry(c);
    const Eigen::Vector3d bary = g.barycentric(fs.quadrature_points()[q]);
    cs.basis().values(bary, values);
    cs.basis().bary_derivatives(bary, derivs);
    const Eigen::MatrixXd grads = derivs * g.bary_gradients;
    const auto nodes = cs.element_nodes(c);
    for (int i = 0; i < nloc; ++i) {
      tv.emplace_back(static_cast<int>(q), nodes[i], values[i]);
      tx.emplace_back(static_cast<int>(q), nodes[i], grads(i, 0));
      ty.emplace_back(static_cast<int>(q), nodes[i], grads(i, 1));
    }
  }
  const auto rows = static_cast<Eigen::Index>(nqp);
  const auto cols = static_cast<Eigen::Index>(cs.num_nodes());
  SparseMatrix ev(rows, cols), ex(rows, cols), ey(rows, cols);
  ev.setFromTriplets(tv.begin(), tv.end());
  ex.setFromTriplets(tx.begin(), tx.end());
  ey.setFromTriplets(ty.begin(), ty.end());

  const SparseMatrix rc = restriction(cs);
  const SparseMatrix rf_t = SparseMatrix(restriction(fs).transpose());
  const RealVector& w = fs.quadrature_weights();
  const SparseMatrix evt = ev.transpose();
  mixed_mass_ = rc * SparseMatrix(evt * w.asDiagonal() * fs.value_matrix()) * rf_t;
  const auto s = weighted_coefficients(coarse_->coefficients(), fs.quadrature_points(), w);
  mixed_stiffness_ = rc * energy_product(ex, ey, fs.dx_matrix(), fs.dy_matrix(), s) * rf_t;
}

RealVector NestedTransfer::l2(const RealVector& fine_coeffs) const {
  return coarse_->solve_mass(RealVector(mixed_mass_ * fine_coeffs));
}

RealVector NestedTransfer::ritz(const RealVector& fine_coeffs) const {
  return coarse_->solve_stiffness(RealVector(mixed_stiffness_ * fine_coeffs));
}

std::vector<int> ancestor_map(const std::vector<const Mesh*>& chain) {
  if (chain.empty()) throw std::invalid_argument("ancestor_map needs at least one mesh");
  std::vector<int> map(chain.back()->num_triangles());
  for (std::size_t t = 0; t < map.size(); ++t) map[t] = static_cast<int>(t);
  for (std::size_t level = chain.size() - 1; level > 0; --level) {
    const Mesh& m = *chain[level];
    if (m.parent.size() != m.num_triangles())
      throw std::invalid_argument("mesh in refinement chain carries no parent map");
    for (int& t : map) t = m.parent[static_cast<std::size_t>(t)];
  }
  return map;
}

void write_triplets(const SparseMatrix& matrix, std::ostream& out) {
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      out << fmt::format("{} {} {:.17g}\n", it.row(), it.col(), it.value());
}

}  // namespace mrlab
