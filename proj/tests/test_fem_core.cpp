#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "mrlab/assembly.hpp"

using namespace mrlab;

namespace {

std::shared_ptr<const FESpace> square_space(int n, int degree = 1, int refinements = 0) {
  return std::make_shared<FESpace>(std::make_shared<Mesh>(build_mesh(DomainTag::square, n, refinements)), degree);
}

double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

// Brute-force point location; returns value and gradient of a nodal vector at x.
std::pair<double, Eigen::Vector2d> evaluate(const FESpace& space, const RealVector& nodal, const Eigen::Vector2d& x) {
  const int nloc = space.nodes_per_element();
  Eigen::VectorXd values(nloc);
  Eigen::MatrixXd derivs(nloc, 3);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const auto& g = space.geometry(t);
    const Eigen::Vector3d b = g.barycentric(x);
    if (b.minCoeff() < -1e-12) continue;
    space.basis().values(b, values);
    space.basis().bary_derivatives(b, derivs);
    const Eigen::MatrixXd grads = derivs * g.bary_gradients;
    double v = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    const auto nodes = space.element_nodes(t);
    for (int i = 0; i < nloc; ++i) {
      v += nodal[nodes[i]] * values[i];
      grad += nodal[nodes[i]] * grads.row(i).transpose();
    }
    return {v, grad};
  }
  throw std::runtime_error("point outside mesh");
}

RealVector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RealVector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("triangle quadrature integrates monomials exactly") {
  for (int degree = 0; degree <= 12; ++degree) {
    const QuadratureRule rule = triangle_rule(degree);
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          sum += rule.weights[q] * std::pow(rule.points[q].x(), a) * std::pow(rule.points[q].y(), b);
        const double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
        CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("Lagrange basis: nodality and partition of unity") {
  for (int r = 1; r <= 4; ++r) {
    const LagrangeBasis basis(r);
    CHECK(basis.size() == (r + 1) * (r + 2) / 2);
    Eigen::VectorXd v(basis.size());
    Eigen::MatrixXd d(basis.size(), 3);
    for (int i = 0; i < basis.size(); ++i) {
      const auto& a = basis.lattice()[i];
      basis.values(Eigen::Vector3d(a[0], a[1], a[2]) / r, v);
      for (int j = 0; j < basis.size(); ++j) CHECK(v[j] == doctest::Approx(i == j ? 1.0 : 0.0));
    }
    const Eigen::Vector3d b(0.2, 0.3, 0.5);
    basis.values(b, v);
    CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-14));
    // Sum of gradients of a partition of unity vanishes along the simplex.
    basis.bary_derivatives(b, d);
    const Eigen::Vector3d col = d.colwise().sum().transpose();
    CHECK(col[1] - col[0] == doctest::Approx(0.0));
    CHECK(col[2] - col[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("FE space dof counts") {
  for (int r = 1; r <= 3; ++r) {
    const auto s = square_space(4, r);
    std::size_t boundary = 0;
    for (std::size_t i = 0; i < s->num_nodes(); ++i) boundary += s->node_on_boundary(i);
    CHECK(s->num_dofs() == s->num_nodes() - boundary);
    CHECK(s->num_dofs() == static_cast<std::size_t>((4 * r - 1) * (4 * r - 1)));
  }
}

TEST_CASE("P1 Laplacian equals the 5-point stencil") {
  const auto pair2 = assemble(square_space(2), identity_coefficients());
  REQUIRE(pair2.num_dofs() == 1);
  CHECK(pair2.stiffness().coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-14));

  // Interior grid vertices of the n = 5 mesh in lexicographic order.
  const int n = 5;
  const auto pair = assemble(square_space(n), identity_coefficients());
  const int m = n - 1;
  Eigen::MatrixXd stencil = Eigen::MatrixXd::Zero(m * m, m * m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int row = i + j * m;
      stencil(row, row) = 4.0;
      if (i > 0) stencil(row, row - 1) = -1.0;
      if (i < m - 1) stencil(row, row + 1) = -1.0;
      if (j > 0) stencil(row, row - m) = -1.0;
      if (j < m - 1) stencil(row, row + m) = -1.0;
    }
  }
  CHECK((Eigen::MatrixXd(pair.stiffness()) - stencil).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("mass matrix over all nodes sums to the domain area") {
  for (int r = 1; r <= 3; ++r) {
    const auto s = square_space(3, r);
    CHECK(Eigen::MatrixXd(assemble_mass_all_nodes(*s)).sum() == doctest::Approx(1.0).epsilon(1e-13));
  }
  const auto l = std::make_shared<FESpace>(std::make_shared<Mesh>(generate_lshape_mesh(4)), 2);
  CHECK(Eigen::MatrixXd(assemble_mass_all_nodes(*l)).sum() == doctest::Approx(0.75).epsilon(1e-13));
}

TEST_CASE("assembly symmetry, definiteness and coercivity") {
  for (const auto& coeff : {identity_coefficients(), smooth_anisotropic_coefficients(), holder_rough_coefficients()}) {
    for (int r = 1; r <= 2; ++r) {
      const auto space = square_space(4, r);
      const auto pair = assemble(space, coeff);
      for (const SparseMatrix* a : {&pair.mass(), &pair.stiffness()}) {
        const SparseMatrix at = a->transpose();
        CHECK(max_abs(*a - at) <= 1e-13 * max_abs(*a));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(*a)};
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
      }
      // K U.U >= lambda^-1 int |grad u|^2 with the identity stiffness as the gradient form.
      const auto lap = assemble(space, identity_coefficients());
      for (unsigned seed = 1; seed <= 5; ++seed) {
        const RealVector u = random_vector(static_cast<Eigen::Index>(pair.num_dofs()), seed);
        CHECK(u.dot(pair.stiffness() * u) >= u.dot(lap.stiffness() * u) / coeff.lambda);
      }
    }
  }
}

TEST_CASE("coefficient scaling is linear") {
  const auto space = square_space(4, 2);
  const auto base = assemble(space, smooth_anisotropic_coefficients());
  const auto scaled = assemble(space, smooth_anisotropic_coefficients().scaled(2.5));
  CHECK(max_abs(scaled.stiffness() - 2.5 * base.stiffness()) <= 1e-14 * max_abs(scaled.stiffness()));
  CHECK(max_abs(scaled.mass() - base.mass()) == 0.0);
}

TEST_CASE("raising the quadrature order leaves smooth-field matrices unchanged") {
  // The change is O(h^6) for the default rule; it drops below 1e-10 by h = 1/64.
  std::vector<double> changes;
  for (int level = 0; level <= 4; ++level) {
    const auto mesh = std::make_shared<Mesh>(build_mesh(DomainTag::square, 4, level));
    const auto coarse_rule = std::make_shared<FESpace>(mesh, 1);
    const auto fine_rule = std::make_shared<FESpace>(mesh, 1, 6);
    const auto a = assemble(coarse_rule, smooth_anisotropic_coefficients());
    const auto b = assemble(fine_rule, smooth_anisotropic_coefficients());
    changes.push_back(max_abs(a.stiffness() - b.stiffness()) / max_abs(a.stiffness()));
    CHECK(max_abs(a.mass() - b.mass()) < 1e-14 * max_abs(a.mass()));
    const auto ia = assemble(coarse_rule, identity_coefficients());
    const auto ib = assemble(fine_rule, identity_coefficients());
    CHECK(max_abs(ia.stiffness() - ib.stiffness()) < 1e-13 * max_abs(ia.stiffness()));
  }
  CHECK(changes.back() < 1e-10);
  for (std::size_t i = 1; i < changes.size(); ++i) CHECK(changes[i] < changes[i - 1] / 16.0);

  const auto mesh = std::make_shared<Mesh>(build_mesh(DomainTag::square, 4, 3));
  const auto p2 = assemble(std::make_shared<FESpace>(mesh, 2), smooth_anisotropic_coefficients());
  const auto p2_fine = assemble(std::make_shared<FESpace>(mesh, 2, 8), smooth_anisotropic_coefficients());
  CHECK(max_abs(p2.stiffness() - p2_fine.stiffness()) < 1e-10 * max_abs(p2.stiffness()));
}

TEST_CASE("ellipticity check") {
  const Mesh mesh = generate_square_mesh(3);
  const auto rule = triangle_rule(4);
  auto r = check_ellipticity(identity_coefficients(), mesh, rule);
  CHECK(r.ok);
  CHECK(r.worst_ratio == 1.0);

  Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  CHECK(check_ellipticity(constant_coefficients(d, 2.0, "diag"), mesh, rule).ok);
  r = check_ellipticity(constant_coefficients(d, 1.5, "diag"), mesh, rule);
  CHECK_FALSE(r.ok);
  CHECK(r.worst_ratio == doctest::Approx(2.0));

  CHECK(check_ellipticity(smooth_anisotropic_coefficients(), mesh, rule).ok);
  CHECK(check_ellipticity(holder_rough_coefficients(), mesh, rule).ok);

  try {
    assemble(square_space(3), constant_coefficients(d, 1.5, "diag"));
    FAIL("assembly accepted a violating field");
  } catch (const AssemblyError& e) {
    CHECK(std::string(e.what()).find("at (") != std::string::npos);
  }
}

TEST_CASE("L2 projection") {
  for (int r = 1; r <= 2; ++r) {
    const auto space = square_space(4, r);
    const auto pair = assemble(space, smooth_anisotropic_coefficients());

    const RealVector u = random_vector(static_cast<Eigen::Index>(pair.num_dofs()), 7);
    const RealVector nodal = space->to_nodal(u);
    const auto p = l2_project(pair, [&](const Eigen::Vector2d& x) { return evaluate(*space, nodal, x).first; });
    CHECK((p.coeffs - u).cwiseAbs().maxCoeff() < 1e-12);

    const auto zero = l2_project(pair, [](const Eigen::Vector2d&) { return 0.0; });
    CHECK(zero.coeffs.cwiseAbs().maxCoeff() == 0.0);

    // <f - P_h f, phi_i> by quadrature.
    const auto f = [](const Eigen::Vector2d& x) { return std::exp(x.x()) * std::sin(3.0 * x.y()); };
    const auto pf = l2_project(pair, f);
    RealVector residual_at_qp(static_cast<Eigen::Index>(space->num_quadrature_points()));
    const RealVector pf_qp = space->value_matrix() * pf.nodal();
    for (Eigen::Index q = 0; q < residual_at_qp.size(); ++q)
      residual_at_qp[q] = (f(space->quadrature_points()[q]) - pf_qp[q]) * space->quadrature_weights()[q];
    const RealVector moments = space->to_interior(RealVector(space->value_matrix().transpose() * residual_at_qp));
    CHECK(moments.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("Ritz projection") {
  for (int r = 1; r <= 2; ++r) {
    const auto space = square_space(4, r);
    const auto pair = assemble(space, smooth_anisotropic_coefficients());

    const RealVector u = random_vector(static_cast<Eigen::Index>(pair.num_dofs()), 11);
    const RealVector nodal = space->to_nodal(u);
    const SmoothFunction fe{[&](const Eigen::Vector2d& x) { return evaluate(*space, nodal, x).first; },
                            [&](const Eigen::Vector2d& x) { return evaluate(*space, nodal, x).second; }};
    CHECK((ritz_project(pair, fe).coeffs - u).cwiseAbs().maxCoeff() < 1e-12);

    // Galerkin orthogonality, integrated on the quadrature points.
    const SmoothFunction w{[](const Eigen::Vector2d& x) { return std::sin(x.x() + 2 * x.y()); },
                           [](const Eigen::Vector2d& x) {
                             return Eigen::Vector2d(std::cos(x.x() + 2 * x.y()), 2 * std::cos(x.x() + 2 * x.y()));
                           }};
    const auto rw = ritz_project(pair, w);
    const RealVector gx = space->dx_matrix() * rw.nodal();
    const RealVector gy = space->dy_matrix() * rw.nodal();
    RealVector fx(gx.size()), fy(gy.size());
    for (Eigen::Index q = 0; q < gx.size(); ++q) {
      const auto& x = space->quadrature_points()[q];
      const Eigen::Vector2d diff = w.gradient(x) - Eigen::Vector2d(gx[q], gy[q]);
      const Eigen::Vector2d flux = pair.coefficients()(x) * diff * space->quadrature_weights()[q];
      fx[q] = flux.x();
      fy[q] = flux.y();
    }
    const RealVector res = space->to_interior(
        RealVector(space->dx_matrix().transpose() * fx + space->dy_matrix().transpose() * fy));
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("Ritz projection converges at first order in the energy seminorm for P1") {
  const SmoothFunction u{
      [](const Eigen::Vector2d& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); },
      [](const Eigen::Vector2d& x) {
        return Eigen::Vector2d((1 - 2 * x.x()) * x.y() * (1 - x.y()), x.x() * (1 - x.x()) * (1 - 2 * x.y()));
      }};
  std::vector<double> errors, hs;
  for (int level = 0; level < 4; ++level) {
    const auto space = square_space(4, 1, level);
    const auto pair = assemble(space, identity_coefficients());
    const RealVector nodal = ritz_project(pair, u).nodal();
    const RealVector gx = space->dx_matrix() * nodal;
    const RealVector gy = space->dy_matrix() * nodal;
    double e2 = 0.0;
    for (Eigen::Index q = 0; q < gx.size(); ++q)
      e2 += space->quadrature_weights()[q] *
            (u.gradient(space->quadrature_points()[q]) - Eigen::Vector2d(gx[q], gy[q])).squaredNorm();
    errors.push_back(std::sqrt(e2));
    hs.push_back(mesh_size(space->mesh()));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]);
    CHECK(order == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("apply_Ah") {
  for (int n : {2, 4}) {
    const auto space = square_space(n);
    const auto pair = assemble(space, identity_coefficients());
    const auto ndof = static_cast<Eigen::Index>(pair.num_dofs());

    const FEFunction zero{space, RealVector::Zero(ndof), Layout::interior};
    CHECK(apply_Ah(pair, zero).coeffs.cwiseAbs().maxCoeff() == 0.0);

    const FEFunction u{space, random_vector(ndof, 3), Layout::interior};
    const RealVector v = apply_Ah(pair, u).coeffs;
    const Eigen::MatrixXd dense = -Eigen::MatrixXd(pair.mass()).inverse() * Eigen::MatrixXd(pair.stiffness());
    CHECK((v - dense * u.coeffs).cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff());
    CHECK(v.dot(pair.mass() * u.coeffs) < 0.0);
  }
}

TEST_CASE("nested transfer reproduces coarse functions") {
  const auto coarse_mesh = std::make_shared<Mesh>(generate_lshape_mesh(4));
  const auto mid = refine_uniform(*coarse_mesh);
  const auto fine_mesh = std::make_shared<Mesh>(refine_uniform(mid));
  const auto map = ancestor_map({coarse_mesh.get(), &mid, fine_mesh.get()});
  for (std::size_t t = 0; t < map.size(); ++t) CHECK(map[t] == static_cast<int>(t / 16));

  for (int r = 1; r <= 2; ++r) {
    const auto cs = std::make_shared<FESpace>(coarse_mesh, r);
    const auto fs = std::make_shared<FESpace>(fine_mesh, r);
    const RealVector u = random_vector(static_cast<Eigen::Index>(cs->num_dofs()), 5);
    const RealVector nodal = cs->to_nodal(u);
    const RealVector fine = fs->to_interior(
        fs->interpolate([&](const Eigen::Vector2d& x) { return evaluate(*cs, nodal, x).first; }));

    // Exact for constant coefficients; otherwise the fine quadrature differs from the coarse one.
    const auto lap = std::make_shared<const AssembledPair>(assemble(cs, identity_coefficients()));
    const NestedTransfer exact(lap, fs, map);
    CHECK((exact.l2(fine) - u).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((exact.ritz(fine) - u).cwiseAbs().maxCoeff() < 1e-11);

    const auto aniso = std::make_shared<const AssembledPair>(assemble(cs, smooth_anisotropic_coefficients()));
    const NestedTransfer transfer(aniso, fs, map);
    CHECK((transfer.l2(fine) - u).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((transfer.ritz(fine) - u).cwiseAbs().maxCoeff() < 1e-5 * u.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("nested L2 transfer of a fine interpolant approaches the direct projection") {
  const auto f = [](const Eigen::Vector2d& x) {
    return std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
  };
  const auto coarse_mesh = std::make_shared<Mesh>(generate_square_mesh(4));
  const auto pair = std::make_shared<const AssembledPair>(
      assemble(std::make_shared<FESpace>(coarse_mesh, 1), identity_coefficients()));
  const RealVector direct = l2_project(*pair, f).coeffs;
  std::vector<const Mesh*> chain{coarse_mesh.get()};
  std::vector<std::shared_ptr<Mesh>> owned;
  double previous = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= 3; ++level) {
    owned.push_back(std::make_shared<Mesh>(refine_uniform(*chain.back())));
    chain.push_back(owned.back().get());
    const auto fs = std::make_shared<FESpace>(owned.back(), 1);
    const NestedTransfer transfer(pair, fs, ancestor_map(chain));
    const double gap = (transfer.l2(fs->to_interior(fs->interpolate(f))) - direct).cwiseAbs().maxCoeff();
    // Interpolation error in the fine space shrinks at second order.
    CHECK(gap < previous / 3.5);
    previous = gap;
  }
}
