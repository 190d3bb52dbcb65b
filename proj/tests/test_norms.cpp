#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "mrlab/norms.hpp"

using namespace mrlab;

namespace {

std::shared_ptr<const FESpace> square_space(int n, int degree = 1) {
  return std::make_shared<FESpace>(std::make_shared<Mesh>(generate_square_mesh(n)), degree);
}

RealVector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RealVector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("constant function through the all-nodes path") {
  for (int r = 1; r <= 3; ++r) {
    const auto space = square_space(3, r);
    const FEFunction one{space, RealVector::Ones(static_cast<Eigen::Index>(space->num_nodes())), Layout::all_nodes};
    for (double q : {1.0, 2.0, 3.5, kInfinity}) CHECK(lq_norm(one, q) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gradient_lq_norm(*space, one.nodal(), 2.0) <= 1e-12);
    CHECK(w1q_norm(one, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("hat function on the two-triangle square") {
  // Vertex 0 = (0,0) belongs to both triangles; per triangle int lambda^q = 2A / ((q+1)(q+2)).
  const auto space = square_space(1);
  RealVector hat = RealVector::Zero(4);
  hat[0] = 1.0;
  const FEFunction u{space, hat, Layout::all_nodes};
  for (double q : {1.0, 2.0, 3.0, 4.0}) {
    const double exact = std::pow(2.0 / ((q + 1) * (q + 2)), 1.0 / q);
    CHECK(lq_norm(u, q) == doctest::Approx(exact).epsilon(1e-13));
  }
  CHECK(lq_norm(u, kInfinity) == 1.0);
  // grad = (-1, 0) on one triangle and (0, -1) on the other.
  CHECK(gradient_lq_norm(*space, hat, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("linear function gradient") {
  for (const Mesh& mesh : {generate_square_mesh(4), generate_lshape_mesh(4)}) {
    const auto space = std::make_shared<FESpace>(std::make_shared<Mesh>(mesh), 2);
    const FEFunction x{space, space->interpolate([](const Eigen::Vector2d& p) { return p.x(); }), Layout::all_nodes};
    const double area = mesh.total_area();
    for (double q : {1.0, 2.0, 4.0}) CHECK(gradient_lq_norm(*space, x.nodal(), q) == doctest::Approx(std::pow(area, 1.0 / q)));
    CHECK(gradient_lq_norm(*space, x.nodal(), kInfinity) == doctest::Approx(1.0));
    // int x^2 over the unit square is 1/3.
    if (mesh.domain == DomainTag::square) {
      CHECK(w1q_norm(x, 2.0) == doctest::Approx(std::sqrt(1.0 / 3.0 + 1.0)).epsilon(1e-13));
      CHECK(w1q_norm(x, kInfinity) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("homogeneity") {
  const auto space = square_space(5, 2);
  const auto pair = assemble(space, smooth_anisotropic_coefficients());
  const RealVector v = random_vector(static_cast<Eigen::Index>(space->num_dofs()), 4);
  const FEFunction u{space, v, Layout::interior};
  const FEFunction cu{space, -3.25 * v, Layout::interior};
  for (double q : {1.0, 1.5, 2.0, 4.0, kInfinity}) {
    CHECK(lq_norm(cu, q) == doctest::Approx(3.25 * lq_norm(u, q)).epsilon(1e-14));
    CHECK(w1q_norm(cu, q) == doctest::Approx(3.25 * w1q_norm(u, q)).epsilon(1e-14));
  }
  for (double q : {1.5, 2.0, 4.0}) CHECK(neg_norm(pair, cu, q) == doctest::Approx(3.25 * neg_norm(pair, u, q)).epsilon(1e-12));
  const FEFunction zero{space, RealVector::Zero(v.size()), Layout::interior};
  CHECK(neg_norm(pair, zero, 2.0) == 0.0);
  CHECK_THROWS_AS(neg_norm(pair, u, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(neg_norm(pair, u, kInfinity), std::invalid_argument);
}

TEST_CASE("L2 norm by quadrature agrees with the mass matrix") {
  for (int r = 1; r <= 2; ++r) {
    const auto space = square_space(6, r);
    const auto pair = assemble(space, identity_coefficients());
    for (unsigned seed = 1; seed <= 3; ++seed) {
      const RealVector v = random_vector(static_cast<Eigen::Index>(space->num_dofs()), seed);
      const double q = lq_norm(FEFunction{space, v, Layout::interior}, 2.0);
      CHECK(q * q == doctest::Approx(v.dot(pair.mass() * v)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Lq norms increase with q on the unit square") {
  for (int r = 1; r <= 2; ++r) {
    const auto space = square_space(5, r);
    for (unsigned seed = 10; seed < 15; ++seed) {
      const FEFunction u{space, random_vector(static_cast<Eigen::Index>(space->num_dofs()), seed), Layout::interior};
      double previous = 0.0;
      for (double q : {1.0, 1.5, 2.0, 3.0, 4.0, 8.0, kInfinity}) {
        const double v = lq_norm(u, q);
        CHECK(v >= previous * (1 - 1e-14));
        previous = v;
      }
    }
  }
}

TEST_CASE("negative norm on eigenvectors") {
  const auto space = square_space(6);
  const auto pair = assemble(space, identity_coefficients());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(pair.stiffness()),
                                                                Eigen::MatrixXd(pair.mass()));
  for (int i : {0, 3}) {
    const double lambda = eig.eigenvalues()[i];
    const RealVector phi = eig.eigenvectors().col(i);
    const FEFunction f{space, phi, Layout::interior};
    const double w = gradient_lq_norm(*space, f.nodal(), 2.0) + lq_norm(f, 2.0);
    CHECK(std::abs(neg_norm(pair, f, 2.0) - w / lambda) <= 1e-10 * w / lambda);

    const FEFunction ahf{space, -lambda * phi, Layout::interior};
    CHECK(std::abs(neg_norm(pair, ahf, 2.0) - w) <= 1e-10 * w);
    const auto ah = apply_Ah(pair, f);
    CHECK(std::abs(neg_norm(pair, ah, 2.0) - w) <= 1e-10 * w);
  }
}

TEST_CASE("lp time norms") {
  CHECK(lp_time_norm(std::vector<double>(8, 1.0), 1.0, 0.125) == doctest::Approx(1.0));
  CHECK(lp_time_norm({1.0, 5.0, 2.0}, kInfinity, 0.3) == 5.0);
  CHECK(lp_time_norm({1.0, 2.0, 2.0}, 2.0, 0.5) == doctest::Approx(std::sqrt(0.5 * 9.0)).epsilon(1e-15));
  CHECK(lp_time_norm({}, 2.0, 0.5) == 0.0);
  CHECK(lp_time_norm({0.0, 0.0}, 4.0, 0.5) == 0.0);
  CHECK(lp_time_norm({3.0, 4.0}, 2.0, 1.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(lp_time_norm({1.0}, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("norm spec validation and exponent parsing") {
  CHECK_NOTHROW((NormSpec{2.0, kInfinity, SpatialKind::Lq}.validate()));
  CHECK_THROWS_AS((NormSpec{2.0, 2.0 / 3.0, SpatialKind::Lq}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((NormSpec{2.0, kInfinity, SpatialKind::Wm1q}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((NormSpec{2.0, 1.0, SpatialKind::Wm1q}.validate()), std::invalid_argument);
  CHECK(std::isinf(parse_exponent("inf")));
  CHECK(parse_exponent("4") == 4.0);
  CHECK_THROWS_AS(parse_exponent("0.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_exponent("2x"), std::invalid_argument);
  CHECK(format_exponent(kInfinity) == "inf");
  CHECK(format_exponent(2.0) == "2");
}

TEST_CASE("square function") {
  const auto space = square_space(4, 2);
  const auto n = static_cast<Eigen::Index>(space->num_nodes());
  const RealVector a = space->to_nodal(random_vector(static_cast<Eigen::Index>(space->num_dofs()), 1));
  const RealVector b = space->to_nodal(random_vector(static_cast<Eigen::Index>(space->num_dofs()), 2));
  for (double q : {1.5, 2.0, 4.0}) {
    CHECK(square_function_norm(*space, {a.cast<Complex>()}, q) == doctest::Approx(lq_norm_nodal(*space, a, q)).epsilon(1e-13));
    // Rotating a pair of real functions by a unitary 2x2 leaves the square function unchanged.
    const ComplexVector c1 = (a.cast<Complex>() + Complex(0, 1) * b.cast<Complex>()) / std::sqrt(2.0);
    const ComplexVector c2 = (a.cast<Complex>() - Complex(0, 1) * b.cast<Complex>()) / std::sqrt(2.0);
    CHECK(square_function_norm(*space, {c1, c2}, q) ==
          doctest::Approx(square_function_norm(*space, {a.cast<Complex>(), b.cast<Complex>()}, q)).epsilon(1e-13));
  }
  // q = 2: squared square-function norm is the sum of squared L2 norms.
  const double s = square_function_norm(*space, {a.cast<Complex>(), b.cast<Complex>()}, 2.0);
  CHECK(s * s == doctest::Approx(std::pow(lq_norm_nodal(*space, a, 2.0), 2) + std::pow(lq_norm_nodal(*space, b, 2.0), 2)));
  CHECK_THROWS_AS(square_function_norm(*space, {ComplexVector::Zero(n + 1)}, 2.0), std::invalid_argument);
}
