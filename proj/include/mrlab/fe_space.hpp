#pragma once

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mrlab/mesh.hpp"
#include "mrlab/quadrature.hpp"

namespace mrlab {

using Complex = std::complex<double>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RealVector = Vector<double>;
using ComplexVector = Vector<Complex>;
using SparseMatrix = Eigen::SparseMatrix<double>;

using ScalarFunction = std::function<double(const Eigen::Vector2d&)>;

/// Lagrange basis of degree r on the reference triangle, written in
/// barycentric coordinates.
///
/// Local order: the three vertex nodes, then r-1 nodes on each of the edges
/// (0,1), (1,2), (2,0) running from the first vertex to the second, then the
/// interior nodes.
class LagrangeBasis {
public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(lattice_.size()); }
  const std::vector<std::array<int, 3>>& lattice() const { return lattice_; }

  void values(const Eigen::Vector3d& bary, Eigen::Ref<Eigen::VectorXd> out) const;
  /// d phi_i / d lambda_a, one row per basis function.
  void bary_derivatives(const Eigen::Vector3d& bary, Eigen::Ref<Eigen::MatrixXd> out) const;

private:
  int degree_;
  std::vector<std::array<int, 3>> lattice_;
};

/// Affine geometry of one triangle.
struct ElementGeometry {
  Eigen::Vector2d origin;
  Eigen::Matrix2d jacobian;
  double area = 0.0;
  /// Row a holds grad lambda_a.
  Eigen::Matrix<double, 3, 2> bary_gradients;

  Eigen::Vector3d barycentric(const Eigen::Vector2d& x) const;
};

enum class Layout { interior, all_nodes };

/// Continuous Lagrange space of degree r over a triangulation with the
/// Dirichlet nodes eliminated.
///
/// Besides the dof map it carries the quadrature tabulation used everywhere
/// else: sparse evaluation matrices from nodal values (all Lagrange nodes) to
/// values and gradients at every quadrature point of the mesh.
class FESpace {
public:
  FESpace(std::shared_ptr<const Mesh> mesh, int degree, int quadrature_degree = -1);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  const LagrangeBasis& basis() const { return basis_; }
  const QuadratureRule& quadrature() const { return rule_; }

  std::size_t num_nodes() const { return node_coords_.size(); }
  std::size_t num_dofs() const { return dof_nodes_.size(); }
  std::size_t num_elements() const { return mesh_->num_triangles(); }
  int nodes_per_element() const { return basis_.size(); }

  const std::vector<Eigen::Vector2d>& node_coords() const { return node_coords_; }
  bool node_on_boundary(std::size_t node) const { return node_boundary_[node]; }
  /// Interior dof of a Lagrange node, -1 for Dirichlet nodes.
  int dof_of_node(std::size_t node) const { return node_dof_[node]; }
  int node_of_dof(std::size_t dof) const { return dof_nodes_[dof]; }
  std::span<const int> element_nodes(std::size_t t) const {
    return {element_nodes_.data() + t * nodes_per_element(), static_cast<std::size_t>(nodes_per_element())};
  }
  const ElementGeometry& geometry(std::size_t t) const { return geometry_[t]; }

  /// Quadrature points of the whole mesh, element-major.
  std::size_t num_quadrature_points() const { return qp_weights_.size(); }
  const std::vector<Eigen::Vector2d>& quadrature_points() const { return qp_coords_; }
  /// Physical weights (reference weight times |det J|).
  const RealVector& quadrature_weights() const { return qp_weights_; }
  std::size_t element_of_quadrature_point(std::size_t qp) const { return qp / rule_.size(); }

  /// (quadrature points) x (all nodes) evaluation matrices.
  const SparseMatrix& value_matrix() const { return eval_; }
  const SparseMatrix& dx_matrix() const { return eval_dx_; }
  const SparseMatrix& dy_matrix() const { return eval_dy_; }

  template <class Scalar>
  Vector<Scalar> to_nodal(const Vector<Scalar>& interior) const {
    Vector<Scalar> full = Vector<Scalar>::Zero(static_cast<Eigen::Index>(num_nodes()));
    for (std::size_t d = 0; d < num_dofs(); ++d) full[dof_nodes_[d]] = interior[static_cast<Eigen::Index>(d)];
    return full;
  }
  template <class Scalar>
  Vector<Scalar> to_interior(const Vector<Scalar>& nodal) const {
    Vector<Scalar> out(static_cast<Eigen::Index>(num_dofs()));
    for (std::size_t d = 0; d < num_dofs(); ++d) out[static_cast<Eigen::Index>(d)] = nodal[dof_nodes_[d]];
    return out;
  }

  /// Nodal interpolant over all Lagrange nodes.
  RealVector interpolate(const ScalarFunction& f) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  LagrangeBasis basis_;
  QuadratureRule rule_;
  std::vector<Eigen::Vector2d> node_coords_;
  std::vector<bool> node_boundary_;
  std::vector<int> node_dof_;
  std::vector<int> dof_nodes_;
  std::vector<int> element_nodes_;
  std::vector<ElementGeometry> geometry_;
  std::vector<Eigen::Vector2d> qp_coords_;
  RealVector qp_weights_;
  SparseMatrix eval_, eval_dx_, eval_dy_;
};

/// Coefficient vector of an element of S_h.
template <class Scalar>
struct BasicFEFunction {
  std::shared_ptr<const FESpace> space;
  Vector<Scalar> coeffs;
  Layout layout = Layout::interior;

  Vector<Scalar> nodal() const { return layout == Layout::all_nodes ? coeffs : space->to_nodal(coeffs); }
};

using FEFunction = BasicFEFunction<double>;
using ComplexFEFunction = BasicFEFunction<Complex>;

}  // namespace mrlab
