#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "mrlab/coefficients.hpp"
#include "mrlab/fe_space.hpp"

namespace mrlab {

class AssemblyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using CholeskySolver = Eigen::SimplicialLDLT<SparseMatrix>;

/// Mass and stiffness matrices over the interior dofs.
///
/// M_ij = (phi_j, phi_i) and K_ij = sum_kl (a_kl d_l phi_j, d_k phi_i), so
/// that M (A_h u) = -K u. Both are factorized once at construction; the
/// object is immutable afterwards and may be shared across threads.
class AssembledPair {
public:
  AssembledPair(std::shared_ptr<const FESpace> space, CoefficientField coeff, SparseMatrix mass,
                SparseMatrix stiffness);

  const FESpace& space() const { return *space_; }
  std::shared_ptr<const FESpace> space_ptr() const { return space_; }
  const CoefficientField& coefficients() const { return coeff_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  std::size_t num_dofs() const { return space_->num_dofs(); }

  RealVector solve_mass(const RealVector& rhs) const;
  ComplexVector solve_mass(const ComplexVector& rhs) const;
  RealVector solve_stiffness(const RealVector& rhs) const;
  ComplexVector solve_stiffness(const ComplexVector& rhs) const;

private:
  std::shared_ptr<const FESpace> space_;
  CoefficientField coeff_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  std::shared_ptr<const CholeskySolver> mass_solver_;
  std::shared_ptr<const CholeskySolver> stiffness_solver_;
};

/// Throws AssemblyError naming the quadrature point where the claimed
/// ellipticity bound fails.
AssembledPair assemble(std::shared_ptr<const FESpace> space, CoefficientField coeff);

/// Mass matrix over every Lagrange node, Dirichlet nodes included.
SparseMatrix assemble_mass_all_nodes(const FESpace& space);

/// b_i = (f, phi_i) for the interior basis functions.
RealVector load_vector(const FESpace& space, const ScalarFunction& f);

/// Function with an evaluable gradient, as needed by the Ritz projection.
struct SmoothFunction {
  ScalarFunction value;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> gradient;
};

FEFunction l2_project(const AssembledPair& pair, const ScalarFunction& f);
FEFunction ritz_project(const AssembledPair& pair, const SmoothFunction& u);
/// v with M V = -K U.
FEFunction apply_Ah(const AssembledPair& pair, const FEFunction& u);

/// Projections of functions from a nested refinement of the space's mesh.
///
/// `coarse_element` maps each fine triangle to the coarse triangle that
/// contains it. Integrals are taken on the fine mesh where both the fine
/// function and the coarse basis are polynomial.
class NestedTransfer {
public:
  NestedTransfer(std::shared_ptr<const AssembledPair> coarse, std::shared_ptr<const FESpace> fine,
                 const std::vector<int>& coarse_element);

  /// P_h of a fine-space function given by its interior coefficients.
  RealVector l2(const RealVector& fine_coeffs) const;
  /// R_h of a fine-space function.
  RealVector ritz(const RealVector& fine_coeffs) const;

private:
  std::shared_ptr<const AssembledPair> coarse_;
  SparseMatrix mixed_mass_;       // coarse dofs x fine dofs
  SparseMatrix mixed_stiffness_;  // coarse dofs x fine dofs
};

/// Composes refine_uniform parent maps: for a mesh refined `levels` times,
/// the index of the ancestor triangle in the starting mesh.
std::vector<int> ancestor_map(const std::vector<const Mesh*>& chain);

/// Debug export in "i j value" form.
void write_triplets(const SparseMatrix& matrix, std::ostream& out);

}  // namespace mrlab
