#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <boost/rational.hpp>

#include "mrlab/assembly.hpp"

namespace mrlab {

using Rational = boost::rational<std::int64_t>;

/// k-step BDF: delta(zeta) = sum_{j=1}^k (1 - zeta)^j / j = sum_{j=0}^k delta_j zeta^j.
struct BdfScheme {
  int k = 1;
  std::vector<Rational> delta;
  /// Published A(alpha) angle as a fraction of pi.
  double alpha_reference = 0.5;

  std::vector<double> delta_values() const;
  std::complex<double> generating_polynomial(std::complex<double> zeta) const;
};

/// Throws std::invalid_argument unless 1 <= k <= 6.
BdfScheme bdf_coefficients(int k);

/// pi - max_{|zeta| = 1} |arg delta(zeta)|, in radians.
///
/// The maximum is located on `samples` equispaced boundary points (one half
/// circle suffices by conjugate symmetry) and refined with Brent's method in
/// the neighbouring cells. An arc of half-width 1e-8 around zeta = 1, where
/// delta vanishes, is left out; there arg delta tends to arg(1 - zeta), which
/// stays within pi/2.
double stability_angle(int k, int samples = 100000);

struct TimeGrid {
  double tau = 0.0;
  int N = 0;
  int k = 1;

  TimeGrid() = default;
  /// Throws std::invalid_argument unless tau > 0 and N >= k >= 1.
  TimeGrid(double tau, int N, int k);
  double t(int n) const { return n * tau; }
};

/// u_h^0 .. u_h^N as interior coefficient vectors of one space.
struct Trajectory {
  TimeGrid grid;
  std::shared_ptr<const FESpace> space;
  std::vector<RealVector> states;

  FEFunction state(int n) const { return {space, states.at(static_cast<std::size_t>(n)), Layout::interior}; }
};

/// Coefficients F^n of f_h^n = P_h f(t_n); an empty function means f = 0.
using Forcing = std::function<RealVector(int n, double t)>;

/// Fully discrete BDF-k stepper for one (pair, k, tau).
///
/// (delta_0 M + tau K) U^n = tau M F^n - sum_{j=1}^k delta_j M U^{n-j}.
/// The left-hand matrix is factorized once at construction. The stepper is
/// immutable afterwards and can be shared between runs.
class BdfStepper {
public:
  BdfStepper(std::shared_ptr<const AssembledPair> pair, const BdfScheme& scheme, double tau);

  const AssembledPair& pair() const { return *pair_; }
  const BdfScheme& scheme() const { return scheme_; }
  double tau() const { return tau_; }

  /// `starting` must hold exactly k vectors u^0 .. u^{k-1}.
  Trajectory run(int N, const Forcing& forcing, const std::vector<RealVector>& starting) const;

private:
  std::shared_ptr<const AssembledPair> pair_;
  BdfScheme scheme_;
  std::vector<double> delta_;
  double tau_;
  std::shared_ptr<const CholeskySolver> solver_;
};

Trajectory run_bdf(std::shared_ptr<const AssembledPair> pair, const BdfScheme& scheme, const TimeGrid& grid,
                   const Forcing& forcing, const std::vector<RealVector>& starting);

/// Vectors v^first .. v^last.
struct Sequence {
  int first = 0;
  std::vector<RealVector> values;

  int last() const { return first + static_cast<int>(values.size()) - 1; }
  const RealVector& operator[](int n) const { return values.at(static_cast<std::size_t>(n - first)); }
  /// Restriction to n >= from.
  Sequence from(int n) const;
};

/// d_tau u^n = (u^n - u^{n-1}) / tau for n = 1..N.
Sequence d_tau(const Trajectory& trajectory);
/// (1/tau) sum_j delta_j u^{n-j} for n = k..N.
Sequence dot_u(const Trajectory& trajectory, const BdfScheme& scheme);
/// A_h u^n for n = 0..N.
Sequence apply_Ah(const AssembledPair& pair, const Trajectory& trajectory);

/// CSV with header "n,t,coeff_index,value".
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);

}  // namespace mrlab
