#include "mrlab/bdf.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

namespace mrlab {

namespace {

constexpr double kReferenceAngles[] = {0.5, 0.5, 0.478, 0.408, 0.288, 0.099};

std::int64_t binomial(int n, int r) {
  std::int64_t c = 1;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace

std::vector<double> BdfScheme::delta_values() const {
  std::vector<double> out;
  out.reserve(delta.size());
  for (const auto& d : delta) out.push_back(boost::rational_cast<double>(d));
  return out;
}

std::complex<double> BdfScheme::generating_polynomial(std::complex<double> zeta) const {
  std::complex<double> sum = 0.0;
  const auto values = delta_values();
  for (int j = k; j >= 0; --j) sum = sum * zeta + values[static_cast<std::size_t>(j)];
  return sum;
}

BdfScheme bdf_coefficients(int k) {
  if (k < 1 || k > 6) throw std::invalid_argument(fmt::format("BDF order must be in 1..6, got {}", k));
  BdfScheme scheme;
  scheme.k = k;
  scheme.alpha_reference = kReferenceAngles[k - 1];
  scheme.delta.assign(static_cast<std::size_t>(k + 1), Rational(0));
  // (1 - zeta)^j / j = sum_i C(j, i) (-1)^i zeta^i / j
  for (int j = 1; j <= k; ++j) {
    for (int i = 0; i <= j; ++i) {
      const std::int64_t sign = i % 2 == 0 ? 1 : -1;
      scheme.delta[static_cast<std::size_t>(i)] += Rational(sign * binomial(j, i), j);
    }
  }
  return scheme;
}

double stability_angle(int k, int samples) {
  if (samples < 2) throw std::invalid_argument("stability_angle needs at least two samples");
  const BdfScheme scheme = bdf_coefficients(k);
  constexpr double kExcludedArc = 1e-8;
  const auto abs_arg = [&](double theta) {
    return std::abs(std::arg(scheme.generating_polynomial(std::polar(1.0, theta))));
  };

  const double lo = kExcludedArc;
  const double hi = std::numbers::pi;
  const double step = (hi - lo) / (samples - 1);
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i < samples; ++i) {
    const double v = abs_arg(lo + i * step);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }

  const double a = lo + std::max(0, best - 1) * step;
  const double b = lo + std::min(samples - 1, best + 1) * step;
  const auto [theta, neg] = boost::math::tools::brent_find_minima(
      [&](double t) { return -abs_arg(t); }, a, b, std::numeric_limits<double>::digits / 2);
  (void)theta;
  return std::numbers::pi - std::max(best_value, -neg);
}

TimeGrid::TimeGrid(double tau_, int N_, int k_) : tau(tau_), N(N_), k(k_) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument(fmt::format("time step must be positive, got {}", tau));
  if (k < 1) throw std::invalid_argument(fmt::format("BDF order must be positive, got {}", k));
  if (N < k) throw std::invalid_argument(fmt::format("need N >= k, got N = {}, k = {}", N, k));
}

BdfStepper::BdfStepper(std::shared_ptr<const AssembledPair> pair, const BdfScheme& scheme, double tau)
    : pair_(std::move(pair)), scheme_(scheme), delta_(scheme.delta_values()), tau_(tau) {
  if (!pair_) throw std::invalid_argument("BdfStepper needs an assembled pair");
  if (!(tau > 0.0)) throw std::invalid_argument(fmt::format("time step must be positive, got {}", tau));
  const SparseMatrix lhs = delta_[0] * pair_->mass() + tau_ * pair_->stiffness();
  auto solver = std::make_shared<CholeskySolver>(lhs);
  if (solver->info() != Eigen::Success) throw SolverError("factorization of delta_0 M + tau K failed");
  solver_ = std::move(solver);
}

Trajectory BdfStepper::run(int N, const Forcing& forcing, const std::vector<RealVector>& starting) const {
  const int k = scheme_.k;
  Trajectory traj;
  traj.grid = TimeGrid(tau_, N, k);
  traj.space = pair_->space_ptr();
  if (starting.size() != static_cast<std::size_t>(k))
    throw std::invalid_argument(fmt::format("BDF{} needs {} starting values, got {}", k, k, starting.size()));
  const auto ndof = static_cast<Eigen::Index>(pair_->num_dofs());
  for (const auto& s : starting)
    if (s.size() != ndof) throw std::invalid_argument("starting value does not belong to the pair's space");

  traj.states.reserve(static_cast<std::size_t>(N + 1));
  for (const auto& s : starting) traj.states.push_back(s);
  RealVector combo(ndof);
  for (int n = k; n <= N; ++n) {
    combo.setZero();
    if (forcing) {
      const RealVector f = forcing(n, traj.grid.t(n));
      if (f.size() != ndof) throw std::invalid_argument(fmt::format("forcing at step {} has the wrong size", n));
      combo = tau_ * f;
    }
    for (int j = 1; j <= k; ++j) combo -= delta_[static_cast<std::size_t>(j)] * traj.states[static_cast<std::size_t>(n - j)];
    const RealVector rhs = pair_->mass() * combo;
    RealVector u = solver_->solve(rhs);
    if (solver_->info() != Eigen::Success) throw SolverError(fmt::format("BDF solve failed at step {}", n));
    traj.states.push_back(std::move(u));
  }
  return traj;
}

Trajectory run_bdf(std::shared_ptr<const AssembledPair> pair, const BdfScheme& scheme, const TimeGrid& grid,
                   const Forcing& forcing, const std::vector<RealVector>& starting) {
  if (grid.k != scheme.k) throw std::invalid_argument("time grid and scheme disagree on k");
  return BdfStepper(std::move(pair), scheme, grid.tau).run(grid.N, forcing, starting);
}

Sequence Sequence::from(int n) const {
  if (n < first || n > last() + 1) throw std::out_of_range(fmt::format("sequence has no index {}", n));
  Sequence out;
  out.first = n;
  out.values.assign(values.begin() + (n - first), values.end());
  return out;
}

Sequence d_tau(const Trajectory& trajectory) {
  Sequence out;
  out.first = 1;
  const double inv = 1.0 / trajectory.grid.tau;
  for (std::size_t n = 1; n < trajectory.states.size(); ++n)
    out.values.push_back((trajectory.states[n] - trajectory.states[n - 1]) * inv);
  return out;
}

Sequence dot_u(const Trajectory& trajectory, const BdfScheme& scheme) {
  Sequence out;
  out.first = scheme.k;
  const auto delta = scheme.delta_values();
  const double inv = 1.0 / trajectory.grid.tau;
  for (std::size_t n = static_cast<std::size_t>(scheme.k); n < trajectory.states.size(); ++n) {
    RealVector v = delta[0] * trajectory.states[n];
    for (int j = 1; j <= scheme.k; ++j) v += delta[static_cast<std::size_t>(j)] * trajectory.states[n - j];
    out.values.push_back(v * inv);
  }
  return out;
}

Sequence apply_Ah(const AssembledPair& pair, const Trajectory& trajectory) {
  Sequence out;
  out.first = 0;
  for (const auto& u : trajectory.states) out.values.push_back(-pair.solve_mass(RealVector(pair.stiffness() * u)));
  return out;
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  out << "n,t,coeff_index,value\n";
  for (std::size_t n = 0; n < trajectory.states.size(); ++n) {
    const double t = trajectory.grid.t(static_cast<int>(n));
    const auto& u = trajectory.states[n];
    for (Eigen::Index i = 0; i < u.size(); ++i) out << fmt::format("{},{:.17g},{},{:.17g}\n", n, t, i, u[i]);
  }
}

}  // namespace mrlab
