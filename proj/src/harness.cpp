#include "mrlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "mrlab/config.hpp"

namespace mrlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs task(i) for i in [0, count) on up to `jobs` threads. Exceptions are
// rethrown after all threads finish, lowest index first.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Mesh base_mesh(const ExperimentConfig& c) {
  return c.domain == DomainTag::lshape ? generate_lshape_mesh(c.n0) : generate_square_mesh(c.n0);
}

// Space-time forcings given as functions of (x, t).
double forcing_value(ForcingKind kind, const Eigen::Vector2d& p, double t) {
  const double x = p.x(), y = p.y();
  switch (kind) {
    case ForcingKind::sinsep:
      return std::sin(kPi * x) * std::sin(kPi * y) * (1.0 + std::sin(2 * kPi * t)) +
             0.5 * std::sin(2 * kPi * x) * std::sin(3 * kPi * y) * std::cos(3.0 * t);
    case ForcingKind::poly:
      return (1.0 + t + t * t) * x * (1 - x) * y * (1 - y) * (1 + x);
    default:
      return 0.0;
  }
}

// Modal amplitude of the eigenvector forcing.
double modal_amplitude(double t) { return 1.0 + std::sin(2 * kPi * t); }

// Smooth function whose interpolant starts the reference run.
double reference_start(const Eigen::Vector2d& p, double t) {
  return std::exp(-t) * std::sin(kPi * p.x()) * std::sin(kPi * p.y()) * (1 + p.x());
}

RealVector seeded_real_vector(Eigen::Index n, std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return std::sqrt(2.0) * seeded_complex_vector(n, seed, a, b).real();
}

// Forcing coefficients F^0..F^N; entries below k are never used by the stepper.
std::vector<RealVector> forcing_coefficients(const ExperimentConfig& c, ForcingKind kind, const AssembledPair& pair,
                                             const RealVector* phi, int level, double tau, int N, double scale) {
  const auto n = static_cast<Eigen::Index>(pair.num_dofs());
  std::vector<RealVector> F;
  F.reserve(static_cast<std::size_t>(N) + 1);
  for (int step = 0; step <= N; ++step) {
    const double t = step * tau;
    switch (kind) {
      case ForcingKind::sinsep:
      case ForcingKind::poly:
        F.push_back(scale *
                    l2_project(pair, [kind, t](const Eigen::Vector2d& p) { return forcing_value(kind, p, t); }).coeffs);
        break;
      case ForcingKind::eigen:
        F.push_back(scale * modal_amplitude(t) * *phi);
        break;
      case ForcingKind::random:
        F.push_back(scale * seeded_real_vector(n, c.seed, static_cast<std::uint64_t>(level) + 1000,
                                               static_cast<std::uint64_t>(step)));
        break;
      case ForcingKind::zero:
        F.push_back(RealVector::Zero(n));
        break;
    }
  }
  return F;
}

Forcing as_forcing(const std::vector<RealVector>& F) {
  return [&F](int n, double) { return F.at(static_cast<std::size_t>(n)); };
}

std::vector<double> norms_of(const AssembledPair& pair, const Sequence& seq, double q, SpatialKind kind) {
  return spatial_norms(pair, seq, NormSpec{2.0, q, kind});
}

std::vector<double> tail(const std::vector<double>& v, std::size_t from) {
  return {v.begin() + static_cast<std::ptrdiff_t>(std::min(from, v.size())), v.end()};
}

Sequence states_from(const Trajectory& traj, int first) {
  Sequence s;
  s.first = first;
  s.values.assign(traj.states.begin() + first, traj.states.end());
  return s;
}

Sequence vectors_from(const std::vector<RealVector>& v, int first) {
  Sequence s;
  s.first = first;
  s.values.assign(v.begin() + first, v.end());
  return s;
}

ReportRow base_row(const std::string& experiment, int level, double h, double tau, int N, int k, double p, double q) {
  ReportRow r;
  r.experiment = experiment;
  r.level = level;
  r.h = h;
  r.tau = tau;
  r.N = N;
  r.k = k;
  r.p = p;
  r.q = q;
  return r;
}

void set_ratio(ReportRow& r, double num, double den) {
  r.numerator = num;
  r.denominator = den;
  if (den == 0.0 || !std::isfinite(num) || !std::isfinite(den)) {
    r.ratio = 0.0;
    r.verdict = "degenerate";
  } else {
    r.ratio = num / den;
    r.verdict = std::isfinite(r.ratio) && r.ratio > 0.0 ? "pass" : "degenerate";
  }
}

// Prepared data of one mesh level shared by every cell on it.
struct LevelData {
  Level level;
  std::optional<ExtremeEigenpairs> eig;
  // Reference space for the error experiments.
  std::shared_ptr<const AssembledPair> fine;
  std::shared_ptr<const NestedTransfer> transfer;
};

bool needs_eigenpairs(const ExperimentConfig& c) {
  return c.forcing == ForcingKind::eigen || c.start == StartPolicy::eigenvector ||
         (c.oracle_cells && (c.experiment == Experiment::maxreg || c.experiment == Experiment::w1q)) ||
         c.experiment == Experiment::decay;
}

std::vector<RealVector> zero_starts(const AssembledPair& pair, int k) {
  return std::vector<RealVector>(static_cast<std::size_t>(k), RealVector::Zero(static_cast<Eigen::Index>(pair.num_dofs())));
}

struct Job {
  std::string experiment;
  int level = 0;
  int k = 1;
  std::function<std::vector<ReportRow>()> run;
};

// ---------------------------------------------------------------- cells

class Runner {
public:
  explicit Runner(const ExperimentConfig& c) : c_(c) {}

  ExperimentReport run(int jobs) {
    prepare(jobs);
    std::vector<Job> list = make_jobs();
    std::vector<std::vector<ReportRow>> out(list.size());
    parallel_for(list.size(), jobs, [&](std::size_t i) {
      try {
        out[i] = list[i].run();
      } catch (const std::exception& e) {
        ReportRow r = base_row(list[i].experiment, list[i].level, kNaN, kNaN, 0, list[i].k, kNaN, kNaN);
        r.ratio = kNaN;
        r.verdict = "error";
        r.note = e.what();
        out[i] = {r};
      }
    });
    ExperimentReport report;
    report.config = config_echo(c_);
    report.seed = c_.seed;
    for (auto& rows : out)
      for (auto& r : rows) report.rows.push_back(std::move(r));
    apply_verdicts(report.rows);
    return report;
  }

private:
  void prepare(int jobs) {
    const std::vector<Level> levels = build_levels(c_);
    data_.resize(levels.size());
    parallel_for(levels.size(), jobs, [&](std::size_t i) {
      LevelData& d = data_[i];
      d.level = levels[i];
      if (needs_eigenpairs(c_)) d.eig = extreme_eigenpairs(*d.level.pair);
      const bool error_like = c_.experiment == Experiment::error || c_.experiment == Experiment::linfty;
      const bool used = c_.experiment != Experiment::linfty || i + 1 == levels.size();
      if (error_like && used) {
        std::vector<Mesh> chain{*d.level.mesh};
        for (int r = 0; r < c_.reference_refinements; ++r) chain.push_back(refine_uniform(chain.back()));
        std::vector<const Mesh*> ptrs;
        for (const auto& m : chain) ptrs.push_back(&m);
        const auto map = ancestor_map(ptrs);
        auto fine_space =
            std::make_shared<FESpace>(std::make_shared<Mesh>(chain.back()), c_.degree);
        d.fine = std::make_shared<AssembledPair>(assemble(fine_space, coefficient_from_name(c_.coefficients)));
        d.transfer = std::make_shared<NestedTransfer>(d.level.pair, fine_space, map);
      }
    });
    h0_ = data_.front().level.h;
  }

  double tau_of(const LevelData& d) const { return coupled_tau(c_, h0_, d.level.h); }

  // P1 on the convex square has the L2 Ritz order 2 checked by the error experiment.
  bool ritz_order_applies() const {
    return c_.experiment == Experiment::error && c_.degree == 1 && c_.domain == DomainTag::square &&
           data_.size() >= 2;
  }

  std::vector<Job> make_jobs() {
    std::vector<Job> list;
    const std::string name = to_string(c_.experiment);
    auto add = [&](const std::string& exp, int level, int k, std::function<std::vector<ReportRow>()> f) {
      list.push_back({exp, level, k, std::move(f)});
    };
    if (c_.experiment == Experiment::linfty) {
      const std::size_t finest = data_.size() - 1;
      for (int i = 0; i <= c_.linfty_doublings; ++i)
        for (int k : c_.ks) {
          const int N = c_.linfty_n0 << i;
          add(name, static_cast<int>(finest), k, [this, finest, k, N] { return linfty_cell(data_[finest], k, N, 1.0); });
          if (c_.homogeneity_check)
            add(name + "_homogeneity", static_cast<int>(finest), k, [this, finest, k, N] {
              return homogeneity(linfty_cell(data_[finest], k, N, 1.0), linfty_cell(data_[finest], k, N, 2.0));
            });
        }
      return list;
    }
    for (std::size_t l = 0; l < data_.size(); ++l)
      for (int k : c_.ks) {
        add(name, static_cast<int>(l), k, [this, l, k] { return cell(data_[l], k, 1.0, c_.forcing); });
        if (c_.homogeneity_check)
          add(name + "_homogeneity", static_cast<int>(l), k,
              [this, l, k] { return homogeneity(cell(data_[l], k, 1.0, c_.forcing), cell(data_[l], k, 2.0, c_.forcing)); });
      }
    const bool oracle = c_.oracle_cells && (c_.experiment == Experiment::maxreg || c_.experiment == Experiment::w1q);
    if (oracle && std::count(c_.ks.begin(), c_.ks.end(), 1) > 0)
      for (std::size_t l = 0; l < data_.size(); ++l)
        add(name + "_oracle", static_cast<int>(l), 1, [this, l] { return oracle_cell(data_[l]); });
    if (c_.experiment == Experiment::decay && c_.start == StartPolicy::eigenvector &&
        std::count(c_.ks.begin(), c_.ks.end(), 1) > 0)
      for (std::size_t l = 0; l < data_.size(); ++l)
        add("decay_oracle", static_cast<int>(l), 1, [this, l] { return decay_oracle(data_[l]); });
    return list;
  }

  std::vector<ReportRow> cell(const LevelData& d, int k, double scale, ForcingKind forcing) const {
    switch (c_.experiment) {
      case Experiment::maxreg:
        return maxreg_cell(d, k, scale, forcing, "maxreg");
      case Experiment::equivalence:
        return equivalence_cell(d, k, scale);
      case Experiment::error:
        return error_cell(d, k, scale);
      case Experiment::w1q:
        return w1q_cell(d, k, scale, forcing, "w1q");
      case Experiment::decay:
        return decay_cell(d, k, scale);
      case Experiment::linfty:
        break;
    }
    return {};
  }

  Trajectory zero_start_run(const LevelData& d, const BdfScheme& scheme, double tau, int N,
                            const std::vector<RealVector>& F) const {
    return run_bdf(d.level.pair, scheme, TimeGrid(tau, N, scheme.k), as_forcing(F), zero_starts(*d.level.pair, scheme.k));
  }

  std::vector<ReportRow> maxreg_cell(const LevelData& d, int k, double scale, ForcingKind forcing,
                                     const std::string& name) const {
    const BdfScheme scheme = bdf_coefficients(k);
    const double tau = tau_of(d);
    const int N = steps_for(c_, tau, k);
    const auto& pair = *d.level.pair;
    const RealVector* phi = d.eig ? &d.eig->phi_min : nullptr;
    const auto F = forcing_coefficients(c_, forcing, pair, phi, d.level.index, tau, N, scale);
    const Trajectory traj = zero_start_run(d, scheme, tau, N, F);
    const Sequence dt = d_tau(traj).from(k);
    const Sequence ah = apply_Ah(pair, traj).from(k);
    const Sequence f = vectors_from(F, k);
    std::vector<ReportRow> rows;
    for (double q : c_.qs) {
      const auto nd = norms_of(pair, dt, q, SpatialKind::Lq);
      const auto na = norms_of(pair, ah, q, SpatialKind::Lq);
      const auto nf = norms_of(pair, f, q, SpatialKind::Lq);
      for (double p : c_.ps) {
        ReportRow r = base_row(name, d.level.index, d.level.h, tau, N, k, p, q);
        set_ratio(r, lp_time_norm(nd, p, tau) + lp_time_norm(na, p, tau), lp_time_norm(nf, p, tau));
        rows.push_back(r);
      }
    }
    return order_pq(rows);
  }

  std::vector<ReportRow> equivalence_cell(const LevelData& d, int k, double scale) const {
    const BdfScheme scheme = bdf_coefficients(k);
    const double tau = tau_of(d);
    const int N = steps_for(c_, tau, k);
    const auto& pair = *d.level.pair;
    const RealVector* phi = d.eig ? &d.eig->phi_min : nullptr;
    const auto F = forcing_coefficients(c_, c_.forcing, pair, phi, d.level.index, tau, N, scale);
    const Trajectory traj = zero_start_run(d, scheme, tau, N, F);
    const Sequence dt = d_tau(traj).from(k);
    const Sequence du = dot_u(traj, scheme);
    std::vector<ReportRow> rows;
    for (double q : c_.qs) {
      const auto nd = norms_of(pair, dt, q, SpatialKind::Lq);
      const auto nu = norms_of(pair, du, q, SpatialKind::Lq);
      for (double p : c_.ps) {
        ReportRow r = base_row("equivalence", d.level.index, d.level.h, tau, N, k, p, q);
        set_ratio(r, lp_time_norm(nd, p, tau), lp_time_norm(nu, p, tau));
        rows.push_back(r);
      }
    }
    return order_pq(rows);
  }

  std::vector<ReportRow> w1q_cell(const LevelData& d, int k, double scale, ForcingKind forcing,
                                  const std::string& name) const {
    const BdfScheme scheme = bdf_coefficients(k);
    const double tau = tau_of(d);
    const int N = steps_for(c_, tau, k);
    const auto& pair = *d.level.pair;
    const RealVector* phi = d.eig ? &d.eig->phi_min : nullptr;
    const auto F = forcing_coefficients(c_, forcing, pair, phi, d.level.index, tau, N, scale);
    const Trajectory traj = zero_start_run(d, scheme, tau, N, F);
    const Sequence dt = d_tau(traj).from(k);
    const Sequence u = states_from(traj, k);
    const Sequence f = vectors_from(F, k);
    std::vector<ReportRow> rows;
    for (double q : c_.qs) {
      const auto nd = norms_of(pair, dt, q, SpatialKind::Wm1q);
      const auto nu = norms_of(pair, u, q, SpatialKind::W1q);
      const auto nf = norms_of(pair, f, q, SpatialKind::Wm1q);
      for (double p : c_.ps) {
        ReportRow r = base_row(name, d.level.index, d.level.h, tau, N, k, p, q);
        set_ratio(r, lp_time_norm(nd, p, tau) + lp_time_norm(nu, p, tau), lp_time_norm(nf, p, tau));
        rows.push_back(r);
      }
    }
    return order_pq(rows);
  }

  // Discrete errors of one coarse run against the reference on the fine space.
  struct ErrorSeries {
    std::vector<RealVector> e;    // P_h u^n - u_h^n, n = 0..N
    std::vector<RealVector> rho;  // P_h u^n - R_h u^n, n = 0..N
  };

  ErrorSeries error_series(const LevelData& d, int k, double tau, int N, double scale) const {
    const BdfScheme scheme = bdf_coefficients(k);
    const auto& coarse = *d.level.pair;
    const auto& fine = *d.fine;
    const auto Ff = forcing_coefficients(c_, c_.forcing, fine, nullptr, d.level.index, tau, N, scale);
    std::vector<RealVector> fine_starts;
    for (int j = 0; j < k; ++j) {
      if (c_.start == StartPolicy::projected_reference) {
        const double t = j * tau;
        const RealVector nodal = fine.space().interpolate([t](const Eigen::Vector2d& p) { return reference_start(p, t); });
        fine_starts.push_back(scale * fine.space().to_interior(nodal));
      } else {
        fine_starts.push_back(RealVector::Zero(static_cast<Eigen::Index>(fine.num_dofs())));
      }
    }
    const Trajectory ref = run_bdf(d.fine, scheme, TimeGrid(tau, N, k), as_forcing(Ff), fine_starts);
    std::vector<RealVector> Ph(static_cast<std::size_t>(N) + 1), Rh(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n) {
      Ph[static_cast<std::size_t>(n)] = d.transfer->l2(ref.states[static_cast<std::size_t>(n)]);
      Rh[static_cast<std::size_t>(n)] = d.transfer->ritz(ref.states[static_cast<std::size_t>(n)]);
    }
    const auto Fc = forcing_coefficients(c_, c_.forcing, coarse, nullptr, d.level.index, tau, N, scale);
    const std::vector<RealVector> starts(Ph.begin(), Ph.begin() + k);
    const Trajectory uh = run_bdf(d.level.pair, scheme, TimeGrid(tau, N, k), as_forcing(Fc), starts);
    ErrorSeries s;
    for (int n = 0; n <= N; ++n) {
      const auto i = static_cast<std::size_t>(n);
      s.e.push_back(Ph[i] - uh.states[i]);
      s.rho.push_back(Ph[i] - Rh[i]);
    }
    return s;
  }

  std::vector<ReportRow> error_cell(const LevelData& d, int k, double scale) const {
    const double tau = tau_of(d);
    const int N = steps_for(c_, tau, k);
    const auto& pair = *d.level.pair;
    const ErrorSeries s = error_series(d, k, tau, N, scale);
    const Sequence e = vectors_from(s.e, 0);
    const Sequence rho = vectors_from(s.rho, 0);
    std::vector<ReportRow> rows;
    for (double q : c_.qs) {
      const auto ne = norms_of(pair, e, q, SpatialKind::Lq);
      const auto nr = norms_of(pair, rho, q, SpatialKind::Lq);
      double start = 0.0;
      for (int j = 0; j < k; ++j) start += ne[static_cast<std::size_t>(j)];
      for (double p : c_.ps) {
        ReportRow r = base_row("error", d.level.index, d.level.h, tau, N, k, p, q);
        const double ritz = lp_time_norm(tail(nr, static_cast<std::size_t>(k)), p, tau);
        set_ratio(r, lp_time_norm(tail(ne, static_cast<std::size_t>(k)), p, tau), ritz + start);
        rows.push_back(r);
      }
    }
    if (ritz_order_applies()) {
      // The spatial order compares the two finest levels on the finest time grid.
      const int last = static_cast<int>(data_.size()) - 1;
      double aux = std::numeric_limits<double>::quiet_NaN();
      if (d.level.index == last) {
        aux = lp_time_norm(tail(norms_of(pair, rho, 2.0, SpatialKind::Lq), static_cast<std::size_t>(k)), 2.0, tau);
      } else if (d.level.index == last - 1) {
        const double tau_f = tau_of(data_[static_cast<std::size_t>(last)]);
        const ErrorSeries sf = error_series(d, k, tau_f, steps_for(c_, tau_f, k), scale);
        const auto nr = norms_of(pair, vectors_from(sf.rho, 0), 2.0, SpatialKind::Lq);
        aux = lp_time_norm(tail(nr, static_cast<std::size_t>(k)), 2.0, tau_f);
      }
      for (auto& r : rows) r.aux = aux;
    }
    return order_pq(rows);
  }

  std::vector<ReportRow> linfty_cell(const LevelData& d, int k, int N, double scale) const {
    const double tau = c_.final_time / N;
    const auto& pair = *d.level.pair;
    const ErrorSeries s = error_series(d, k, tau, N, scale);
    const Sequence e = vectors_from(s.e, 0);
    const Sequence rho = vectors_from(s.rho, 0);
    std::vector<ReportRow> rows;
    for (double q : c_.qs) {
      const auto ne = norms_of(pair, e, q, SpatialKind::Lq);
      const auto nr = norms_of(pair, rho, q, SpatialKind::Lq);
      const auto ku = static_cast<std::size_t>(k);
      const double lhs = *std::max_element(ne.begin() + static_cast<std::ptrdiff_t>(ku), ne.end());
      const double ritz = *std::max_element(nr.begin() + static_cast<std::ptrdiff_t>(ku), nr.end());
      const double start = *std::max_element(ne.begin(), ne.begin() + static_cast<std::ptrdiff_t>(ku));
      ReportRow r = base_row("linfty", d.level.index, d.level.h, tau, N, k, kInfinity, q);
      set_ratio(r, lhs, std::log(1.0 + N) * ritz + start);
      rows.push_back(r);
    }
    return rows;
  }

  std::vector<RealVector> decay_starts(const LevelData& d, const BdfScheme& scheme, double tau, double scale) const {
    std::vector<RealVector> starts;
    const auto n = static_cast<Eigen::Index>(d.level.pair->num_dofs());
    for (int j = 0; j < scheme.k; ++j) {
      if (c_.start == StartPolicy::eigenvector)
        starts.push_back(scale * std::exp(-d.eig->lambda_min * j * tau) * d.eig->phi_min);
      else
        starts.push_back(scale * seeded_real_vector(n, c_.seed, static_cast<std::uint64_t>(d.level.index) + 2000,
                                                    static_cast<std::uint64_t>(j)));
    }
    return starts;
  }

  std::vector<ReportRow> decay_cell(const LevelData& d, int k, double scale) const {
    const BdfScheme scheme = bdf_coefficients(k);
    const double tau = tau_of(d);
    const int N = steps_for(c_, tau, k);
    const Trajectory traj = run_bdf(d.level.pair, scheme, TimeGrid(tau, N, k), {}, decay_starts(d, scheme, tau, scale));
    const double reference = std::log1p(tau * d.eig->lambda_min) / tau;
    std::vector<ReportRow> rows;
    for (double q : c_.qs) {
      const auto nu = norms_of(*d.level.pair, states_from(traj, 0), q, SpatialKind::Lq);
      ReportRow r = base_row("decay", d.level.index, d.level.h, tau, N, k, kInfinity, q);
      set_ratio(r, fitted_decay_rate(nu, tau), reference);
      if (r.verdict == "pass" && !(r.numerator > 0.0)) r.verdict = "fail";
      rows.push_back(r);
    }
    return rows;
  }

  std::vector<ReportRow> decay_oracle(const LevelData& d) const {
    std::vector<ReportRow> rows = decay_cell(d, 1, 1.0);
    for (auto& r : rows) {
      r.experiment = "decay_oracle";
      if (r.verdict == "pass") r.verdict = std::abs(r.ratio - 1.0) <= limits::decay_oracle ? "pass" : "fail";
    }
    return rows;
  }

  // k = 1 cells with the eigenvector forcing against the scalar recurrence.
  std::vector<ReportRow> oracle_cell(const LevelData& d) const {
    const BdfScheme scheme = bdf_coefficients(1);
    const double tau = tau_of(d);
    const int N = steps_for(c_, tau, 1);
    const double lambda = d.eig->lambda_min;
    std::vector<double> s;
    for (int n = 0; n <= N; ++n) s.push_back(modal_amplitude(n * tau));
    std::vector<ReportRow> measured;
    if (c_.experiment == Experiment::maxreg) {
      measured = maxreg_cell(d, 1, 1.0, ForcingKind::eigen, "maxreg_oracle");
    } else {
      measured = w1q_cell(d, 1, 1.0, ForcingKind::eigen, "w1q_oracle");
    }
    const std::vector<double> c = scalar_bdf(scheme, lambda, tau, s, {0.0});
    for (auto& r : measured) {
      double expected = 0.0;
      if (c_.experiment == Experiment::maxreg) {
        expected = modal_maxreg_ratio(scheme, lambda, tau, s, r.p);
      } else {
        // Norms of the eigenvector: W^{1,q} = (L^q + G^q)^{1/q}, lift = (G + L) / lambda.
        const auto& space = d.level.pair->space();
        const RealVector nodal = space.to_nodal(d.eig->phi_min);
        const double L = lq_norm_nodal(space, nodal, r.q);
        const double G = gradient_lq_norm(space, nodal, r.q);
        const double w1 = std::pow(std::pow(L, r.q) + std::pow(G, r.q), 1.0 / r.q);
        const double neg = (G + L) / lambda;
        std::vector<double> dc, cc, ss;
        for (int n = 1; n <= N; ++n) {
          dc.push_back(std::abs(c[static_cast<std::size_t>(n)] - c[static_cast<std::size_t>(n) - 1]) / tau);
          cc.push_back(std::abs(c[static_cast<std::size_t>(n)]));
          ss.push_back(std::abs(s[static_cast<std::size_t>(n)]));
        }
        expected = (lp_time_norm(dc, r.p, tau) * neg + lp_time_norm(cc, r.p, tau) * w1) / (lp_time_norm(ss, r.p, tau) * neg);
      }
      const double got = r.ratio;
      r.numerator = got;
      r.denominator = expected;
      r.ratio = got / expected;
      r.verdict = std::abs(r.ratio - 1.0) <= limits::oracle ? "pass" : "fail";
    }
    return measured;
  }

  static std::vector<ReportRow> homogeneity(std::vector<ReportRow> base, const std::vector<ReportRow>& doubled) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto& r = base[i];
      r.experiment += "_homogeneity";
      const double a = r.ratio, b = doubled[i].ratio;
      r.numerator = b;
      r.denominator = a;
      if (r.verdict == "degenerate" && doubled[i].verdict == "degenerate") {
        r.ratio = 0.0;
        continue;
      }
      r.ratio = b / a;
      r.verdict = std::abs(b - a) <= limits::homogeneity * std::abs(a) ? "pass" : "fail";
    }
    return base;
  }

  // Rows are built q-major; report them p-major.
  static std::vector<ReportRow> order_pq(std::vector<ReportRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
      return a.p != b.p ? a.p < b.p : a.q < b.q;
    });
    return rows;
  }

  // Cross-level checks on the main rows.
  void apply_verdicts(std::vector<ReportRow>& rows) const {
    const std::string main = to_string(c_.experiment);
    std::map<std::tuple<int, double, double>, std::vector<ReportRow*>> groups;
    for (auto& r : rows)
      if (r.experiment == main) groups[{r.k, r.p, r.q}].push_back(&r);
    std::vector<ReportRow> extra;
    for (auto& [key, list] : groups) {
      std::stable_sort(list.begin(), list.end(), [](const ReportRow* a, const ReportRow* b) {
        return a->level != b->level ? a->level < b->level : a->N < b->N;
      });
      // Stability checks use the spread max/min over all levels up to the current one.
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t i = 0; i < list.size(); ++i) {
        ReportRow& r = *list[i];
        if (r.verdict != "pass") continue;
        if (c_.experiment == Experiment::equivalence &&
            !(r.ratio >= limits::equivalence_low && r.ratio <= limits::equivalence_high)) {
          r.verdict = "fail";
          r.note = "ratio outside [0.1, 10]";
          continue;
        }
        const double value = c_.experiment == Experiment::decay ? r.numerator : r.ratio;
        lo = std::min(lo, value);
        hi = std::max(hi, value);
        if (i == 0) continue;
        const ReportRow& prev = *list[i - 1];
        if (prev.verdict == "degenerate" || prev.verdict == "error") continue;
        const double change = r.ratio / prev.ratio;
        const double spread = hi / lo - 1.0;
        switch (c_.experiment) {
          case Experiment::maxreg:
            if (i + 1 == list.size() && change > limits::saturation) r.verdict = "fail";
            break;
          case Experiment::error:
            if (i + 1 == list.size() && change > limits::error_growth) r.verdict = "fail";
            break;
          case Experiment::linfty:
            if (change > limits::linfty_growth) r.verdict = "fail";
            break;
          case Experiment::equivalence:
            if (spread > limits::equivalence_drift) r.verdict = "fail";
            break;
          case Experiment::w1q:
            if (spread > limits::w1q_drift) r.verdict = "fail";
            break;
          case Experiment::decay:
            if (spread > limits::decay_drift) r.verdict = "fail";
            break;
        }
        if (r.verdict != "fail" || !r.note.empty()) continue;
        const bool growth = c_.experiment == Experiment::maxreg || c_.experiment == Experiment::error ||
                            c_.experiment == Experiment::linfty;
        r.note = growth ? fmt::format("change {:.6g} against level {}", change, prev.level)
                        : fmt::format("spread {:.6g} over levels {}..{}", spread, list.front()->level, r.level);
      }
      // Observed Ritz order between the two finest levels.
      if (ritz_order_applies() && std::get<1>(key) == 2.0 && std::get<2>(key) == 2.0 && list.size() >= 2) {
        const ReportRow& a = *list[list.size() - 2];
        const ReportRow& b = *list.back();
        ReportRow r = base_row("error_ritz_order", b.level, b.h, b.tau, b.N, b.k, 2.0, 2.0);
        r.numerator = a.aux;
        r.denominator = b.aux;
        r.ratio = std::log(r.numerator / r.denominator) / std::log(a.h / b.h);
        r.verdict = std::isfinite(r.ratio) && r.ratio >= limits::ritz_order ? "pass" : "fail";
        extra.push_back(r);
      }
    }
    for (auto& r : extra) rows.push_back(r);
  }

  const ExperimentConfig& c_;
  std::vector<LevelData> data_;
  double h0_ = 0.0;
};

std::string verdict_summary(const std::vector<ReportRow>& rows, nlohmann::ordered_json& summary) {
  std::map<std::string, int> counts{{"pass", 0}, {"fail", 0}, {"degenerate", 0}, {"error", 0}};
  for (const auto& r : rows) counts[r.verdict]++;
  for (const auto& [k, v] : counts) summary[k] = v;
  return counts["pass"] == static_cast<int>(rows.size()) ? "pass" : "fail";
}

}  // namespace

// ---------------------------------------------------------------- public

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::maxreg: return "maxreg";
    case Experiment::equivalence: return "equivalence";
    case Experiment::error: return "error";
    case Experiment::linfty: return "linfty";
    case Experiment::w1q: return "w1q";
    case Experiment::decay: return "decay";
  }
  return "";
}

std::string to_string(TauCoupling c) {
  switch (c) {
    case TauCoupling::h: return "h";
    case TauCoupling::h2: return "h2";
    case TauCoupling::fixed: return "fixed";
  }
  return "";
}

std::string to_string(ForcingKind f) {
  switch (f) {
    case ForcingKind::sinsep: return "sinsep";
    case ForcingKind::poly: return "poly";
    case ForcingKind::eigen: return "eigen";
    case ForcingKind::random: return "random";
    case ForcingKind::zero: return "zero";
  }
  return "";
}

std::string to_string(StartPolicy s) {
  switch (s) {
    case StartPolicy::zero: return "zero";
    case StartPolicy::projected_reference: return "projected-reference";
    case StartPolicy::eigenvector: return "eigenvector";
    case StartPolicy::random: return "random";
  }
  return "";
}

namespace {

void check_common(const ExperimentConfig& c) {
  if (c.degree < 1 || c.degree > 3) throw ConfigError(fmt::format("degree must be 1, 2 or 3, got {}", c.degree));
  if (c.n0 < 1) throw ConfigError(fmt::format("n0 must be at least 1, got {}", c.n0));
  if (c.domain == DomainTag::lshape && c.n0 % 2 != 0)
    throw ConfigError(fmt::format("the L-shape needs an even n0, got {}", c.n0));
  if (c.domain == DomainTag::custom) throw ConfigError("domain must be square or lshape");
  if (c.levels < 1 || c.levels > 8) throw ConfigError(fmt::format("levels must lie in [1, 8], got {}", c.levels));
  try {
    coefficient_from_name(c.coefficients);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (c.qs.empty()) throw ConfigError("q list is empty");
  for (double q : c.qs)
    if (!(q >= 1.0)) throw ConfigError(fmt::format("q must be >= 1, got {}", q));
}

}  // namespace

void ExperimentConfig::validate_experiment() const {
  check_common(*this);
  const std::string name = to_string(experiment);
  if (ks.empty()) throw ConfigError("k list is empty");
  for (int k : ks)
    if (k < 1 || k > 6) throw ConfigError(fmt::format("k must lie in 1..6, got {}", k));
  if (ps.empty()) throw ConfigError("p list is empty");
  for (double p : ps)
    if (!(p >= 1.0)) throw ConfigError(fmt::format("p must be >= 1, got {}", p));
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ConfigError(fmt::format("tau0 must be positive, got {}", tau0));
  if (!(final_time > 0.0) || !std::isfinite(final_time))
    throw ConfigError(fmt::format("final_time must be positive, got {}", final_time));
  if (reference_refinements < 0 || reference_refinements > 3)
    throw ConfigError("reference_refinements must lie in [0, 3]");
  const int min_levels = experiment == Experiment::linfty ? 1 : experiment == Experiment::decay ? 2 : 3;
  if (levels < min_levels)
    throw ConfigError(fmt::format("{} needs at least {} refinement levels, got {}", name, min_levels, levels));
  switch (experiment) {
    case Experiment::maxreg:
    case Experiment::equivalence:
    case Experiment::w1q:
      if (start != StartPolicy::zero)
        throw ConfigError(fmt::format("{} assumes zero starting values u_h^n = 0 for n < k; set start = zero", name));
      break;
    case Experiment::error:
    case Experiment::linfty:
      if (start != StartPolicy::zero && start != StartPolicy::projected_reference)
        throw ConfigError(fmt::format("{} needs start = zero or projected-reference", name));
      if (forcing != ForcingKind::sinsep && forcing != ForcingKind::poly && forcing != ForcingKind::zero)
        throw ConfigError(fmt::format("{} needs a space-time forcing: sinsep, poly or zero", name));
      break;
    case Experiment::decay:
      if (forcing != ForcingKind::zero) throw ConfigError("decay runs are homogeneous; set forcing = zero");
      if (start != StartPolicy::eigenvector && start != StartPolicy::random)
        throw ConfigError("decay needs a nonzero start: eigenvector or random");
      break;
  }
  if (experiment == Experiment::w1q) {
    if (domain != DomainTag::square)
      throw ConfigError("w1q requires a convex domain: the W^{1,q} estimate assumes a convex polygon, the L-shape is not");
    for (double q : qs)
      if (!(q > 1.0) || std::isinf(q)) throw ConfigError(fmt::format("w1q needs 1 < q < inf for the negative norm, got {}", q));
  }
  if (experiment == Experiment::linfty) {
    if (linfty_n0 < 1) throw ConfigError("linfty_n0 must be positive");
    if (linfty_doublings < 1 || linfty_doublings > 6) throw ConfigError("linfty_doublings must lie in [1, 6]");
    for (int k : ks)
      if (linfty_n0 < k) throw ConfigError(fmt::format("linfty_n0 = {} is smaller than k = {}", linfty_n0, k));
  }
}

void ExperimentConfig::validate_probe() const {
  check_common(*this);
  if (theta_pi.empty()) throw ConfigError("theta list is empty");
  for (double t : theta_pi)
    if (!(t > 0.0 && t < 0.5))
      throw ConfigError(fmt::format("theta must satisfy 0 < theta < pi/2 (sector Sigma_theta+pi/2), got {} pi", t));
  if (probe_radii < 2) throw ConfigError("probe_radii must be at least 2");
  if (probe_restarts < 1 || probe_iterations < 1) throw ConfigError("probe_restarts and probe_iterations must be positive");
  if (rbound_points < 0 || rbound_points > 64) throw ConfigError("rbound_points must lie in [0, 64]");
  if (rbound_trials < 1) throw ConfigError("rbound_trials must be positive");
}

std::vector<Level> build_levels(const ExperimentConfig& config) {
  const auto coeff = coefficient_from_name(config.coefficients);
  std::vector<Level> out;
  Mesh mesh = base_mesh(config);
  for (int l = 0; l < config.levels; ++l) {
    if (l > 0) mesh = refine_uniform(mesh);
    Level level;
    level.index = l;
    level.mesh = std::make_shared<Mesh>(mesh);
    auto space = std::make_shared<FESpace>(level.mesh, config.degree);
    level.pair = std::make_shared<AssembledPair>(assemble(space, coeff));
    level.h = mesh_size(*level.mesh);
    out.push_back(level);
  }
  return out;
}

double coupled_tau(const ExperimentConfig& config, double h0, double h) {
  switch (config.coupling) {
    case TauCoupling::h: return config.tau0 * (h / h0);
    case TauCoupling::h2: return config.tau0 * (h / h0) * (h / h0);
    case TauCoupling::fixed: return config.tau0;
  }
  return config.tau0;
}

int steps_for(const ExperimentConfig& config, double tau, int k) {
  return std::max(k, static_cast<int>(std::lround(config.final_time / tau)));
}

std::vector<CellPlan> plan_cells(const ExperimentConfig& config) {
  config.validate_experiment();
  const double h0 = mesh_size(base_mesh(config));
  const std::string name = to_string(config.experiment);
  std::vector<CellPlan> plan;
  if (config.experiment == Experiment::linfty) {
    const double h = h0 / std::pow(2.0, config.levels - 1);
    for (int i = 0; i <= config.linfty_doublings; ++i)
      for (int k : config.ks)
        for (double q : config.qs) {
          const int N = config.linfty_n0 << i;
          plan.push_back({name, config.levels - 1, h, config.final_time / N, N, k, kInfinity, q});
        }
    return plan;
  }
  const bool has_p = config.experiment != Experiment::decay;
  for (int l = 0; l < config.levels; ++l) {
    const double h = h0 / std::pow(2.0, l);
    const double tau = coupled_tau(config, h0, h);
    for (int k : config.ks)
      for (double p : has_p ? config.ps : std::vector<double>{kInfinity})
        for (double q : config.qs) plan.push_back({name, l, h, tau, steps_for(config, tau, k), k, p, q});
  }
  return plan;
}

bool ExperimentReport::all_pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.verdict == "pass"; });
}

ExperimentReport run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate_experiment();
  return Runner(config).run(jobs);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "experiment,level,h,tau,N,k,p,q,numerator,denominator,ratio,verdict\n";
  for (const auto& r : report.rows)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.experiment, r.level, format_number(r.h),
                       format_number(r.tau), r.N, r.k, format_number(r.p), format_number(r.q),
                       format_number(r.numerator), format_number(r.denominator), format_number(r.ratio), r.verdict);
}

void write_report_json(const ExperimentReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["tool"] = "mrlab";
  j["version"] = kVersion;
  j["seed"] = report.seed;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  nlohmann::ordered_json summary;
  j["verdict"] = verdict_summary(report.rows, summary);
  j["summary"] = summary;
  auto& issues = j["issues"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows)
    if (r.verdict != "pass")
      issues.push_back({{"experiment", r.experiment}, {"level", r.level}, {"k", r.k}, {"p", format_number(r.p)},
                        {"q", format_number(r.q)}, {"verdict", r.verdict}, {"note", r.note}});
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------- probe

bool ProbeReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const ProbeVerdict& v) { return v.pass; });
}

ProbeReport run_probe(const ExperimentConfig& config, int jobs) {
  config.validate_probe();
  const std::vector<Level> levels = build_levels(config);
  std::vector<ExtremeEigenpairs> extremes(levels.size());
  std::vector<std::optional<Eigensystem>> eigs(levels.size());
  const bool has_q2 = std::count(config.qs.begin(), config.qs.end(), 2.0) > 0;
  parallel_for(levels.size(), jobs, [&](std::size_t i) {
    extremes[i] = extreme_eigenpairs(*levels[i].pair);
    if (has_q2 && levels[i].pair->num_dofs() <= 2000) eigs[i] = compute_eigensystem(*levels[i].pair);
  });

  struct Task {
    std::size_t level;
    double theta;
    double q;
  };
  std::vector<Task> tasks;
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (double t : config.theta_pi)
      for (double q : config.qs) tasks.push_back({l, t * kPi, q});

  NormEstimateOptions opts;
  opts.restarts = config.probe_restarts;
  opts.iterations = config.probe_iterations;
  opts.seed = config.seed;
  std::vector<std::vector<ProbeRow>> rows(tasks.size());
  std::vector<std::optional<RBoundRecord>> rb(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const auto sample =
        SectorSample::standard(t.theta, extremes[t.level].lambda_min, extremes[t.level].lambda_max, config.probe_radii);
    const auto sweep = sector_sweep(levels[t.level].pair, t.q, sample, opts);
    for (const auto& s : sweep) {
      ProbeRow r;
      r.theta = t.theta;
      r.q = t.q;
      r.z = s.z;
      r.estimate = s.estimate;
      r.level = static_cast<int>(t.level);
      r.q2_bound = s.q2_bound;
      if (t.q == 2.0 && eigs[t.level]) r.eigen_oracle = resolvent_norm_q2(eigs[t.level]->lambdas, s.z);
      rows[i].push_back(r);
    }
    if (config.rbound_points > 0 && t.q > 1.0 && std::isfinite(t.q)) {
      const std::size_t P = sample.points.size();
      const auto m = static_cast<std::size_t>(config.rbound_points);
      std::vector<LinearOperator> ops;
      for (std::size_t j = 0; j < m; ++j)
        ops.push_back(Resolvent(levels[t.level].pair, sample.points[j * P / m]).as_operator());
      RBoundOptions ro;
      ro.trials = config.rbound_trials;
      ro.seed = config.seed;
      rb[i] = RBoundRecord{t.theta, t.q, static_cast<int>(t.level), config.rbound_points,
                           rbound_sample(levels[t.level].pair->space(), ops, t.q, ro).estimate};
    }
  });

  ProbeReport report;
  report.config = config_echo(config);
  report.seed = config.seed;
  for (auto& r : rows) report.rows.insert(report.rows.end(), r.begin(), r.end());
  for (auto& r : rb)
    if (r) report.rbounds.push_back(*r);

  std::map<std::tuple<double, double, int>, double> envelope;
  std::map<std::tuple<double, int>, double> q2_excess;
  for (const auto& r : report.rows) {
    auto& e = envelope[{r.theta, r.q, r.level}];
    e = std::max(e, r.estimate);
    if (r.q == 2.0) {
      auto it = q2_excess.try_emplace({r.theta, r.level}, -kInfinity).first;
      it->second = std::max(it->second, r.estimate - r.q2_bound);
    }
  }
  for (const auto& [key, excess] : q2_excess)
    report.verdicts.push_back({"q2_bound", std::get<0>(key), 2.0, std::get<1>(key), excess, limits::probe_q2_slack,
                               excess <= limits::probe_q2_slack});
  if (levels.size() >= 2) {
    const int fine = static_cast<int>(levels.size()) - 1;
    for (double t : config.theta_pi)
      for (double q : config.qs) {
        const double a = envelope[{t * kPi, q, fine - 1}];
        const double b = envelope[{t * kPi, q, fine}];
        const double delta = std::abs(b / a - 1.0);
        report.verdicts.push_back({"uniformity", t * kPi, q, fine, delta, limits::probe_uniformity,
                                   delta <= limits::probe_uniformity});
      }
  }
  return report;
}

void write_probe_csv(const ProbeReport& report, std::ostream& out) {
  out << "theta,q,re_z,im_z,norm_estimate,mesh_level\n";
  for (const auto& r : report.rows)
    out << fmt::format("{},{},{},{},{},{}\n", format_number(r.theta), format_number(r.q), format_number(r.z.real()),
                       format_number(r.z.imag()), format_number(r.estimate), r.level);
}

void write_probe_json(const ProbeReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["tool"] = "mrlab";
  j["version"] = kVersion;
  j["seed"] = report.seed;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  j["verdict"] = report.all_pass() ? "pass" : "fail";
  auto& verdicts = j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : report.verdicts)
    verdicts.push_back({{"check", v.name}, {"theta", format_number(v.theta)}, {"q", format_number(v.q)},
                        {"level", v.level}, {"value", format_number(v.value)}, {"limit", format_number(v.limit)},
                        {"verdict", v.pass ? "pass" : "fail"}});
  // Informational: deviation of the q = 2 estimates from the eigenvalue formula.
  auto& oracle = j["eigen_oracle"] = nlohmann::ordered_json::array();
  std::map<std::tuple<double, int>, double> worst;
  for (const auto& r : report.rows)
    if (!std::isnan(r.eigen_oracle)) {
      auto& w = worst[{r.theta, r.level}];
      w = std::max(w, std::abs(r.estimate - r.eigen_oracle) / r.eigen_oracle);
    }
  for (const auto& [key, w] : worst)
    oracle.push_back({{"theta", format_number(std::get<0>(key))}, {"level", std::get<1>(key)},
                      {"max_relative_delta", format_number(w)}});
  auto& rbs = j["rbound"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rbounds)
    rbs.push_back({{"theta", format_number(r.theta)}, {"q", format_number(r.q)}, {"level", r.level},
                   {"points", r.points}, {"estimate", format_number(r.estimate)}});
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------- oracles

std::vector<double> scalar_bdf(const BdfScheme& scheme, double lambda, double tau, const std::vector<double>& s,
                               const std::vector<double>& starts) {
  const int k = scheme.k;
  if (static_cast<int>(starts.size()) != k) throw std::invalid_argument("scalar_bdf needs k starting values");
  const std::vector<double> delta = scheme.delta_values();
  std::vector<double> c(starts);
  for (std::size_t n = static_cast<std::size_t>(k); n < s.size(); ++n) {
    double rhs = tau * s[n];
    for (int j = 1; j <= k; ++j) rhs -= delta[static_cast<std::size_t>(j)] * c[n - static_cast<std::size_t>(j)];
    c.push_back(rhs / (delta[0] + tau * lambda));
  }
  return c;
}

double modal_maxreg_ratio(const BdfScheme& scheme, double lambda, double tau, const std::vector<double>& s, double p) {
  const std::vector<double> c = scalar_bdf(scheme, lambda, tau, s, std::vector<double>(static_cast<std::size_t>(scheme.k), 0.0));
  std::vector<double> dc, cc, ss;
  for (std::size_t n = static_cast<std::size_t>(scheme.k); n < s.size(); ++n) {
    dc.push_back(std::abs(c[n] - c[n - 1]) / tau);
    cc.push_back(lambda * std::abs(c[n]));
    ss.push_back(std::abs(s[n]));
  }
  return (lp_time_norm(dc, p, tau) + lp_time_norm(cc, p, tau)) / lp_time_norm(ss, p, tau);
}

double fitted_decay_rate(const std::vector<double>& values, double tau) {
  std::size_t end = values.size();
  for (std::size_t n = 0; n < values.size(); ++n)
    if (!(values[n] > 1e-280)) {
      end = n;
      break;
    }
  const std::size_t begin = end / 2;
  if (end - begin < 2) return kNaN;
  double st = 0, sy = 0, stt = 0, sty = 0;
  const auto m = static_cast<double>(end - begin);
  for (std::size_t n = begin; n < end; ++n) {
    const double t = static_cast<double>(n) * tau;
    const double y = std::log(values[n]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  return -(m * sty - st * sy) / (m * stt - st * st);
}

}  // namespace mrlab
