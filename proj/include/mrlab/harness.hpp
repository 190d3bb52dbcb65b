#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrlab/bdf.hpp"
#include "mrlab/norms.hpp"
#include "mrlab/spectral.hpp"

namespace mrlab {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { maxreg, equivalence, error, linfty, w1q, decay };
enum class TauCoupling { h, h2, fixed };
enum class ForcingKind { sinsep, poly, eigen, random, zero };
enum class StartPolicy { zero, projected_reference, eigenvector, random };

/// Acceptance thresholds of the experiment verdicts.
namespace limits {
inline constexpr double saturation = 1.15;
inline constexpr double oracle = 1e-6;
inline constexpr double homogeneity = 1e-12;
inline constexpr double equivalence_low = 0.1;
inline constexpr double equivalence_high = 10.0;
inline constexpr double equivalence_drift = 0.20;
inline constexpr double error_growth = 1.15;
inline constexpr double ritz_order = 1.9;
inline constexpr double linfty_growth = 1.15;
inline constexpr double w1q_drift = 0.15;
inline constexpr double decay_drift = 0.10;
inline constexpr double decay_oracle = 0.01;
inline constexpr double probe_uniformity = 0.10;
inline constexpr double probe_q2_slack = 1e-8;
}  // namespace limits

/// One experiment (or probe) as read from a config file.
struct ExperimentConfig {
  Experiment experiment = Experiment::maxreg;
  DomainTag domain = DomainTag::square;
  std::string coefficients = "anisotropic";
  int degree = 1;
  int n0 = 8;
  int levels = 3;
  std::vector<int> ks{1, 2, 3, 4, 5, 6};
  std::vector<double> ps{2.0, 4.0};
  std::vector<double> qs{2.0, 4.0};
  double tau0 = 0.1;
  TauCoupling coupling = TauCoupling::h;
  double final_time = 1.0;
  ForcingKind forcing = ForcingKind::sinsep;
  StartPolicy start = StartPolicy::zero;
  std::uint64_t seed = 20240601;
  bool oracle_cells = true;
  bool homogeneity_check = false;
  int reference_refinements = 2;
  int linfty_n0 = 10;
  int linfty_doublings = 2;

  std::vector<double> theta_pi{0.1, 0.3, 0.45};
  int probe_radii = 25;
  int probe_restarts = 5;
  int probe_iterations = 50;
  int rbound_points = 0;
  int rbound_trials = 200;

  /// Throws ConfigError for inconsistent settings, including hypotheses of
  /// the estimate under test (zero starts, convex domain, exponent ranges).
  void validate_experiment() const;
  void validate_probe() const;
};

std::string to_string(Experiment e);
std::string to_string(TauCoupling c);
std::string to_string(ForcingKind f);
std::string to_string(StartPolicy s);

/// One mesh level of a refinement study.
struct Level {
  int index = 0;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const AssembledPair> pair;
  double h = 0.0;
};

/// Meshes n0 refined 0..levels-1 times with assembled pairs.
std::vector<Level> build_levels(const ExperimentConfig& config);

/// tau0 (h / h0)^s with s = 1, 2 or 0 for the three couplings.
double coupled_tau(const ExperimentConfig& config, double h0, double h);
/// round(final_time / tau), at least k.
int steps_for(const ExperimentConfig& config, double tau, int k);

struct CellPlan {
  std::string experiment;
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  int N = 0;
  int k = 1;
  double p = 2.0;
  double q = 2.0;
};

/// The cell grid of an experiment, computed without assembling or solving.
std::vector<CellPlan> plan_cells(const ExperimentConfig& config);

struct ReportRow {
  std::string experiment;
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  int N = 0;
  int k = 1;
  double p = 2.0;
  double q = 2.0;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  /// pass | fail | degenerate | error
  std::string verdict;
  std::string note;
  /// Auxiliary measurement kept in memory only: the l2(L2) Ritz term of the two finest
  /// error levels, both on the finest time grid.
  double aux = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;

  bool all_pass() const;
};

/// Runs every cell on a pool of `jobs` threads and merges the rows in cell order.
ExperimentReport run_experiment(const ExperimentConfig& config, int jobs = 1);

/// experiment,level,h,tau,N,k,p,q,numerator,denominator,ratio,verdict
void write_report_csv(const ExperimentReport& report, std::ostream& out);
/// Config echo, seed, version and verdict summary.
void write_report_json(const ExperimentReport& report, std::ostream& out);

struct ProbeRow {
  double theta = 0.0;
  double q = 2.0;
  Complex z;
  double estimate = 0.0;
  int level = 0;
  double q2_bound = 0.0;
  /// max_j |z| / |z + lambda_j| for q = 2 when the eigensystem is available, else NaN.
  double eigen_oracle = std::numeric_limits<double>::quiet_NaN();
};

struct ProbeVerdict {
  std::string name;
  double theta = 0.0;
  double q = 2.0;
  int level = 0;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct RBoundRecord {
  double theta = 0.0;
  double q = 2.0;
  int level = 0;
  int points = 0;
  double estimate = 0.0;
};

struct ProbeReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  std::vector<ProbeRow> rows;
  std::vector<ProbeVerdict> verdicts;
  std::vector<RBoundRecord> rbounds;

  bool all_pass() const;
};

/// Sector sweeps per (level, theta, q), the q = 2 bound check, the envelope
/// change between the two finest levels and optional sampled R-bounds.
ProbeReport run_probe(const ExperimentConfig& config, int jobs = 1);

/// theta,q,re_z,im_z,norm_estimate,mesh_level
void write_probe_csv(const ProbeReport& report, std::ostream& out);
void write_probe_json(const ProbeReport& report, std::ostream& out);

/// Scalar BDF recurrence (delta_0 + tau lambda) c_n = tau s_n - sum_{j>=1} delta_j c_{n-j}
/// for n = k..N, with c_0..c_{k-1} = starts; s is indexed by n.
std::vector<double> scalar_bdf(const BdfScheme& scheme, double lambda, double tau, const std::vector<double>& s,
                               const std::vector<double>& starts);

/// (||d_tau c||_{l^p} + lambda ||c||_{l^p}) / ||s||_{l^p} over n = k..N, the
/// maximal regularity ratio of the forcing s(t_n) phi for an eigenpair (lambda, phi).
double modal_maxreg_ratio(const BdfScheme& scheme, double lambda, double tau, const std::vector<double>& s, double p);

/// Least-squares slope of -log(values[n]) against t_n over the tail half,
/// truncated at the first value below 1e-280.
double fitted_decay_rate(const std::vector<double>& values, double tau);

/// Writes a double with 17 significant digits, "inf" or "nan".
std::string format_number(double v);

}  // namespace mrlab
