#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "mrlab/config.hpp"
#include "mrlab/harness.hpp"

using namespace mrlab;

namespace {

ExperimentConfig small(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.n0 = 2;
  c.levels = 3;
  c.ks = {1, 2};
  c.ps = {2.0};
  c.qs = {2.0};
  c.tau0 = 0.1;
  return c;
}

std::vector<const ReportRow*> rows_named(const ExperimentReport& r, const std::string& name) {
  std::vector<const ReportRow*> out;
  for (const auto& row : r.rows)
    if (row.experiment == name) out.push_back(&row);
  return out;
}

std::string csv_of(const ExperimentReport& r) {
  std::ostringstream s;
  write_report_csv(r, s);
  return s.str();
}

std::string json_of(const ExperimentReport& r) {
  std::ostringstream s;
  write_report_json(r, s);
  return s.str();
}

// lp norm over n = k..N of a scalar sequence, in long double.
long double lp_tail(const std::vector<long double>& v, std::size_t k, double p, double tau) {
  long double sum = 0, mx = 0;
  for (std::size_t n = k; n < v.size(); ++n) {
    sum += std::pow(std::abs(v[n]), static_cast<long double>(p));
    mx = std::max(mx, std::abs(v[n]));
  }
  return std::isinf(p) ? mx : std::pow(tau * sum, 1.0L / p);
}

}  // namespace

TEST_CASE("scalar recurrence reproduces polynomials of degree k exactly") {
  // c(t) = t^k solves c' + lambda c = k t^{k-1} + lambda t^k, and BDF-k is exact on degree k.
  const double tau = 0.05, lambda = 3.0;
  const int N = 40;
  for (int k = 1; k <= 6; ++k) {
    const BdfScheme scheme = bdf_coefficients(k);
    std::vector<double> s(N + 1), starts;
    for (int n = 0; n <= N; ++n) {
      const double t = n * tau;
      s[static_cast<std::size_t>(n)] = k * std::pow(t, k - 1) + lambda * std::pow(t, k);
    }
    for (int j = 0; j < k; ++j) starts.push_back(std::pow(j * tau, k));
    const auto c = scalar_bdf(scheme, lambda, tau, s, starts);
    REQUIRE(c.size() == static_cast<std::size_t>(N + 1));
    for (int n = 0; n <= N; ++n) CHECK(c[static_cast<std::size_t>(n)] == doctest::Approx(std::pow(n * tau, k)).epsilon(1e-9));
  }
  CHECK_THROWS(scalar_bdf(bdf_coefficients(3), 1.0, 0.1, std::vector<double>(5, 1.0), {0.0}));
}

TEST_CASE("scalar recurrence for k = 1 is backward Euler") {
  const double tau = 0.1, lambda = 7.0;
  std::vector<double> s{0.0, 1.0, -2.0, 0.5, 3.0};
  const auto c = scalar_bdf(bdf_coefficients(1), lambda, tau, s, {0.25});
  double prev = 0.25;
  for (std::size_t n = 1; n < s.size(); ++n) {
    const double expect = (prev + tau * s[n]) / (1.0 + tau * lambda);
    CHECK(c[n] == doctest::Approx(expect).epsilon(1e-15));
    prev = expect;
  }
}

TEST_CASE("modal maximal regularity ratio against an extended-precision recomputation") {
  const double tau = 0.02, lambda = 45.0;
  const int N = 50;
  std::vector<double> s(N + 1);
  for (int n = 0; n <= N; ++n) s[static_cast<std::size_t>(n)] = 1.0 + std::sin(2.0 * std::numbers::pi * n * tau);
  for (int k : {1, 3, 6}) {
    const BdfScheme scheme = bdf_coefficients(k);
    std::vector<long double> c(static_cast<std::size_t>(k), 0.0L);
    std::vector<long double> d;
    for (const auto& r : scheme.delta)
      d.push_back(static_cast<long double>(r.numerator()) / static_cast<long double>(r.denominator()));
    for (int n = k; n <= N; ++n) {
      long double rhs = tau * static_cast<long double>(s[static_cast<std::size_t>(n)]);
      for (int j = 1; j <= k; ++j) rhs -= d[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(n - j)];
      c.push_back(rhs / (d[0] + tau * lambda));
    }
    std::vector<long double> dc(c.size()), lc(c.size()), ls(c.size());
    for (std::size_t n = 1; n < c.size(); ++n) {
      dc[n] = (c[n] - c[n - 1]) / tau;
      lc[n] = lambda * c[n];
      ls[n] = s[n];
    }
    for (double p : {2.0, 4.0, std::numeric_limits<double>::infinity()}) {
      const auto ku = static_cast<std::size_t>(k);
      const long double expect = (lp_tail(dc, ku, p, tau) + lp_tail(lc, ku, p, tau)) / lp_tail(ls, ku, p, tau);
      CHECK(modal_maxreg_ratio(scheme, lambda, tau, s, p) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
    }
  }
}

TEST_CASE("fitted decay rate of exact exponentials") {
  std::vector<double> v;
  for (int n = 0; n < 200; ++n) v.push_back(5.0 * std::exp(-3.5 * n * 0.01));
  CHECK(fitted_decay_rate(v, 0.01) == doctest::Approx(3.5).epsilon(1e-12));
  // Values below the floor truncate the series before the fit.
  std::vector<double> w;
  for (int n = 0; n < 100; ++n) w.push_back(std::exp(-2.0 * n));
  for (int n = 0; n < 100; ++n) w.push_back(0.0);
  CHECK(fitted_decay_rate(w, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isnan(fitted_decay_rate({1.0, 0.0}, 1.0)));
}

TEST_CASE("format_number") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("maxreg oracle cells match the scalar recurrence") {
  auto c = small(Experiment::maxreg);
  c.ps = {2.0, 4.0};
  const auto report = run_experiment(c, 1);
  const auto oracle = rows_named(report, "maxreg_oracle");
  REQUIRE(oracle.size() == 3 * 2);
  for (const auto* r : oracle) {
    CHECK(r->verdict == "pass");
    CHECK(std::abs(r->ratio - 1.0) <= limits::oracle);
  }
  const auto main = rows_named(report, "maxreg");
  REQUIRE(main.size() == 3 * 2 * 2);
  for (const auto* r : main) {
    CHECK(std::isfinite(r->ratio));
    CHECK(r->ratio > 0.0);
  }
}

TEST_CASE("zero forcing yields degenerate rows and a failing report") {
  auto c = small(Experiment::maxreg);
  c.forcing = ForcingKind::zero;
  c.oracle_cells = false;
  const auto report = run_experiment(c, 1);
  REQUIRE_FALSE(report.rows.empty());
  for (const auto& r : report.rows) CHECK(r.verdict == "degenerate");
  CHECK_FALSE(report.all_pass());
}

TEST_CASE("ratios are invariant under scaling of the data") {
  for (Experiment e : {Experiment::maxreg, Experiment::equivalence, Experiment::w1q}) {
    auto c = small(e);
    c.homogeneity_check = true;
    c.oracle_cells = false;
    const auto report = run_experiment(c, 1);
    const auto h = rows_named(report, to_string(e) + "_homogeneity");
    REQUIRE_FALSE(h.empty());
    for (const auto* r : h) {
      CHECK(r->verdict == "pass");
      CHECK(r->ratio == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("equivalence ratio is exactly one for k = 1") {
  auto c = small(Experiment::equivalence);
  c.ks = {1};
  const auto report = run_experiment(c, 1);
  for (const auto* r : rows_named(report, "equivalence")) CHECK(r->ratio == 1.0);
}

TEST_CASE("error against a reference on the same space vanishes") {
  // Then u_h = P_h u = R_h u, so both sides are rounding noise.
  auto c = small(Experiment::error);
  c.reference_refinements = 0;
  c.start = StartPolicy::projected_reference;
  const auto report = run_experiment(c, 1);
  for (const auto* r : rows_named(report, "error")) {
    CHECK(r->numerator <= 1e-13);
    CHECK(r->denominator <= 1e-13);
  }
}

TEST_CASE("error experiment adds the observed Ritz order for P1 on the square") {
  auto c = small(Experiment::error);
  c.n0 = 4;
  c.ks = {1};
  c.start = StartPolicy::projected_reference;
  const auto report = run_experiment(c, 1);
  const auto order = rows_named(report, "error_ritz_order");
  REQUIRE(order.size() == 1);
  CHECK(order[0]->ratio > 1.5);
  CHECK(order[0]->ratio < 2.5);
  c.domain = DomainTag::lshape;
  CHECK(rows_named(run_experiment(c, 1), "error_ritz_order").empty());
}

TEST_CASE("linfty runs double N on the finest level") {
  auto c = small(Experiment::linfty);
  c.levels = 1;
  c.ks = {2};
  c.qs = {2.0, std::numeric_limits<double>::infinity()};
  c.linfty_n0 = 5;
  c.start = StartPolicy::projected_reference;
  const auto report = run_experiment(c, 1);
  std::set<int> Ns;
  for (const auto* r : rows_named(report, "linfty")) {
    Ns.insert(r->N);
    CHECK(std::isinf(r->p));
    CHECK(r->tau == doctest::Approx(c.final_time / r->N));
  }
  CHECK(Ns == std::set<int>{5, 10, 20});
}

TEST_CASE("decay oracle matches the backward Euler rate of the first mode") {
  auto c = small(Experiment::decay);
  c.levels = 2;
  c.forcing = ForcingKind::zero;
  c.start = StartPolicy::eigenvector;
  c.coupling = TauCoupling::fixed;
  c.tau0 = 0.01;
  const auto report = run_experiment(c, 1);
  const auto oracle = rows_named(report, "decay_oracle");
  REQUIRE_FALSE(oracle.empty());
  for (const auto* r : oracle) CHECK(std::abs(r->ratio - 1.0) <= limits::decay_oracle);
  for (const auto* r : rows_named(report, "decay")) CHECK(r->numerator > 0.0);
}

TEST_CASE("hypotheses of the estimates are enforced") {
  auto w = small(Experiment::w1q);
  w.domain = DomainTag::lshape;
  CHECK_THROWS_AS(run_experiment(w, 1), ConfigError);
  w.domain = DomainTag::square;
  w.qs = {std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(w.validate_experiment(), ConfigError);

  auto m = small(Experiment::maxreg);
  m.start = StartPolicy::random;
  CHECK_THROWS_AS(m.validate_experiment(), ConfigError);
  m.start = StartPolicy::zero;
  m.levels = 2;
  CHECK_THROWS_AS(m.validate_experiment(), ConfigError);

  auto d = small(Experiment::decay);
  d.start = StartPolicy::eigenvector;
  CHECK_THROWS_AS(d.validate_experiment(), ConfigError);

  auto e = small(Experiment::error);
  e.forcing = ForcingKind::random;
  CHECK_THROWS_AS(e.validate_experiment(), ConfigError);

  auto l = small(Experiment::maxreg);
  l.domain = DomainTag::lshape;
  l.n0 = 3;
  CHECK_THROWS_AS(l.validate_experiment(), ConfigError);

  auto p = small(Experiment::maxreg);
  p.theta_pi = {0.5};
  CHECK_THROWS_AS(p.validate_probe(), ConfigError);
}

TEST_CASE("dry-run plan matches the executed cells") {
  for (Experiment e : {Experiment::maxreg, Experiment::w1q}) {
    auto c = small(e);
    c.ps = {2.0, 4.0};
    c.qs = {2.0, 4.0};
    const auto plan = plan_cells(c);
    const auto report = run_experiment(c, 1);
    const auto main = rows_named(report, to_string(e));
    REQUIRE(plan.size() == main.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
      CHECK(plan[i].level == main[i]->level);
      CHECK(plan[i].k == main[i]->k);
      CHECK(plan[i].p == main[i]->p);
      CHECK(plan[i].q == main[i]->q);
      CHECK(plan[i].N == main[i]->N);
      CHECK(plan[i].tau == doctest::Approx(main[i]->tau).epsilon(1e-12));
      CHECK(plan[i].h == doctest::Approx(main[i]->h).epsilon(1e-12));
    }
  }
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
  auto c = small(Experiment::maxreg);
  c.forcing = ForcingKind::random;
  c.qs = {2.0, 4.0};
  const auto a = run_experiment(c, 1);
  const auto b = run_experiment(c, 1);
  const auto t = run_experiment(c, 3);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(json_of(a) == json_of(b));
  CHECK(csv_of(a) == csv_of(t));
  CHECK(json_of(a) == json_of(t));
  c.seed += 1;
  CHECK(csv_of(run_experiment(c, 1)) != csv_of(a));
}

TEST_CASE("report formats") {
  auto c = small(Experiment::maxreg);
  const auto report = run_experiment(c, 1);
  std::istringstream csv(csv_of(report));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "experiment,level,h,tau,N,k,p,q,numerator,denominator,ratio,verdict");
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line);) {
    ++lines;
    CHECK(std::count(line.begin(), line.end(), ',') == 11);
  }
  CHECK(lines == report.rows.size());

  const auto j = nlohmann::json::parse(json_of(report));
  CHECK(j.at("tool") == "mrlab");
  CHECK(j.at("version") == kVersion);
  CHECK(j.at("seed") == c.seed);
  CHECK(j.at("config").at("experiment") == "maxreg");
  CHECK(j.at("config").size() == config_schema().size());
  CHECK(j.at("verdict") == (report.all_pass() ? "pass" : "fail"));
}

TEST_CASE("config parser") {
  const std::string text =
      "# comment line\n"
      "experiment = error   # trailing comment\n"
      "domain=lshape\n"
      "\n"
      "n0 = 6\n"
      "k = 2, 3\n"
      "p = 2, inf\n"
      "q = 4\n"
      "tau_coupling = h2\n"
      "start = projected-reference\n"
      "oracle_cells = false\n"
      "seed = 7\n";
  const auto c = parse_config(text, "t.cfg");
  CHECK(c.experiment == Experiment::error);
  CHECK(c.domain == DomainTag::lshape);
  CHECK(c.n0 == 6);
  CHECK(c.ks == std::vector<int>{2, 3});
  CHECK(c.ps.size() == 2);
  CHECK(std::isinf(c.ps[1]));
  CHECK(c.qs == std::vector<double>{4.0});
  CHECK(c.coupling == TauCoupling::h2);
  CHECK(c.start == StartPolicy::projected_reference);
  CHECK_FALSE(c.oracle_cells);
  CHECK(c.seed == 7U);
  CHECK(c.levels == ExperimentConfig{}.levels);

  auto message = [](const std::string& t) {
    try {
      parse_config(t, "t.cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("n0 = 4\n\nbogus = 1\n").find("t.cfg:3:") == 0);
  CHECK(message("n0 = 4\n\nbogus = 1\n").find("bogus") != std::string::npos);
  CHECK(message("n0 = 4\nn0 = 5\n").find("t.cfg:2:") == 0);
  CHECK(message("n0 4\n").find("t.cfg:1:") == 0);
  CHECK(message("n0 =\n").find("t.cfg:1:") == 0);
  CHECK(message("n0 = four\n").find("t.cfg:1:") == 0);
  CHECK(message("degree = 2.5\n").find("t.cfg:1:") == 0);
  CHECK(message("p = 2,,4\n").find("t.cfg:1:") == 0);
  CHECK(message("oracle_cells = maybe\n").find("t.cfg:1:") == 0);
  CHECK(message("experiment = heat\n").find("t.cfg:1:") == 0);
  CHECK(message("tau0 = nan\n").find("t.cfg:1:") == 0);
  CHECK(message("seed = -1\n").find("t.cfg:1:") == 0);
  CHECK(message("seed = 18446744073709551616\n").find("t.cfg:1:") == 0);
  CHECK_THROWS_AS(load_config("/nonexistent/dir/x.cfg"), ConfigError);
}

TEST_CASE("config help documents exactly the accepted keys") {
  const std::string help = config_help();
  std::set<std::string> names;
  for (const auto& key : config_schema()) {
    CHECK(names.insert(key.name).second);
    CHECK(help.find("  " + key.name + " ") != std::string::npos);
    CHECK_FALSE(key.doc.empty());
    // Every documented key is accepted with its documented default.
    CHECK_NOTHROW(parse_config(key.name + " = " + key.default_value + "\n"));
  }
  const auto echo = config_echo(ExperimentConfig{});
  REQUIRE(echo.size() == names.size());
  for (const auto& [k, v] : echo) CHECK(names.count(k) == 1);
}

TEST_CASE("config echo round-trips through the parser") {
  ExperimentConfig c;
  c.experiment = Experiment::linfty;
  c.ps = {1.5, std::numeric_limits<double>::infinity()};
  c.qs = {2.0, 3.25};
  c.tau0 = 0.0123456789;
  c.seed = 18446744073709551615ULL;
  c.theta_pi = {0.2};
  std::string text;
  for (const auto& [k, v] : config_echo(c)) text += k + " = " + v + "\n";
  const auto back = parse_config(text);
  CHECK(config_echo(back) == config_echo(c));
  CHECK(back.tau0 == c.tau0);
  CHECK(back.seed == c.seed);
}

TEST_CASE("probe on a small mesh") {
  ExperimentConfig c;
  c.n0 = 2;
  c.levels = 2;
  c.theta_pi = {0.3};
  c.qs = {2.0, 4.0};
  c.probe_radii = 4;
  c.probe_restarts = 2;
  c.probe_iterations = 10;
  c.rbound_points = 2;
  c.rbound_trials = 5;
  const auto report = run_probe(c, 1);
  CHECK(report.rows.size() == 2U * 2U * 3U * 4U);
  for (const auto& r : report.rows) {
    CHECK(r.estimate > 0.0);
    if (r.q == 2.0) {
      REQUIRE(std::isfinite(r.eigen_oracle));
      CHECK(std::abs(r.estimate - r.eigen_oracle) <= 1e-6 * r.eigen_oracle);
      CHECK(r.estimate <= r.q2_bound + limits::probe_q2_slack);
    }
  }
  bool has_q2 = false, has_uniformity = false;
  for (const auto& v : report.verdicts) {
    has_q2 = has_q2 || v.name == "q2_bound";
    has_uniformity = has_uniformity || v.name == "uniformity";
  }
  CHECK(has_q2);
  CHECK(has_uniformity);
  CHECK(report.rbounds.size() == 2U * 2U);
  for (const auto& rb : report.rbounds) CHECK(rb.points == 2);

  std::ostringstream a, b;
  write_probe_csv(report, a);
  write_probe_csv(run_probe(c, 2), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("theta,q,re_z,im_z,norm_estimate,mesh_level\n", 0) == 0);
}
