#include "mrlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace mrlab {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Entry {
  std::string name;
  std::string type;
  std::string doc;
  Setter set;
  Getter get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) throw ConfigError("empty entry in list");
    out.push_back(t);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

long long parse_integer(const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(fmt::format("expected an integer, got '{}'", text));
  return v;
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ConfigError(fmt::format("expected an integer in [0, 2^64), got '{}'", text));
  return v;
}

int parse_int(const std::string& text) {
  const long long v = parse_integer(text);
  if (v < -1000000000LL || v > 1000000000LL) throw ConfigError(fmt::format("integer out of range: {}", text));
  return static_cast<int>(v);
}

double parse_real(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("expected a finite number, got '{}'", text));
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(fmt::format("expected true or false, got '{}'", text));
}

double parse_exp(const std::string& text) {
  try {
    return parse_exponent(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_reals(const std::vector<double>& v, bool exponents) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + (exponents ? format_exponent(v[i]) : fmt::format("{}", v[i]));
  return s;
}

template <class E>
E parse_choice(const std::string& text, std::initializer_list<E> values) {
  std::string options;
  for (E v : values) {
    if (to_string(v) == text) return v;
    options += (options.empty() ? "" : ", ") + to_string(v);
  }
  throw ConfigError(fmt::format("expected one of {}, got '{}'", options, text));
}

const std::vector<Entry>& entries() {
  using C = ExperimentConfig;
  static const std::vector<Entry> list = {
      {"experiment", "maxreg|equivalence|error|linfty|w1q|decay",
       "Experiment run by `run`; ignored by `probe`.",
       [](C& c, const std::string& v) {
         c.experiment = parse_choice(v, {Experiment::maxreg, Experiment::equivalence, Experiment::error,
                                         Experiment::linfty, Experiment::w1q, Experiment::decay});
       },
       [](const C& c) { return to_string(c.experiment); }},
      {"domain", "square|lshape", "Unit square or the L-shape [0,1]^2 minus [1/2,1]^2.",
       [](C& c, const std::string& v) {
         if (v == "square") c.domain = DomainTag::square;
         else if (v == "lshape") c.domain = DomainTag::lshape;
         else throw ConfigError(fmt::format("expected square or lshape, got '{}'", v));
       },
       [](const C& c) { return std::string(to_string(c.domain)); }},
      {"coefficients", "identity|anisotropic|rough", "Diffusion coefficient field a_ij.",
       [](C& c, const std::string& v) { c.coefficients = v; }, [](const C& c) { return c.coefficients; }},
      {"degree", "int", "Polynomial degree r of the Lagrange elements (1..3).",
       [](C& c, const std::string& v) { c.degree = parse_int(v); }, [](const C& c) { return std::to_string(c.degree); }},
      {"n0", "int", "Subdivisions per side of the coarsest mesh (even for the L-shape).",
       [](C& c, const std::string& v) { c.n0 = parse_int(v); }, [](const C& c) { return std::to_string(c.n0); }},
      {"levels", "int", "Number of mesh levels; level l is n0 refined l times.",
       [](C& c, const std::string& v) { c.levels = parse_int(v); }, [](const C& c) { return std::to_string(c.levels); }},
      {"k", "int list", "BDF step numbers, each in 1..6.",
       [](C& c, const std::string& v) {
         c.ks.clear();
         for (const auto& s : split_list(v)) c.ks.push_back(parse_int(s));
       },
       [](const C& c) { return join_ints(c.ks); }},
      {"p", "exponent list", "Temporal exponents p >= 1 or inf.",
       [](C& c, const std::string& v) {
         c.ps.clear();
         for (const auto& s : split_list(v)) c.ps.push_back(parse_exp(s));
       },
       [](const C& c) { return join_reals(c.ps, true); }},
      {"q", "exponent list", "Spatial exponents q >= 1 or inf.",
       [](C& c, const std::string& v) {
         c.qs.clear();
         for (const auto& s : split_list(v)) c.qs.push_back(parse_exp(s));
       },
       [](const C& c) { return join_reals(c.qs, true); }},
      {"tau0", "real", "Time step on the coarsest level.",
       [](C& c, const std::string& v) { c.tau0 = parse_real(v); }, [](const C& c) { return fmt::format("{}", c.tau0); }},
      {"tau_coupling", "h|h2|fixed", "Time step rule: tau0 (h/h0), tau0 (h/h0)^2 or tau0.",
       [](C& c, const std::string& v) {
         c.coupling = parse_choice(v, {TauCoupling::h, TauCoupling::h2, TauCoupling::fixed});
       },
       [](const C& c) { return to_string(c.coupling); }},
      {"final_time", "real", "Final time T; N = round(T / tau).",
       [](C& c, const std::string& v) { c.final_time = parse_real(v); },
       [](const C& c) { return fmt::format("{}", c.final_time); }},
      {"forcing", "sinsep|poly|eigen|random|zero", "Right-hand side f; eigen is s(t) times the first eigenvector.",
       [](C& c, const std::string& v) {
         c.forcing = parse_choice(v, {ForcingKind::sinsep, ForcingKind::poly, ForcingKind::eigen, ForcingKind::random,
                                      ForcingKind::zero});
       },
       [](const C& c) { return to_string(c.forcing); }},
      {"start", "zero|projected-reference|eigenvector|random", "Starting values u^0..u^{k-1}.",
       [](C& c, const std::string& v) {
         c.start = parse_choice(v, {StartPolicy::zero, StartPolicy::projected_reference, StartPolicy::eigenvector,
                                    StartPolicy::random});
       },
       [](const C& c) { return to_string(c.start); }},
      {"seed", "uint64", "Seed of every random stream.",
       [](C& c, const std::string& v) { c.seed = parse_seed(v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"oracle_cells", "bool", "Add k = 1 eigenvector-forcing cells checked against the scalar recurrence.",
       [](C& c, const std::string& v) { c.oracle_cells = parse_bool(v); },
       [](const C& c) { return std::string(c.oracle_cells ? "true" : "false"); }},
      {"homogeneity_check", "bool", "Rerun every cell with doubled data and compare the ratios.",
       [](C& c, const std::string& v) { c.homogeneity_check = parse_bool(v); },
       [](const C& c) { return std::string(c.homogeneity_check ? "true" : "false"); }},
      {"reference_refinements", "int", "Refinements of the reference space for error and linfty (2 gives h/4).",
       [](C& c, const std::string& v) { c.reference_refinements = parse_int(v); },
       [](const C& c) { return std::to_string(c.reference_refinements); }},
      {"linfty_n0", "int", "Coarsest step count of the linfty experiment.",
       [](C& c, const std::string& v) { c.linfty_n0 = parse_int(v); },
       [](const C& c) { return std::to_string(c.linfty_n0); }},
      {"linfty_doublings", "int", "How often the linfty experiment doubles N.",
       [](C& c, const std::string& v) { c.linfty_doublings = parse_int(v); },
       [](const C& c) { return std::to_string(c.linfty_doublings); }},
      {"theta", "real list", "Probe sector angles as fractions of pi, each in (0, 1/2).",
       [](C& c, const std::string& v) {
         c.theta_pi.clear();
         for (const auto& s : split_list(v)) c.theta_pi.push_back(parse_real(s));
       },
       [](const C& c) { return join_reals(c.theta_pi, false); }},
      {"probe_radii", "int", "Log-spaced radii per ray in [lambda_min 1e-3, lambda_max 1e3].",
       [](C& c, const std::string& v) { c.probe_radii = parse_int(v); },
       [](const C& c) { return std::to_string(c.probe_radii); }},
      {"probe_restarts", "int", "Random restarts of the norm estimator.",
       [](C& c, const std::string& v) { c.probe_restarts = parse_int(v); },
       [](const C& c) { return std::to_string(c.probe_restarts); }},
      {"probe_iterations", "int", "Ascent iterations per restart (q != 2).",
       [](C& c, const std::string& v) { c.probe_iterations = parse_int(v); },
       [](const C& c) { return std::to_string(c.probe_iterations); }},
      {"rbound_points", "int", "Sector points per sampled R-bound (0 disables it).",
       [](C& c, const std::string& v) { c.rbound_points = parse_int(v); },
       [](const C& c) { return std::to_string(c.rbound_points); }},
      {"rbound_trials", "int", "Random Gaussian batches per R-bound.",
       [](C& c, const std::string& v) { c.rbound_trials = parse_int(v); },
       [](const C& c) { return std::to_string(c.rbound_trials); }},
  };
  return list;
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = [] {
    std::vector<KeySpec> out;
    const ExperimentConfig defaults;
    for (const auto& e : entries()) out.push_back({e.name, e.type, e.get(defaults), e.doc});
    return out;
  }();
  return schema;
}

std::string config_help() {
  std::string out = "Config keys (key = value, '#' starts a comment):\n";
  for (const auto& k : config_schema())
    out += fmt::format("  {:<22} <{}>  (default: {})\n      {}\n", k.name, k.type, k.default_value, k.doc);
  return out;
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, number));
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto& list = entries();
    const auto it = std::find_if(list.begin(), list.end(), [&](const Entry& e) { return e.name == key; });
    if (it == list.end()) throw ConfigError(fmt::format("{}:{}: unknown key '{}' (see --help)", origin, number, key));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("{}:{}: key '{}' given twice", origin, number, key));
    if (value.empty()) throw ConfigError(fmt::format("{}:{}: key '{}' has no value", origin, number, key));
    try {
      it->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}: {}", origin, number, key, e.what()));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries()) out.emplace_back(e.name, e.get(config));
  return out;
}

}  // namespace mrlab
