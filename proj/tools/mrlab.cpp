// mrlab command-line driver: mesh tools, BDF angles, experiments and probes.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mrlab/config.hpp"
#include "mrlab/harness.hpp"

namespace fs = std::filesystem;
using namespace mrlab;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

int default_jobs() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

std::string rational_text(const Rational& r) {
  return r.denominator() == 1 ? std::to_string(r.numerator()) : fmt::format("{}/{}", r.numerator(), r.denominator());
}

void describe(const Mesh& m, std::ostream& out) {
  out << fmt::format("vertices {}\ntriangles {}\nh {:.17g}\nquasi_uniformity {:.17g}\narea {:.17g}\n", m.num_vertices(),
                     m.num_triangles(), mesh_size(m), quasi_uniformity_ratio(m), m.total_area());
}

fs::path output_path(const std::string& dir, const std::string& cfg, const std::string& ext) {
  return fs::path(dir) / (fs::path(cfg).stem().string() + ext);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  body(out);
}

int cmd_bdf_angles(int samples) {
  std::cout << "k  alpha/pi   reference  delta_0..delta_k\n";
  for (int k = 1; k <= 6; ++k) {
    const BdfScheme s = bdf_coefficients(k);
    std::string deltas;
    for (const auto& d : s.delta) deltas += (deltas.empty() ? "" : ", ") + rational_text(d);
    const double alpha = stability_angle(k, samples) / std::numbers::pi;
    std::cout << fmt::format("{}  {:.6f}   {:.3f}      {}\n", k, alpha, s.alpha_reference, deltas);
  }
  return kPass;
}

int cmd_run(const std::string& cfg_path, bool dry_run, const std::string& out_dir, int jobs) {
  const ExperimentConfig cfg = load_config(cfg_path);
  if (dry_run) {
    const auto plan = plan_cells(cfg);
    std::cout << "experiment,level,h,tau,N,k,p,q\n";
    for (const auto& c : plan)
      std::cout << fmt::format("{},{},{},{},{},{},{},{}\n", c.experiment, c.level, format_number(c.h),
                               format_number(c.tau), c.N, c.k, format_number(c.p), format_number(c.q));
    std::cerr << fmt::format("{} cells\n", plan.size());
    return kPass;
  }
  const ExperimentReport report = run_experiment(cfg, jobs);
  fs::create_directories(out_dir);
  const auto csv = output_path(out_dir, cfg_path, ".csv");
  const auto json = output_path(out_dir, cfg_path, ".json");
  write_file(csv, [&](std::ostream& o) { write_report_csv(report, o); });
  write_file(json, [&](std::ostream& o) { write_report_json(report, o); });
  int failures = 0;
  for (const auto& r : report.rows)
    if (r.verdict != "pass") {
      ++failures;
      std::cerr << fmt::format("{}: {} level={} k={} p={} q={} ratio={}{}\n", r.verdict, r.experiment, r.level, r.k,
                               format_number(r.p), format_number(r.q), format_number(r.ratio),
                               r.note.empty() ? "" : " (" + r.note + ")");
    }
  std::cout << fmt::format("{} rows, {} not passing; wrote {} and {}\n", report.rows.size(), failures, csv.string(),
                           json.string());
  return report.all_pass() ? kPass : kFail;
}

int cmd_probe(const std::string& cfg_path, const std::string& out_dir, int jobs) {
  const ExperimentConfig cfg = load_config(cfg_path);
  const ProbeReport report = run_probe(cfg, jobs);
  fs::create_directories(out_dir);
  const auto csv = output_path(out_dir, cfg_path, ".csv");
  const auto json = output_path(out_dir, cfg_path, ".json");
  write_file(csv, [&](std::ostream& o) { write_probe_csv(report, o); });
  write_file(json, [&](std::ostream& o) { write_probe_json(report, o); });
  for (const auto& v : report.verdicts)
    std::cout << fmt::format("{:<10} theta={:.4f}pi q={} level={} value={:.6g} limit={:.6g} {}\n", v.name,
                             v.theta / std::numbers::pi, format_number(v.q), v.level, v.value, v.limit,
                             v.pass ? "pass" : "fail");
  std::cout << fmt::format("wrote {} and {}\n", csv.string(), json.string());
  return report.all_pass() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrlab: BDF finite element maximal regularity laboratory"};
  app.require_subcommand(1);
  app.footer("\n" + config_help() + "\nExit codes: 0 all verdicts pass, 1 a verdict fails, 2 usage or config error.");

  auto* mesh = app.add_subcommand("mesh", "Generate, refine or check mesh files");
  mesh->require_subcommand(1);
  auto* gen = mesh->add_subcommand("gen", "Write a generated mesh");
  std::string domain = "square", out_path, in_path;
  int n = 8, levels = 1;
  gen->add_option("--domain", domain, "square or lshape")->check(CLI::IsMember({"square", "lshape"}));
  gen->add_option("--n", n, "Subdivisions per side")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_path, "Output mesh file")->required();
  auto* refine = mesh->add_subcommand("refine", "Refine a mesh file uniformly");
  refine->add_option("--in", in_path, "Input mesh file")->required();
  refine->add_option("--levels", levels, "Number of refinements")->check(CLI::PositiveNumber);
  refine->add_option("--out", out_path, "Output mesh file (default: overwrite the input)");
  auto* check = mesh->add_subcommand("check", "Load and validate a mesh file");
  check->add_option("file", in_path, "Mesh file")->required();

  auto* angles = app.add_subcommand("bdf-angles", "Print BDF coefficients and A(alpha) angles");
  int samples = 100000;
  angles->add_option("--samples", samples, "Boundary samples")->check(CLI::Range(10000, 100000000));

  std::string cfg_path, out_dir = ".";
  bool dry_run = false;
  int jobs = default_jobs();
  auto* run = app.add_subcommand("run", "Run the experiment of a config file");
  run->add_option("config", cfg_path, "Config file")->required();
  run->add_flag("--dry-run", dry_run, "Print the cell grid without solving");
  run->add_option("--out-dir", out_dir, "Directory for <config>.csv and <config>.json");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* probe = app.add_subcommand("probe", "Run the resolvent sector probe of a config file");
  probe->add_option("config", cfg_path, "Config file")->required();
  probe->add_option("--out-dir", out_dir, "Directory for <config>.csv and <config>.json");
  probe->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) {
      const Mesh m = domain == "lshape" ? generate_lshape_mesh(n) : generate_square_mesh(n);
      save_mesh(m, out_path);
      describe(m, std::cout);
      return kPass;
    }
    if (*refine) {
      Mesh m = load_mesh(in_path);
      for (int l = 0; l < levels; ++l) m = refine_uniform(m);
      m.parent.clear();
      save_mesh(m, out_path.empty() ? in_path : out_path);
      describe(m, std::cout);
      return kPass;
    }
    if (*check) {
      const Mesh m = load_mesh(in_path);
      validate(m);
      describe(m, std::cout);
      std::cout << "ok\n";
      return kPass;
    }
    if (*angles) return cmd_bdf_angles(samples);
    if (*run) return cmd_run(cfg_path, dry_run, out_dir, jobs);
    if (*probe) return cmd_probe(cfg_path, out_dir, jobs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
