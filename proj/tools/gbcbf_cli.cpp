#include "gbcbf/config.hpp"
#include "gbcbf/gbcbf.hpp"
#include "gbcbf/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace gbcbf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct GlobalOpts {
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
};

std::string resolve_out_dir(const GlobalOpts& g, const std::string& from_config) {
  if (!g.out.empty()) return g.out;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("GBCBF_OUT_DIR"); env && *env) return env;
  return "out";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

void write_meta(const fs::path& dir, const std::string& command, const json& resolved, double runtime,
                const json& extra = json::object()) {
  json meta;
  meta["tool"] = "gbcbf";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["config"] = resolved;
  meta["runtime_seconds"] = runtime;
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  auto os = open_out(dir / "meta.json");
  os << meta.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const std::string& path, const GlobalOpts& g) {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig c = parse_sim_config(load_json_file(path));
  if (g.seed_set) c.seed = g.seed;
  const ProblemBundle b = c.bundle.build();
  if (c.sim.variant == Variant::gb && c.sim.expander.empty()) c.sim.expander = b.default_expander;
  if (c.sim.variant == Variant::agb && c.sim.theta0.size() == 0) c.sim.theta0 = b.theta0;
  try {
    c.sim.validate(b);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!b.theta_bounds.contains(c.sim.theta0.size() ? c.sim.theta0 : b.theta0))
    throw ConfigError("theta0 outside the admissible gain box");

  const TrajectoryLog log = run_closed_loop(b, c.sim);
  const fs::path dir = resolve_out_dir(g, c.out_dir);
  fs::create_directories(dir);
  const int p = c.sim.variant == Variant::agb ? b.k_e_param.dim_params : 0;
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, log, b.sys.n, b.sys.m, p);
  }
  double min_h = std::numeric_limits<double>::infinity();
  int fallbacks = 0;
  for (const auto& r : log.records) {
    min_h = std::min(min_h, r.h);
    fallbacks += r.status == FilterStatus::fallback;
  }
  json extra{{"rows", log.records.size()},
             {"min_h", min_h},
             {"fallback_steps", fallbacks},
             {"diverged", log.diverged},
             {"simulation_seconds", log.wall_time}};
  if (log.diverged) extra["message"] = log.message;
  write_meta(dir, "simulate", c.to_json(), seconds_since(t0), extra);
  if (!g.quiet) {
    std::cout << "simulate: " << log.records.size() << " rows, min h = " << fmt_double(min_h)
              << ", fallback steps = " << fallbacks << " -> " << (dir / "trajectory.csv").string() << '\n';
  }
  if (log.diverged) {
    std::cerr << "error: " << log.message << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_scan(const std::string& path, const GlobalOpts& g) {
  const auto t0 = std::chrono::steady_clock::now();
  ScanConfig c = parse_scan_config(load_json_file(path));
  if (g.seed_set) c.seed = g.seed;
  const BundleConfig& bc = c.bundle;
  const ProblemBundle b = bc.build();
  for (auto& job : c.jobs) {
    if (job.variant == Variant::gb && job.expander.empty()) job.expander = b.default_expander;
    if (job.variant == Variant::gb && !b.expanders.count(job.expander))
      throw ConfigError("config.grids: unknown expander '" + job.expander + "'");
  }
  std::function<bool(const Vec&)> kernel;
  if (c.kernel) {
    const double xm = bc.di.x_max, um = bc.di.u_max;
    kernel = [xm, um](const Vec& x) { return di_viability_oracle(x, xm, um); };
  }

  const fs::path dir = resolve_out_dir(g, c.out_dir);
  fs::create_directories(dir);
  json counts = json::object();
  for (const auto& job : c.jobs) {
    auto os = open_out(dir / ("grid_" + job.label + ".csv"));
    os << grid_header(b.sys.n, c.kernel) << '\n';
    long inside = 0;
    grid_scan(
        c.grid, b, job.variant, job.expander,
        [&](const std::vector<GridCell>& row) {
          for (const auto& cell : row) inside += cell.rec.inside;
          write_grid_row(os, row, kernel);
        },
        c.threads);
    counts[job.label] = inside;
    if (!g.quiet) std::cout << "scan-set: " << job.label << ": " << inside << " cells inside\n";
  }
  write_meta(dir, "scan-set", c.to_json(), seconds_since(t0), json{{"inside_counts", counts}});
  return kExitOk;
}

int cmd_validate_backup(const std::string& path, const GlobalOpts& g) {
  const auto t0 = std::chrono::steady_clock::now();
  BackupCheckConfig c = parse_backup_config(load_json_file(path));
  if (g.seed_set) c.seed = g.seed;
  json report;
  bool passed = false;
  try {
    const ProblemBundle b = c.bundle.build();
    const BackupReport rep = validate_backup_pair(b, c.samples, c.seed);
    passed = rep.passed();
    report = json{{"samples", rep.samples},
                  {"worst_boundary_rate", rep.worst_boundary_rate},
                  {"saturated_samples", rep.saturated_samples},
                  {"worst_safety", rep.worst_safety},
                  {"rate_ok", rep.rate_ok},
                  {"unsaturated_ok", rep.unsaturated_ok},
                  {"contained_ok", rep.contained_ok}};
  } catch (const ValidationError& e) {
    report = json{{"construction_error", e.what()}};
  }
  report["passed"] = passed;
  const fs::path dir = resolve_out_dir(g, c.out_dir);
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "backup_report.json");
    os << report.dump(2) << '\n';
  }
  write_meta(dir, "validate-backup", c.to_json(), seconds_since(t0), json{{"passed", passed}});
  if (!g.quiet) std::cout << "validate-backup: " << (passed ? "PASS" : "FAIL") << '\n' << report.dump(2) << '\n';
  return passed ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety filters with generalized and adaptive backup control barrier functions"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOpts g;
  app.add_option("--out", g.out, "Output directory (default: config 'output', $GBCBF_OUT_DIR, then ./out)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for randomized checks");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  std::string config_path;
  auto* sim = app.add_subcommand("simulate", "Run a closed-loop scenario");
  sim->add_option("config", config_path, "Scenario JSON")->required();
  auto* scan = app.add_subcommand("scan-set", "Grid-scan implicit safe sets");
  scan->add_option("config", config_path, "Scan JSON")->required();
  auto* val = app.add_subcommand("validate-backup", "Check a backup controller/backup set pair");
  val->add_option("config", config_path, "Bundle or scenario JSON")->required();
  auto* ver = app.add_subcommand("version", "Print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (ver->parsed()) {
      std::cout << "gbcbf " << kVersion << '\n';
      return kExitOk;
    }
    if (sim->parsed()) return cmd_simulate(config_path, g);
    if (scan->parsed()) return cmd_scan(config_path, g);
    if (val->parsed()) return cmd_validate_backup(config_path, g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}
