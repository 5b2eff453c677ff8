#pragma once

#include "gbcbf/benchmarks/double_integrator.hpp"
#include "gbcbf/benchmarks/quadrotor.hpp"
#include "gbcbf/sim.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace gbcbf {

using json = nlohmann::json;

/// Malformed or schema-invalid configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cfg {

inline void read(const json& j, double& v) {
  if (!j.is_number()) throw ConfigError("expected a number, got " + j.dump());
  v = j.get<double>();
}
inline void read(const json& j, int& v) {
  if (!j.is_number_integer()) throw ConfigError("expected an integer, got " + j.dump());
  v = j.get<int>();
}
inline void read(const json& j, std::uint64_t& v) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw ConfigError("expected a nonnegative integer, got " + j.dump());
  v = j.get<std::uint64_t>();
}
inline void read(const json& j, bool& v) {
  if (!j.is_boolean()) throw ConfigError("expected a boolean, got " + j.dump());
  v = j.get<bool>();
}
inline void read(const json& j, std::string& v) {
  if (!j.is_string()) throw ConfigError("expected a string, got " + j.dump());
  v = j.get<std::string>();
}
inline void read(const json& j, Vec& v) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers, got " + j.dump());
  v.resize(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) read(j[i], v(static_cast<Eigen::Index>(i)));
}
inline void read(const json& j, Eigen::Vector2d& v) {
  Vec t;
  read(j, t);
  if (t.size() != 2) throw ConfigError("expected 2 numbers, got " + j.dump());
  v = t;
}
inline void read(const json& j, Eigen::Matrix2d& v) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2x2 nested array, got " + j.dump());
  for (int r = 0; r < 2; ++r) {
    Eigen::Vector2d row;
    read(j[r], row);
    v.row(r) = row.transpose();
  }
}
inline void read(const json& j, QuadGains& v) {
  Vec t;
  read(j, t);
  if (t.size() != 6) throw ConfigError("expected 6 gains, got " + j.dump());
  for (int i = 0; i < 6; ++i) v[i] = t(i);
}

inline json write(double v) { return v; }
inline json write(int v) { return v; }
inline json write(std::uint64_t v) { return v; }
inline json write(bool v) { return v; }
inline json write(const std::string& v) { return v; }
inline json write(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline json write(const Eigen::Vector2d& v) { return std::vector<double>{v(0), v(1)}; }
inline json write(const Eigen::Matrix2d& v) {
  return json::array({{v(0, 0), v(0, 1)}, {v(1, 0), v(1, 1)}});
}
inline json write(const QuadGains& v) { return std::vector<double>(v.begin(), v.end()); }

/// Reads named members of one JSON object and rejects the ones never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return false;
    try {
      read(*it, out);
    } catch (const ConfigError& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
    return true;
  }

  template <class T>
  void require_key(const std::string& key, T& out) {
    if (!get(key, out)) throw ConfigError(where_ + ": missing required key '" + key + "'");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }
  void allow(const std::string& key) { known_.insert(key); }

  void finish() const {
    std::vector<std::string> unknown;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known_.count(it.key())) unknown.push_back(it.key());
    if (!unknown.empty()) {
      std::string msg = where_ + ": unknown key(s):";
      for (const auto& k : unknown) msg += " '" + k + "'";
      throw ConfigError(msg);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

}  // namespace cfg

template <class P, class V>
void visit_params_di(P& p, V&& v) {
  v("x_max", p.x_max);
  v("u_max", p.u_max);
  v("K", p.K);
  v("ke_scale", p.ke_scale);
  v("rho", p.rho);
  v("Q", p.Q);
  v("beta", p.beta);
  v("eps", p.eps);
  v("horizon", p.horizon);
  v("steps", p.steps);
  v("delta_sat", p.delta_sat);
  v("nominal_target", p.nominal_target);
  v("nominal_kp", p.nominal_kp);
  v("nominal_kd", p.nominal_kd);
}

template <class P, class V>
void visit_params_quad(P& p, V&& v) {
  v("g", p.g_d);
  v("J", p.J);
  v("mass", p.mass);
  v("F_max", p.F_max);
  v("M_max", p.M_max);
  v("rho", p.rho);
  v("eps", p.eps);
  v("horizon", p.horizon);
  v("steps", p.steps);
  v("gamma", p.gamma);
  v("kappa", p.kappa);
  v("x_L", p.x_L);
  v("x_R", p.x_R);
  v("z_L", p.z_L);
  v("z_T", p.z_T);
  v("x_goal", p.x_goal);
  v("z_goal", p.z_goal);
  v("x_hover", p.x_hover);
  v("z_hover", p.z_hover);
  v("backup_gains", p.backup_gains);
  v("expander_gains", p.expander_gains);
  v("nominal_gains", p.nominal_gains);
  v("theta_max", p.theta_max);
  v("delta_frac", p.delta_frac);
  v("az_floor_frac", p.az_floor_frac);
}

/// Benchmark id plus its constants.
struct BundleConfig {
  std::string id = "double_integrator";
  DoubleIntegratorParams di;
  QuadrotorParams quad;

  bool is_quad() const { return id == "quadrotor"; }

  /// Throws ValidationError when the constants fail the bundle checks.
  ProblemBundle build() const { return is_quad() ? quad_bundle(quad).bundle : di_bundle(di).bundle; }

  json params_json() const {
    json j = json::object();
    auto w = [&](const char* k, const auto& v) { j[k] = cfg::write(v); };
    if (is_quad()) visit_params_quad(quad, w);
    else visit_params_di(di, w);
    return j;
  }
};

inline BundleConfig read_bundle(cfg::ObjectReader& r) {
  BundleConfig b;
  r.require_key("bundle", b.id);
  if (b.id != "double_integrator" && b.id != "quadrotor")
    throw ConfigError("bundle: unknown id '" + b.id + "' (expected double_integrator or quadrotor)");
  if (r.has("params")) {
    cfg::ObjectReader pr(r.at("params"), "params");
    auto g = [&](const char* k, auto& v) { pr.get(k, v); };
    if (b.is_quad()) visit_params_quad(b.quad, g);
    else visit_params_di(b.di, g);
    pr.finish();
  }
  return b;
}

inline Variant read_variant(cfg::ObjectReader& r, const std::string& key = "variant") {
  std::string v;
  r.require_key(key, v);
  try {
    return parse_variant(v);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

struct SimConfig {
  BundleConfig bundle;
  SimSettings sim;
  std::string out_dir;
  std::uint64_t seed = 0;

  json to_json() const {
    json j;
    j["bundle"] = bundle.id;
    j["params"] = bundle.params_json();
    j["variant"] = to_string(sim.variant);
    if (sim.variant == Variant::gb) j["expander"] = sim.expander;
    j["x0"] = cfg::write(sim.x0);
    if (sim.variant == Variant::agb) j["theta0"] = cfg::write(sim.theta0);
    j["dt"] = sim.dt;
    j["duration"] = sim.duration;
    j["substeps"] = sim.substeps;
    j["lambda"] = sim.lambda;
    j["lambda_b"] = sim.lambda_b;
    j["gamma"] = sim.gamma;
    j["rate_scale"] = sim.rate_scale;
    j["weight_u"] = sim.weight_u;
    j["weight_theta"] = sim.weight_theta;
    j["tightening"] = sim.tightening;
    j["outside_tol"] = sim.outside_tol;
    j["seed"] = seed;
    if (!out_dir.empty()) j["output"] = out_dir;
    return j;
  }
};

/// Fills defaults that depend on the bundle (control period, gamma, expander, theta0).
inline SimConfig parse_sim_config(const json& j) {
  cfg::ObjectReader r(j, "config");
  SimConfig c;
  c.bundle = read_bundle(r);
  SimSettings& s = c.sim;
  s.variant = read_variant(r);
  s.dt = c.bundle.is_quad() ? 0.02 : 0.01;
  s.gamma = c.bundle.is_quad() ? c.bundle.quad.gamma : 1.0;
  r.get("expander", s.expander);
  r.require_key("x0", s.x0);
  r.get("theta0", s.theta0);
  r.get("dt", s.dt);
  r.require_key("duration", s.duration);
  r.get("substeps", s.substeps);
  r.get("lambda", s.lambda);
  r.get("lambda_b", s.lambda_b);
  r.get("gamma", s.gamma);
  r.get("rate_scale", s.rate_scale);
  r.get("weight_u", s.weight_u);
  r.get("weight_theta", s.weight_theta);
  r.get("tightening", s.tightening);
  r.get("outside_tol", s.outside_tol);
  r.get("output", c.out_dir);
  r.get("seed", c.seed);
  r.finish();
  if (s.variant != Variant::gb && !s.expander.empty())
    throw ConfigError("config: 'expander' only applies to variant gb");
  if (s.variant != Variant::agb && s.theta0.size() != 0)
    throw ConfigError("config: 'theta0' only applies to variant agb");
  return c;
}

struct ScanJob {
  std::string label;
  Variant variant = Variant::bcbf;
  std::string expander;
};

struct ScanConfig {
  BundleConfig bundle;
  GridSpec grid;
  std::vector<ScanJob> jobs;
  bool kernel = false;
  int threads = 1;
  std::string out_dir;
  std::uint64_t seed = 0;

  json to_json() const {
    json j;
    j["bundle"] = bundle.id;
    j["params"] = bundle.params_json();
    j["axes"] = grid.axes;
    json bnds = json::array();
    for (const auto& b : grid.bounds) bnds.push_back({b.first, b.second});
    j["bounds"] = bnds;
    j["resolution"] = grid.resolution;
    j["slice"] = cfg::write(grid.slice);
    json jobs_j = json::array();
    for (const auto& jb : jobs) {
      json o{{"label", jb.label}, {"variant", to_string(jb.variant)}};
      if (!jb.expander.empty()) o["expander"] = jb.expander;
      jobs_j.push_back(o);
    }
    j["grids"] = jobs_j;
    j["kernel"] = kernel;
    j["threads"] = threads;
    j["seed"] = seed;
    if (!out_dir.empty()) j["output"] = out_dir;
    return j;
  }
};

inline ScanConfig parse_scan_config(const json& j) {
  cfg::ObjectReader r(j, "config");
  ScanConfig c;
  c.bundle = read_bundle(r);
  const int n = c.bundle.is_quad() ? 6 : 2;

  if (!r.has("axes")) throw ConfigError("config: missing required key 'axes'");
  const json& axes = r.at("axes");
  if (!axes.is_array()) throw ConfigError("config.axes: expected an array of integers");
  for (const auto& a : axes) {
    int v;
    cfg::read(a, v);
    c.grid.axes.push_back(v);
  }
  if (!r.has("bounds")) throw ConfigError("config: missing required key 'bounds'");
  const json& bounds = r.at("bounds");
  if (!bounds.is_array()) throw ConfigError("config.bounds: expected an array of [lo, hi] pairs");
  for (const auto& b : bounds) {
    Vec lh;
    cfg::read(b, lh);
    if (lh.size() != 2) throw ConfigError("config.bounds: each entry must be [lo, hi]");
    c.grid.bounds.emplace_back(lh(0), lh(1));
  }
  if (!r.has("resolution")) throw ConfigError("config: missing required key 'resolution'");
  const json& res = r.at("resolution");
  if (!res.is_array()) throw ConfigError("config.resolution: expected an array of integers");
  for (const auto& v : res) {
    int k;
    cfg::read(v, k);
    c.grid.resolution.push_back(k);
  }
  c.grid.slice = Vec::Zero(n);
  r.get("slice", c.grid.slice);

  if (!r.has("grids")) throw ConfigError("config: missing required key 'grids'");
  const json& grids = r.at("grids");
  if (!grids.is_array() || grids.empty()) throw ConfigError("config.grids: expected a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    cfg::ObjectReader gr(grids[i], "config.grids[" + std::to_string(i) + "]");
    ScanJob job;
    gr.require_key("label", job.label);
    job.variant = read_variant(gr);
    gr.get("expander", job.expander);
    gr.finish();
    if (job.label.empty() || job.label.find_first_of("/\\ ") != std::string::npos)
      throw ConfigError("config.grids: label '" + job.label + "' is not a valid file-name fragment");
    if (!labels.insert(job.label).second) throw ConfigError("config.grids: duplicate label '" + job.label + "'");
    if (job.variant != Variant::gb && !job.expander.empty())
      throw ConfigError("config.grids: 'expander' only applies to variant gb");
    c.jobs.push_back(job);
  }
  r.get("kernel", c.kernel);
  r.get("threads", c.threads);
  r.get("output", c.out_dir);
  r.get("seed", c.seed);
  r.finish();
  try {
    c.grid.validate(n);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (c.threads < 1) throw ConfigError("config.threads: must be at least 1");
  if (c.kernel && c.bundle.is_quad()) throw ConfigError("config.kernel: only available for double_integrator");
  return c;
}

struct BackupCheckConfig {
  BundleConfig bundle;
  int samples = 2000;
  std::uint64_t seed = 7;
  std::string out_dir;

  json to_json() const {
    json j;
    j["bundle"] = bundle.id;
    j["params"] = bundle.params_json();
    j["samples"] = samples;
    j["seed"] = seed;
    if (!out_dir.empty()) j["output"] = out_dir;
    return j;
  }
};

/// Accepts a dedicated check file or any scenario file (its simulation keys are ignored).
inline BackupCheckConfig parse_backup_config(const json& j) {
  cfg::ObjectReader r(j, "config");
  BackupCheckConfig c;
  c.bundle = read_bundle(r);
  r.get("samples", c.samples);
  r.get("seed", c.seed);
  r.get("output", c.out_dir);
  for (const char* k : {"variant", "expander", "x0", "theta0", "dt", "duration", "substeps", "lambda",
                        "lambda_b", "gamma", "rate_scale", "weight_u", "weight_theta", "tightening",
                        "outside_tol"})
    r.allow(k);
  r.finish();
  if (c.samples < 1) throw ConfigError("config.samples: must be at least 1");
  return c;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace gbcbf
