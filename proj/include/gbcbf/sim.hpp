#pragma once

#include "gbcbf/adaptive.hpp"
#include "gbcbf/sets.hpp"

namespace gbcbf {

/// Closed-loop protocol settings shared by both benchmarks.
struct SimSettings {
  Variant variant = Variant::gb;
  std::string expander;  // gb only; empty selects the bundle default
  Vec x0;
  Vec theta0;            // agb only; empty selects the bundle default
  double dt = 0.01;
  double duration = 5.0;
  int substeps = 10;
  double lambda = 1.0;
  double lambda_b = 1.0;
  double gamma = 1.0;
  double rate_scale = 5.0;  // u_theta box is +-rate_scale * gamma per channel
  double weight_u = 1.0;
  double weight_theta = 1e-2;
  double tightening = 0.0;
  double outside_tol = 1e-3;

  void validate(const ProblemBundle& b) const {
    require(dt > 0.0, "simulation: dt must be positive");
    require(duration >= dt, "simulation: duration must be at least dt");
    require(substeps >= 1, "simulation: substeps must be positive");
    require(x0.size() == b.sys.n, "simulation: x0 has wrong dimension");
    require(x0.allFinite(), "simulation: x0 is not finite");
    require(lambda > 0.0 && lambda_b > 0.0, "simulation: class-K gains must be positive");
    require(weight_u > 0.0 && weight_theta > 0.0, "simulation: weights must be positive");
    require(gamma >= 0.0 && rate_scale > 0.0, "simulation: gamma and rate_scale must be nonnegative/positive");
    if (variant == Variant::agb) {
      require(theta0.size() == 0 || theta0.size() == b.k_e_param.dim_params,
              "simulation: theta0 has wrong dimension");
    }
    if (variant == Variant::gb) (void)b.expander(expander.empty() ? b.default_expander : expander);
  }

  int steps() const { return static_cast<int>(std::llround(duration / dt)); }
};

struct TrajectoryRecord {
  double t = 0.0;
  Vec x;
  Vec u;
  Vec u_nom;
  FilterStatus status = FilterStatus::fallback;
  double h = 0.0;
  double h_b = 0.0;
  double traj_margin = 0.0;
  double term_margin = 0.0;
  Vec theta;  // empty unless agb
  int iterations = 0;
  double wall_time = 0.0;
};

struct TrajectoryLog {
  std::vector<TrajectoryRecord> records;
  bool diverged = false;
  std::string message;
  double wall_time = 0.0;
};

inline constexpr double kPlantDivergence = 1e9;

/// RK4 over one control period with u held constant.
inline Vec advance_plant(const SystemModel& sys, const Vec& x, const Vec& u, double dt, int substeps) {
  const double h = dt / substeps;
  auto rhs = [&](const Vec& s) -> Vec { return sys.f(s) + sys.g(s) * u; };
  Vec s = x;
  for (int k = 0; k < substeps; ++k) {
    const Vec k1 = rhs(s);
    const Vec k2 = rhs(s + 0.5 * h * k1);
    const Vec k3 = rhs(s + 0.5 * h * k2);
    const Vec k4 = rhs(s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

inline FilterProblem make_filter_problem(const ProblemBundle& b, const SimSettings& s) {
  FilterProblem prob;
  prob.sys = b.sys;
  prob.flow_law = flow_law_for(b, s.variant, s.expander);
  prob.fallback_law = prob.flow_law;
  prob.nominal = b.nominal;
  prob.h = b.h;
  prob.h_b = b.h_b;
  prob.box = b.box;
  prob.weight = s.weight_u * Mat::Identity(b.sys.m, b.sys.m);
  prob.alpha = ClassKappa{s.lambda};
  prob.alpha_b = ClassKappa{s.lambda_b};
  prob.cfg = b.cfg;
  prob.tightening = s.tightening;
  prob.outside_tol = s.outside_tol;
  return prob;
}

inline AugmentedProblem make_augmented_problem(const ProblemBundle& b, const SimSettings& s) {
  AugmentedProblem prob;
  const int m = b.sys.m, p = b.k_e_param.dim_params;
  prob.base = b.sys;
  prob.k_e = b.k_e_param;
  prob.k_b = b.k_b;
  prob.nominal = b.nominal;
  prob.h = b.h;
  prob.h_b = b.h_b;
  prob.box = b.box;
  const double r = s.rate_scale * s.gamma;
  prob.rate_box = InputBox(Vec::Constant(p, -r), Vec::Constant(p, r));
  prob.weight = Mat::Zero(m + p, m + p);
  prob.weight.topLeftCorner(m, m) = s.weight_u * Mat::Identity(m, m);
  prob.weight.bottomRightCorner(p, p) = s.weight_theta * Mat::Identity(p, p);
  prob.eps = b.eps;
  prob.gamma = s.gamma;
  prob.alpha = ClassKappa{s.lambda};
  prob.alpha_b = ClassKappa{s.lambda_b};
  prob.cfg = b.cfg;
  prob.tightening = s.tightening;
  prob.outside_tol = s.outside_tol;
  return prob;
}

/**
 * Sample-and-hold closed loop: at every control instant the filter is solved,
 * its input is held over dt while the plant advances by RK4 sub-steps, and
 * (agb) the gains move by dt * u_theta, clipped to the admissible box. One
 * record per control instant, including t = 0 and the final time.
 */
inline TrajectoryLog run_closed_loop(const ProblemBundle& b, const SimSettings& s) {
  s.validate(b);
  const auto t0 = std::chrono::steady_clock::now();
  const int m = b.sys.m;
  const bool adaptive = s.variant == Variant::agb;

  FilterProblem fprob;
  AugmentedProblem aprob;
  Vec theta;
  if (adaptive) {
    aprob = make_augmented_problem(b, s);
    theta = s.theta0.size() ? s.theta0 : b.theta0;
    require(b.theta_bounds.contains(theta), "simulation: theta0 outside the admissible gain box");
  } else {
    fprob = make_filter_problem(b, s);
  }

  TrajectoryLog log;
  Vec x = s.x0;
  const int steps = s.steps();
  log.records.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    TrajectoryRecord rec;
    rec.t = k * s.dt;
    rec.x = x;
    rec.h = b.h.value(x);
    rec.h_b = b.h_b.value(x);
    Vec u_theta;
    if (adaptive) {
      const AdaptiveResult r = adaptive_filter_step(aprob, augment_state(x, theta));
      rec.u = r.filter.u.head(m);
      u_theta = r.filter.u.tail(theta.size());
      rec.status = r.filter.status;
      rec.traj_margin = r.filter.traj_margin;
      rec.term_margin = r.filter.term_margin;
      rec.iterations = r.filter.iterations;
      rec.wall_time = r.filter.wall_time;
      rec.theta = theta;
    } else {
      const FilterResult r = filter_step(fprob, x);
      rec.u = r.u;
      rec.status = r.status;
      rec.traj_margin = r.traj_margin;
      rec.term_margin = r.term_margin;
      rec.iterations = r.iterations;
      rec.wall_time = r.wall_time;
    }
    rec.u_nom = b.nominal.value(x, Vec());
    log.records.push_back(rec);
    if (k == steps) break;

    x = advance_plant(b.sys, x, rec.u, s.dt, s.substeps);
    if (adaptive) theta = b.theta_bounds.clamp(theta + s.dt * u_theta);
    if (!x.allFinite() || x.norm() > kPlantDivergence) {
      log.diverged = true;
      log.message = "plant state diverged at t = " + std::to_string((k + 1) * s.dt);
      break;
    }
  }
  log.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace gbcbf
