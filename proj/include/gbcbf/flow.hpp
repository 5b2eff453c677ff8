#pragma once

#include "gbcbf/closed_loop.hpp"
#include "gbcbf/switching.hpp"

#include <cmath>
#include <string>

namespace gbcbf {

/// Fixed-step classical RK4 over [0, horizon] with `steps` sub-intervals.
struct IntegratorConfig {
  double horizon = 1.0;
  int steps = 100;

  double step() const { return horizon / steps; }
  void validate() const {
    require(horizon > 0.0 && std::isfinite(horizon), "IntegratorConfig: horizon must be positive");
    require(steps >= 1, "IntegratorConfig: steps must be at least 1");
  }
};

/// Flow phi(tau_i, x) and sensitivity Phi(tau_i, x) = d phi / d x at tau_i = i T / N.
struct FlowGrid {
  std::vector<double> taus;
  std::vector<Vec> states;
  std::vector<Mat> sens;  // empty when integrated without sensitivities

  std::size_t nodes() const { return states.size(); }
  const Vec& terminal_state() const { return states.back(); }
  const Mat& terminal_sens() const { return sens.back(); }
  bool has_sensitivity() const { return !sens.empty(); }
};

class DivergedFlowError : public std::runtime_error {
 public:
  DivergedFlowError(std::size_t node, const std::string& what)
      : std::runtime_error(what), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

inline constexpr double kDivergenceThreshold = 1e9;

namespace detail {

inline bool diverged(const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || std::abs(x(i)) > kDivergenceThreshold) return true;
  }
  return false;
}

// One RK4 step of the state (and, if `sens` is non-null, the variational
// equation staged at the same intermediate states).
inline void rk4_step(const SystemModel& sys, const ControlLaw& law, const Vec& theta, double h,
                     Vec& x, Mat* sens) {
  if (sens == nullptr) {
    const Vec k1 = closed_loop_rhs(sys, law, x, theta);
    const Vec k2 = closed_loop_rhs(sys, law, x + 0.5 * h * k1, theta);
    const Vec k3 = closed_loop_rhs(sys, law, x + 0.5 * h * k2, theta);
    const Vec k4 = closed_loop_rhs(sys, law, x + h * k3, theta);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return;
  }
  Mat& phi = *sens;
  const ClosedLoopEval e1 = closed_loop_eval(sys, law, x, theta);
  const Mat s1 = e1.jac * phi;
  const ClosedLoopEval e2 = closed_loop_eval(sys, law, x + 0.5 * h * e1.rhs, theta);
  const Mat s2 = e2.jac * (phi + 0.5 * h * s1);
  const ClosedLoopEval e3 = closed_loop_eval(sys, law, x + 0.5 * h * e2.rhs, theta);
  const Mat s3 = e3.jac * (phi + 0.5 * h * s2);
  const ClosedLoopEval e4 = closed_loop_eval(sys, law, x + h * e3.rhs, theta);
  const Mat s4 = e4.jac * (phi + h * s3);
  x += (h / 6.0) * (e1.rhs + 2.0 * e2.rhs + 2.0 * e3.rhs + e4.rhs);
  phi += (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
}

}  // namespace detail

/**
 * Integrates x' = f(x) + g(x) k(x, theta) from x0 with a fixed step h for
 * `steps` steps, optionally with the sensitivity Phi' = F(phi) Phi, Phi(0) = I.
 * Node i is reported at time t0 + i h.
 */
inline FlowGrid integrate_fixed_step(const SystemModel& sys, const ControlLaw& law, const Vec& x0,
                                     const Vec& theta, double h, int steps, bool with_sensitivity,
                                     double t0 = 0.0) {
  check_dims(sys, law, x0);
  require(steps >= 0, "integrate: negative step count");
  require(law.dim_params == theta.size(), "integrate: parameter vector has wrong dimension");
  if (detail::diverged(x0)) throw DivergedFlowError(0, "flow diverged: initial state is not finite");

  FlowGrid grid;
  grid.taus.reserve(steps + 1);
  grid.states.reserve(steps + 1);
  Vec x = x0;
  Mat phi;
  if (with_sensitivity) {
    grid.sens.reserve(steps + 1);
    phi = Mat::Identity(sys.n, sys.n);
    grid.sens.push_back(phi);
  }
  grid.taus.push_back(t0);
  grid.states.push_back(x);
  for (int i = 1; i <= steps; ++i) {
    detail::rk4_step(sys, law, theta, h, x, with_sensitivity ? &phi : nullptr);
    if (detail::diverged(x) || (with_sensitivity && !phi.allFinite())) {
      throw DivergedFlowError(static_cast<std::size_t>(i),
                              "flow diverged at node " + std::to_string(i));
    }
    grid.taus.push_back(t0 + i * h);
    grid.states.push_back(x);
    if (with_sensitivity) grid.sens.push_back(phi);
  }
  return grid;
}

inline FlowGrid integrate_flow(const SystemModel& sys, const ControlLaw& law, const Vec& x0,
                               const Vec& theta, const IntegratorConfig& cfg,
                               bool with_sensitivity = true) {
  cfg.validate();
  return integrate_fixed_step(sys, law, x0, theta, cfg.step(), cfg.steps, with_sensitivity);
}

/// Joint flow/sensitivity integration under the switched controller.
inline FlowGrid integrate_switched_flow(const SystemModel& sys, const SwitchedController& sc,
                                        const Vec& x0, const Vec& theta,
                                        const IntegratorConfig& cfg, bool with_sensitivity = true) {
  return integrate_flow(sys, as_control_law(sc), x0, theta, cfg, with_sensitivity);
}

/**
 * Semigroup check phi(T, x) = phi(T - v, phi(v, x)) for a grid-aligned split
 * v = split_time. Returns the largest state deviation over the nodes after
 * the split.
 */
inline double flow_group_check(const SystemModel& sys, const ControlLaw& law, const Vec& x0,
                               const Vec& theta, const IntegratorConfig& cfg, double split_time) {
  cfg.validate();
  const double h = cfg.step();
  const double k_real = split_time / h;
  const long k = std::lround(k_real);
  require(split_time >= 0.0 && split_time <= cfg.horizon, "flow_group_check: split outside horizon");
  require(std::abs(k_real - static_cast<double>(k)) <= 1e-9 * std::max(1.0, k_real),
          "flow_group_check: split is not aligned with the integration grid");

  const FlowGrid direct = integrate_fixed_step(sys, law, x0, theta, h, cfg.steps, false);
  const FlowGrid head = integrate_fixed_step(sys, law, x0, theta, h, static_cast<int>(k), false);
  const FlowGrid tail = integrate_fixed_step(sys, law, head.terminal_state(), theta, h,
                                             cfg.steps - static_cast<int>(k), false);
  double worst = 0.0;
  for (std::size_t i = 0; i < tail.nodes(); ++i) {
    worst = std::max(worst, (tail.states[i] - direct.states[k + i]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

inline double flow_group_check(const SystemModel& sys, const SwitchedController& sc, const Vec& x0,
                               const Vec& theta, const IntegratorConfig& cfg, double split_time) {
  return flow_group_check(sys, as_control_law(sc), x0, theta, cfg, split_time);
}

}  // namespace gbcbf
