#pragma once

#include "gbcbf/benchmarks/bundle.hpp"
#include "gbcbf/lyapunov.hpp"
#include "gbcbf/smooth.hpp"

namespace gbcbf {

struct DoubleIntegratorParams {
  double x_max = 1.0;
  double u_max = 1.0;
  Eigen::Vector2d K{2.0, 1.6};
  double ke_scale = 30.0;  // K_e = ke_scale * K
  double rho = 0.15;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  double beta = 1e-9;
  double eps = 1e-3;
  double horizon = 2.0;
  int steps = 200;
  // Blend half-width of every saturation. Must stay below
  // u_max - sqrt(rho) ||K P^{-1/2}|| (about 0.009 with the defaults) or the
  // backup law leaves its identity core inside the backup set.
  double delta_sat = 0.005;
  double nominal_target = 2.0;  // beyond the wall, so the nominal pushes into it
  double nominal_kp = 1.0;
  double nominal_kd = 1.0;
};

struct DoubleIntegratorBundle {
  DoubleIntegratorParams params;
  ProblemBundle bundle;
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
  /// sqrt(rho) ||K P^{-1/2}||: largest |K x| over the backup set.
  double max_backup_input = 0.0;
};

namespace detail {

inline ControlLaw di_linear_sat_law(const Eigen::Vector2d& gain, double u_max, double delta) {
  ControlLaw law;
  law.n = 2;
  law.m = 1;
  law.value = [gain, u_max, delta](const Vec& x, const Vec&) {
    return Vec::Constant(1, smooth_sat(-gain.dot(x), -u_max, u_max, delta));
  };
  law.dx = [gain, u_max, delta](const Vec& x, const Vec&) {
    Mat j(1, 2);
    j.row(0) = -smooth_sat_grad(-gain.dot(x), -u_max, u_max, delta) * gain.transpose();
    return j;
  };
  return law;
}

}  // namespace detail

/// Time-optimal-like law -sat((x2^2 sat(x2 / beta) + 2 x1) / beta).
inline ControlLaw di_time_optimal_law(double beta, double u_max, double delta) {
  require(beta > 0.0, "di_time_optimal_law: beta must be positive");
  ControlLaw law;
  law.n = 2;
  law.m = 1;
  law.value = [=](const Vec& x, const Vec&) {
    const double s = smooth_sat(x(1) / beta, -1.0, 1.0, delta);
    const double arg = (x(1) * x(1) * s + 2.0 * x(0)) / beta;
    return Vec::Constant(1, -smooth_sat(arg, -u_max, u_max, delta));
  };
  law.dx = [=](const Vec& x, const Vec&) {
    const double s = smooth_sat(x(1) / beta, -1.0, 1.0, delta);
    const double ds = smooth_sat_grad(x(1) / beta, -1.0, 1.0, delta) / beta;
    const double arg = (x(1) * x(1) * s + 2.0 * x(0)) / beta;
    const double outer = -smooth_sat_grad(arg, -u_max, u_max, delta);
    Mat j(1, 2);
    j(0, 0) = outer * 2.0 / beta;
    j(0, 1) = outer * (2.0 * x(1) * s + x(1) * x(1) * ds) / beta;
    return j;
  };
  return law;
}

/// sat(-theta^T x) with theta as the parameter vector.
inline ControlLaw di_param_law(double u_max, double delta) {
  ControlLaw law;
  law.n = 2;
  law.m = 1;
  law.dim_params = 2;
  law.value = [=](const Vec& x, const Vec& th) {
    return Vec::Constant(1, smooth_sat(-th.dot(x), -u_max, u_max, delta));
  };
  law.dx = [=](const Vec& x, const Vec& th) {
    Mat j(1, 2);
    j.row(0) = -smooth_sat_grad(-th.dot(x), -u_max, u_max, delta) * th.transpose();
    return j;
  };
  law.dtheta = [=](const Vec& x, const Vec& th) {
    Mat j(1, 2);
    j.row(0) = -smooth_sat_grad(-th.dot(x), -u_max, u_max, delta) * x.transpose();
    return j;
  };
  return law;
}

/**
 * Double integrator x1' = x2, x2' = u, |u| <= u_max, wall |x1| <= x_max, with
 * the Lyapunov ellipse of the linear backup law as backup set. Expanders:
 * "backup" (k_e = k_b), "linear" (high-gain saturated linear law) and
 * "time_optimal". With enforce_checks = false the backup-set checks are
 * skipped, which lets callers build deliberately invalid bundles for the
 * sampled validator.
 */
inline DoubleIntegratorBundle di_bundle(const DoubleIntegratorParams& prm = {}, bool enforce_checks = true) {
  require(prm.x_max > 0.0 && prm.u_max > 0.0, "di_bundle: x_max and u_max must be positive");
  require(prm.rho > 0.0, "di_bundle: rho must be positive");
  require(prm.delta_sat > 0.0 && prm.delta_sat < prm.u_max, "di_bundle: delta_sat out of range");

  DoubleIntegratorBundle out;
  out.params = prm;
  out.A << 0.0, 1.0, 0.0, 0.0;
  out.B << 0.0, 1.0;

  ProblemBundle& b = out.bundle;
  b.id = "double_integrator";
  const Mat a = out.A;
  const Vec bvec = out.B;
  b.sys.n = 2;
  b.sys.m = 1;
  b.sys.f = [a](const Vec& x) -> Vec { return a * x; };
  b.sys.g = [bvec](const Vec&) -> Mat { return bvec; };
  b.sys.df_dx = [a](const Vec&) -> Mat { return a; };
  b.box = InputBox(Vec::Constant(1, -prm.u_max), Vec::Constant(1, prm.u_max));

  const double xmax = prm.x_max;
  b.h.value = [xmax](const Vec& x) { return xmax * xmax - x(0) * x(0); };
  b.h.grad = [](const Vec& x) {
    RowVec g(2);
    g << -2.0 * x(0), 0.0;
    return g;
  };

  const Mat a_cl = out.A - out.B * prm.K.transpose();
  b.P = solve_lyapunov(a_cl, prm.Q);
  b.rho = prm.rho;
  b.x_eq = Vec::Zero(2);
  b.h_b = ellipsoid_field(b.x_eq, b.P, prm.rho);

  out.max_backup_input =
      std::sqrt(prm.rho) * (prm.K.transpose() * inverse_sqrt_spd(b.P)).norm();
  if (enforce_checks && out.max_backup_input > prm.u_max - prm.delta_sat) {
    throw ValidationError("di_bundle: backup law saturates inside the backup set (sqrt(rho)||K P^-1/2|| = " +
                          std::to_string(out.max_backup_input) + " exceeds the identity core " +
                          std::to_string(prm.u_max - prm.delta_sat) + ")");
  }
  const double x1_extent = std::sqrt(prm.rho * b.P.inverse()(0, 0));
  if (enforce_checks && x1_extent > prm.x_max) {
    throw ValidationError("di_bundle: backup set leaves the safe set (max |x1| = " +
                          std::to_string(x1_extent) + ")");
  }

  b.k_b = detail::di_linear_sat_law(prm.K, prm.u_max, prm.delta_sat);
  b.backup_unsaturated = [k = prm.K, umax = prm.u_max, dl = prm.delta_sat](const Vec& x) {
    return in_sat_core(-k.dot(x), -umax, umax, dl);
  };
  b.expanders["backup"] = b.k_b;
  b.expanders["linear"] = detail::di_linear_sat_law(prm.ke_scale * prm.K, prm.u_max, prm.delta_sat);
  b.expanders["time_optimal"] = di_time_optimal_law(prm.beta, prm.u_max, prm.delta_sat);
  b.default_expander = "linear";
  b.k_e_param = di_param_law(prm.u_max, prm.delta_sat);
  b.theta0 = prm.ke_scale * prm.K;
  b.theta_bounds = InputBox(Vec::Constant(2, 0.0), Vec::Constant(2, 1e3));

  const double tgt = prm.nominal_target, kp = prm.nominal_kp, kd = prm.nominal_kd;
  const double umax = prm.u_max, dl = prm.delta_sat;
  b.nominal.n = 2;
  b.nominal.m = 1;
  b.nominal.value = [=](const Vec& x, const Vec&) {
    return Vec::Constant(1, smooth_sat(-kp * (x(0) - tgt) - kd * x(1), -umax, umax, dl));
  };
  b.nominal.dx = [=](const Vec& x, const Vec&) {
    const double d = smooth_sat_grad(-kp * (x(0) - tgt) - kd * x(1), -umax, umax, dl);
    Mat j(1, 2);
    j << -kp * d, -kd * d;
    return j;
  };

  b.eps = prm.eps;
  b.cfg = IntegratorConfig{prm.horizon, prm.steps};
  return out;
}

/**
 * Exact viability kernel of the wall constraint for |u| <= u_max: the
 * braking distance max(x2, 0)^2 / (2 u_max) must fit before each wall.
 */
inline bool di_viability_oracle(const Vec& x, double x_max, double u_max = 1.0) {
  const double up = std::max(x(1), 0.0);
  const double down = std::max(-x(1), 0.0);
  return x(0) + up * up / (2.0 * u_max) <= x_max && x(0) - down * down / (2.0 * u_max) >= -x_max;
}

}  // namespace gbcbf
