#pragma once

#include "gbcbf/benchmarks/bundle.hpp"
#include "gbcbf/closed_loop.hpp"
#include "gbcbf/lyapunov.hpp"
#include "gbcbf/smooth.hpp"

#include <array>
#include <numbers>

namespace gbcbf {

/// PD gains in the order (Kp_x, Kd_x, Kp_z, Kd_z, Kp_theta, Kd_theta).
using QuadGains = std::array<double, 6>;

inline Vec to_vec(const QuadGains& g) { return Eigen::Map<const Vec>(g.data(), 6); }

struct QuadrotorParams {
  // physical constants
  double g_d = 9.81;
  double J = 0.25;
  double mass = 1.0;
  double F_max = 12.0;
  double M_max = 12.0;
  double rho = 0.03;  // largest round value with hdot_b > 0 on the whole boundary
  double eps = 0.01;
  double horizon = 6.75;
  int steps = 450;
  double gamma = 10.0;
  double kappa = 10.0;

  // landing well: walls at x_L, x_R, floor z_L, open above z_T
  double x_L = -0.6;
  double x_R = 0.6;
  double z_L = 0.0;
  double z_T = 2.0;
  double x_goal = 0.0;
  double z_goal = 0.3;
  double x_hover = 0.0;
  double z_hover = 3.0;

  QuadGains backup_gains{0.3, 1.0, 0.1, 0.8, 10.0, 6.0};
  QuadGains expander_gains{0.3, 1.0, 0.15, 0.8, 10.0, 6.0};
  QuadGains nominal_gains{1.0, 2.0, 1.0, 2.0, 20.0, 8.0};

  double theta_max = 0.6;      // tilt-command saturation [rad]
  double delta_frac = 0.1;     // blend half-width as a fraction of each half-range
  double az_floor_frac = 0.1;  // vertical-acceleration floor as a fraction of g_d
};

struct QuadrotorBundle {
  QuadrotorParams params;
  ProblemBundle bundle;
  ControlLaw backup_pd;  // same law as bundle.k_b
  /// Exact (non-smoothed) polytopic safety function.
  std::function<double(const Vec&)> h_exact;
};

/// Intermediate quantities of the quadrotor PD law at one state.
struct QuadPdTerms {
  double a_x, a_z, a_z_floor, angle, theta_d, thrust_raw, moment_raw;
  Vec u;
  Mat du_dx;      // 2 x 6
  Mat du_dgain;   // 2 x 6
};

/**
 * Cascaded PD law toward (x_t, z_t):
 *   a_x = -Kp_x (x - x_t) - Kd_x xdot,  a_z = -Kp_z (z - z_t) - Kd_z zdot + g
 *   theta_d = sat(atan2(a_x, a_z)),  F = sat(m |(a_x, a_z)|),
 *   M = sat(J (Kp_th (theta - theta_d) + Kd_th thetadot))
 * a_z is floored (smoothly) at az_floor_frac * g before the angle and thrust
 * are formed, keeping the law away from the a_z -> 0 singularity.
 */
inline QuadPdTerms quad_pd_terms(const QuadrotorParams& prm, double x_t, double z_t,
                                 const Vec& s, const Vec& gains) {
  const double kpx = gains(0), kdx = gains(1), kpz = gains(2), kdz = gains(3), kpt = gains(4),
               kdt = gains(5);
  const double ex = s(0) - x_t, ez = s(1) - z_t;
  QuadPdTerms t;
  t.a_x = -kpx * ex - kdx * s(3);
  t.a_z = -kpz * ez - kdz * s(4) + prm.g_d;

  RowVec dax_dx = RowVec::Zero(6), daz_dx = RowVec::Zero(6);
  RowVec dax_dk = RowVec::Zero(6), daz_dk = RowVec::Zero(6);
  dax_dx(0) = -kpx;
  dax_dx(3) = -kdx;
  dax_dk(0) = -ex;
  dax_dk(1) = -s(3);
  daz_dx(1) = -kpz;
  daz_dx(4) = -kdz;
  daz_dk(2) = -ez;
  daz_dk(3) = -s(4);

  const double floor_lo = prm.az_floor_frac * prm.g_d;
  const double floor_delta = 0.5 * floor_lo;
  t.a_z_floor = smooth_floor(t.a_z, floor_lo, floor_delta);
  const double dfloor = smooth_floor_grad(t.a_z, floor_lo, floor_delta);
  const RowVec dazf_dx = dfloor * daz_dx, dazf_dk = dfloor * daz_dk;

  const double r2 = t.a_x * t.a_x + t.a_z_floor * t.a_z_floor;
  const double r = std::sqrt(r2);
  t.angle = std::atan2(t.a_x, t.a_z_floor);
  const RowVec dang_dx = (t.a_z_floor * dax_dx - t.a_x * dazf_dx) / r2;
  const RowVec dang_dk = (t.a_z_floor * dax_dk - t.a_x * dazf_dk) / r2;

  const double th_delta = prm.delta_frac * prm.theta_max;
  t.theta_d = smooth_sat(t.angle, -prm.theta_max, prm.theta_max, th_delta);
  const double dthd = smooth_sat_grad(t.angle, -prm.theta_max, prm.theta_max, th_delta);
  const RowVec dthd_dx = dthd * dang_dx, dthd_dk = dthd * dang_dk;

  t.thrust_raw = prm.mass * r;
  const RowVec dfr_dx = prm.mass * (t.a_x * dax_dx + t.a_z_floor * dazf_dx) / r;
  const RowVec dfr_dk = prm.mass * (t.a_x * dax_dk + t.a_z_floor * dazf_dk) / r;
  const double f_delta = prm.delta_frac * 0.5 * prm.F_max;
  const double thrust = smooth_sat(t.thrust_raw, 0.0, prm.F_max, f_delta);
  const double dthrust = smooth_sat_grad(t.thrust_raw, 0.0, prm.F_max, f_delta);

  t.moment_raw = prm.J * (kpt * (s(2) - t.theta_d) + kdt * s(5));
  RowVec dmr_dx = -prm.J * kpt * dthd_dx;
  dmr_dx(2) += prm.J * kpt;
  dmr_dx(5) += prm.J * kdt;
  RowVec dmr_dk = -prm.J * kpt * dthd_dk;
  dmr_dk(4) += prm.J * (s(2) - t.theta_d);
  dmr_dk(5) += prm.J * s(5);
  const double m_delta = prm.delta_frac * prm.M_max;
  const double moment = smooth_sat(t.moment_raw, -prm.M_max, prm.M_max, m_delta);
  const double dmoment = smooth_sat_grad(t.moment_raw, -prm.M_max, prm.M_max, m_delta);

  t.u = Vec(2);
  t.u << thrust, moment;
  t.du_dx = Mat(2, 6);
  t.du_dx.row(0) = dthrust * dfr_dx;
  t.du_dx.row(1) = dmoment * dmr_dx;
  t.du_dgain = Mat(2, 6);
  t.du_dgain.row(0) = dthrust * dfr_dk;
  t.du_dgain.row(1) = dmoment * dmr_dk;
  return t;
}

/// True when every saturation of the PD law is in its identity core.
inline bool quad_pd_unsaturated(const QuadrotorParams& prm, const QuadPdTerms& t) {
  const double floor_lo = prm.az_floor_frac * prm.g_d;
  return t.a_z >= floor_lo + 0.5 * floor_lo &&
         in_sat_core(t.angle, -prm.theta_max, prm.theta_max, prm.delta_frac * prm.theta_max) &&
         in_sat_core(t.thrust_raw, 0.0, prm.F_max, prm.delta_frac * 0.5 * prm.F_max) &&
         in_sat_core(t.moment_raw, -prm.M_max, prm.M_max, prm.delta_frac * prm.M_max);
}

/// PD law toward (x_t, z_t); fixed gains, or gains taken from theta when parameterized.
inline ControlLaw quad_pd_law(const QuadrotorParams& prm, double x_t, double z_t,
                              const QuadGains& gains, bool parameterized) {
  ControlLaw law;
  law.n = 6;
  law.m = 2;
  law.dim_params = parameterized ? 6 : 0;
  const Vec fixed = to_vec(gains);
  auto pick = [fixed, parameterized](const Vec& th) -> const Vec& { return parameterized ? th : fixed; };
  law.value = [=](const Vec& s, const Vec& th) { return quad_pd_terms(prm, x_t, z_t, s, pick(th)).u; };
  law.dx = [=](const Vec& s, const Vec& th) { return quad_pd_terms(prm, x_t, z_t, s, pick(th)).du_dx; };
  if (parameterized) {
    law.dtheta = [=](const Vec& s, const Vec& th) {
      return quad_pd_terms(prm, x_t, z_t, s, th).du_dgain;
    };
  }
  return law;
}

/// Planar quadrotor: state (x, z, theta, xdot, zdot, thetadot), input (F, M).
inline SystemModel quad_system(const QuadrotorParams& prm) {
  SystemModel sys;
  sys.n = 6;
  sys.m = 2;
  const double g = prm.g_d, mass = prm.mass, J = prm.J;
  sys.f = [g](const Vec& s) {
    Vec out(6);
    out << s(3), s(4), s(5), 0.0, -g, 0.0;
    return out;
  };
  sys.g = [mass, J](const Vec& s) {
    Mat out = Mat::Zero(6, 2);
    out(3, 0) = std::sin(s(2)) / mass;
    out(4, 0) = std::cos(s(2)) / mass;
    out(5, 1) = -1.0 / J;
    return out;
  };
  sys.df_dx = [](const Vec&) {
    Mat out = Mat::Zero(6, 6);
    out(0, 3) = out(1, 4) = out(2, 5) = 1.0;
    return out;
  };
  sys.dgk_dx = [mass](const Vec& s) {
    std::vector<Mat> out(2, Mat::Zero(6, 6));
    out[0](3, 2) = std::cos(s(2)) / mass;
    out[0](4, 2) = -std::sin(s(2)) / mass;
    return out;
  };
  return sys;
}

/// h = smooth_max(smooth_min(x - x_L, x_R - x, z - z_L), z - z_T)
inline ScalarField quad_safety_field(const QuadrotorParams& prm) {
  const double xl = prm.x_L, xr = prm.x_R, zl = prm.z_L, zt = prm.z_T, kappa = prm.kappa;
  ScalarField f;
  f.value = [=](const Vec& s) {
    const std::array<double, 3> inner{s(0) - xl, xr - s(0), s(1) - zl};
    const std::array<double, 2> outer{smooth_min(inner, kappa), s(1) - zt};
    return smooth_max(outer, kappa);
  };
  f.grad = [=](const Vec& s) {
    const std::array<double, 3> inner{s(0) - xl, xr - s(0), s(1) - zl};
    const auto wi = smooth_min_grad(inner, kappa);
    const std::array<double, 2> outer{smooth_min(inner, kappa), s(1) - zt};
    const auto wo = smooth_max_grad(outer, kappa);
    RowVec g = RowVec::Zero(6);
    g(0) = wo[0] * (wi[0] - wi[1]);
    g(1) = wo[0] * wi[2] + wo[1];
    return g;
  };
  return f;
}

/**
 * Builds the landing benchmark. The backup set is the rho-sublevel set of the
 * Lyapunov function of the backup law's linearization at the hover point
 * (Q = I_6). Throws ValidationError when the linearization is not Hurwitz,
 * the box or well geometry is inconsistent, or the hover point is unsafe.
 * Sampled checks of the backup pair live in validate_backup_pair.
 */
inline QuadrotorBundle quad_bundle(const QuadrotorParams& prm = {}) {
  if (!(prm.x_R > prm.x_L)) throw ValidationError("quad_bundle: requires x_R > x_L");
  if (!(prm.z_T > prm.z_L)) throw ValidationError("quad_bundle: requires z_T > z_L");
  require(prm.mass > 0 && prm.J > 0 && prm.F_max > 0 && prm.M_max > 0 && prm.g_d > 0,
          "quad_bundle: physical constants must be positive");
  require(prm.rho > 0 && prm.kappa > 0 && prm.eps > 0, "quad_bundle: rho, kappa, eps must be positive");
  require(prm.theta_max > 0 && prm.theta_max < std::numbers::pi / 2, "quad_bundle: theta_max out of range");
  require(prm.delta_frac > 0 && prm.delta_frac < 1, "quad_bundle: delta_frac must lie in (0, 1)");
  for (double k : prm.backup_gains) require(k > 0, "quad_bundle: backup gains must be positive");

  QuadrotorBundle out;
  out.params = prm;
  ProblemBundle& b = out.bundle;
  b.id = "quadrotor";
  b.sys = quad_system(prm);
  Vec lo(2), hi(2);
  lo << 0.0, -prm.M_max;
  hi << prm.F_max, prm.M_max;
  b.box = InputBox(lo, hi);
  b.h = quad_safety_field(prm);
  out.h_exact = [prm](const Vec& s) {
    const double inner = std::min({s(0) - prm.x_L, prm.x_R - s(0), s(1) - prm.z_L});
    return std::max(inner, s(1) - prm.z_T);
  };

  b.x_eq = Vec::Zero(6);
  b.x_eq(0) = prm.x_hover;
  b.x_eq(1) = prm.z_hover;
  if (b.h(b.x_eq) <= 0.0) throw ValidationError("quad_bundle: hover point lies outside the safe set");

  b.k_b = quad_pd_law(prm, prm.x_hover, prm.z_hover, prm.backup_gains, false);
  out.backup_pd = b.k_b;
  b.backup_unsaturated = [prm](const Vec& s) {
    return quad_pd_unsaturated(prm, quad_pd_terms(prm, prm.x_hover, prm.z_hover, s, to_vec(prm.backup_gains)));
  };
  const Mat a_cl = closed_loop_jacobian(b.sys, b.k_b, b.x_eq);
  try {
    b.P = solve_lyapunov(a_cl, Mat::Identity(6, 6));
  } catch (const LyapunovError& e) {
    throw ValidationError(std::string("quad_bundle: backup linearization is not Hurwitz: ") + e.what());
  }
  b.rho = prm.rho;
  b.h_b = ellipsoid_field(b.x_eq, b.P, prm.rho);

  b.expanders["backup"] = b.k_b;
  b.expanders["pd"] = quad_pd_law(prm, prm.x_hover, prm.z_hover, prm.expander_gains, false);
  b.default_expander = "pd";
  b.k_e_param = quad_pd_law(prm, prm.x_hover, prm.z_hover, prm.expander_gains, true);
  b.theta0 = to_vec(prm.expander_gains);
  b.theta_bounds = InputBox(Vec::Constant(6, 0.01), Vec::Constant(6, 100.0));
  b.nominal = quad_pd_law(prm, prm.x_goal, prm.z_goal, prm.nominal_gains, false);
  b.eps = prm.eps;
  b.cfg = IntegratorConfig{prm.horizon, prm.steps};
  return out;
}

}  // namespace gbcbf
