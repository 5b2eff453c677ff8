#pragma once

#include "gbcbf/filter.hpp"

namespace gbcbf {

// Augmented state xa = (x, theta); theta is driven directly by u_theta.

/// f_a = [f(x); 0_p], g_a = [[g(x), 0], [0, I_p]].
inline SystemModel augment_system(const SystemModel& base, int p) {
  require(p >= 1, "augment_system: p must be at least 1 (use the non-adaptive path for p = 0)");
  const int n = base.n;
  const int m = base.m;
  SystemModel aug;
  aug.n = n + p;
  aug.m = m + p;
  aug.f = [base, n, p](const Vec& xa) {
    Vec out = Vec::Zero(n + p);
    out.head(n) = base.f(xa.head(n));
    return out;
  };
  aug.g = [base, n, m, p](const Vec& xa) {
    Mat out = Mat::Zero(n + p, m + p);
    out.topLeftCorner(n, m) = base.g(xa.head(n));
    out.bottomRightCorner(p, p).setIdentity();
    return out;
  };
  aug.df_dx = [base, n, p](const Vec& xa) {
    Mat out = Mat::Zero(n + p, n + p);
    out.topLeftCorner(n, n) = base.df_dx(xa.head(n));
    return out;
  };
  if (!base.constant_input_matrix()) {
    aug.dgk_dx = [base, n, m, p](const Vec& xa) {
      std::vector<Mat> out(m + p, Mat::Zero(n + p, n + p));
      const std::vector<Mat> dg = base.dgk_dx(xa.head(n));
      for (int k = 0; k < m; ++k) out[k].topLeftCorner(n, n) = dg[k];
      return out;
    };
  }
  return aug;
}

/// Lifts k(x, theta) to the augmented state as [k(x, theta); 0_p].
inline ControlLaw lift_law(const ControlLaw& law, int p) {
  require(law.dim_params == 0 || law.dim_params == p, "lift_law: parameter count mismatch");
  const int n = law.n;
  const int m = law.m;
  ControlLaw out;
  out.n = n + p;
  out.m = m + p;
  out.dim_params = 0;
  const bool uses_theta = law.dim_params == p;
  out.value = [law, n, m, p, uses_theta](const Vec& xa, const Vec&) {
    Vec u = Vec::Zero(m + p);
    u.head(m) = law.value(xa.head(n), uses_theta ? Vec(xa.tail(p)) : Vec());
    return u;
  };
  out.dx = [law, n, m, p, uses_theta](const Vec& xa, const Vec&) {
    Mat j = Mat::Zero(m + p, n + p);
    const Vec th = uses_theta ? Vec(xa.tail(p)) : Vec();
    j.topLeftCorner(m, n) = law.dx(xa.head(n), th);
    if (uses_theta) j.topRightCorner(m, p) = law.jac_theta(xa.head(n), th);
    return j;
  };
  return out;
}

/// h_a(x, theta) = h(x).
inline ScalarField lift_field(const ScalarField& field, int n, int p) {
  ScalarField out;
  out.value = [field, n](const Vec& xa) { return field.value(xa.head(n)); };
  out.grad = [field, n, p](const Vec& xa) {
    RowVec gr = RowVec::Zero(n + p);
    gr.head(n) = field.grad(xa.head(n));
    return gr;
  };
  return out;
}

inline Vec augment_state(const Vec& x, const Vec& theta) {
  Vec xa(x.size() + theta.size());
  xa << x, theta;
  return xa;
}

struct AugmentedProblem {
  SystemModel base;
  ControlLaw k_e;  // parameterized expander, dim_params = p
  ControlLaw k_b;
  ControlLaw nominal;
  ScalarField h;
  ScalarField h_b;
  InputBox box;        // bounds on u
  InputBox rate_box;   // bounds on u_theta
  Mat weight;          // (m + p) x (m + p)
  double eps = 1e-3;
  double gamma = 1.0;
  ClassKappa alpha{1.0};
  ClassKappa alpha_b{1.0};
  IntegratorConfig cfg;
  double tightening = 0.0;
  double outside_tol = 1e-3;

  int p() const { return k_e.dim_params; }
  int n() const { return base.n; }
  int m() const { return base.m; }

  void validate() const {
    require(p() >= 1, "AugmentedProblem: expander must be parameterized");
    require(gamma >= 0.0, "AugmentedProblem: gamma must be nonnegative");
    require(rate_box.dim() == p(), "AugmentedProblem: rate box has wrong dimension");
    require(box.dim() == m(), "AugmentedProblem: input box has wrong dimension");
    require(weight.rows() == m() + p() && weight.cols() == m() + p(),
            "AugmentedProblem: weight has wrong shape");
    Eigen::LLT<Mat> llt(weight);
    require(llt.info() == Eigen::Success, "AugmentedProblem: weight must be positive definite");
  }
};

/// Switched controller on the augmented state: [k_s(x, theta); 0_p].
inline SwitchedController augmented_switched(const AugmentedProblem& prob) {
  SwitchedController sc;
  sc.k_e = lift_law(prob.k_e, prob.p());
  sc.k_b = lift_law(prob.k_b, prob.p());
  sc.h_b = lift_field(prob.h_b, prob.n(), prob.p());
  sc.eps = prob.eps;
  return sc;
}

/**
 * Steepest-ascent direction of h_b(phi_x(T)) in theta:
 *   gamma * Pi (grad h_b(phi_a(T)) Phi_a(T) g_a(xa))^T,  Pi = [0_{p x m}  I_p].
 */
inline Vec adaptation_direction(const FlowGrid& flow, const ScalarField& h_b_aug,
                                const SystemModel& aug_sys, const Vec& xa, int p, double gamma) {
  require(flow.has_sensitivity(), "adaptation_direction: flow carries no sensitivities");
  const RowVec row = h_b_aug.grad(flow.terminal_state()) * flow.terminal_sens() * aug_sys.g(xa);
  return gamma * row.tail(p).transpose();
}

struct AdaptiveResult {
  FilterResult filter;  // u holds (u, u_theta)
  Vec k_theta;
};

/**
 * One control period of the adaptive filter: integrate the augmented switched
 * flow, compute the ascent direction, and solve over (u, u_theta) with
 * nominal (k_p(x), k_theta). The fallback applies (k_s(x, theta), 0), which
 * leaves theta frozen.
 */
inline AdaptiveResult adaptive_filter_step(const AugmentedProblem& prob, const Vec& xa) {
  const auto t0 = std::chrono::steady_clock::now();
  prob.validate();
  const int n = prob.n();
  const int m = prob.m();
  const int p = prob.p();
  require(xa.size() == n + p, "adaptive_filter_step: augmented state has wrong dimension");
  require(xa.allFinite(), "adaptive_filter_step: state is not finite");

  const SystemModel aug = augment_system(prob.base, p);
  const SwitchedController sc = augmented_switched(prob);
  const ControlLaw ks = as_control_law(sc);
  const ScalarField ha = lift_field(prob.h, n, p);
  const ScalarField hba = sc.h_b;
  const InputBox box = InputBox::product(prob.box, prob.rate_box);

  AdaptiveResult out;
  Vec u_fb = ks.value(xa, Vec());  // theta block is zero
  auto finish = [&](AdaptiveResult r) {
    r.filter.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };

  FlowGrid flow;
  try {
    flow = integrate_flow(aug, ks, xa, Vec(), prob.cfg, true);
  } catch (const DivergedFlowError& e) {
    out.k_theta = Vec::Zero(p);
    out.filter.status = FilterStatus::fallback;
    out.filter.u = box.clamp(u_fb);
    out.filter.traj_margin = -std::numeric_limits<double>::infinity();
    out.filter.term_margin = -std::numeric_limits<double>::infinity();
    out.filter.message = e.what();
    return finish(std::move(out));
  }

  out.k_theta = adaptation_direction(flow, hba, aug, xa, p, prob.gamma);
  Vec u_nom(m + p);
  u_nom << prob.nominal.value(xa.head(n), Vec()), out.k_theta;

  const FlowMargins fm = flow_margins(flow, ha, hba);
  const auto rows =
      assemble_constraints(flow, ha, hba, aug, xa, prob.alpha, prob.alpha_b, prob.tightening);
  out.filter = solve_filter_qp(u_nom, prob.weight, rows, box, u_fb);
  if (out.filter.status == FilterStatus::optimal &&
      (fm.traj < -prob.outside_tol || fm.term < -prob.outside_tol)) {
    out.filter.status = FilterStatus::fallback;
    out.filter.u = box.clamp(u_fb);
    out.filter.message = "state outside the implicit safe set";
  }
  if (out.filter.status == FilterStatus::fallback) out.filter.u.tail(p).setZero();
  out.filter.traj_margin = fm.traj;
  out.filter.term_margin = fm.term;
  return finish(std::move(out));
}

}  // namespace gbcbf
