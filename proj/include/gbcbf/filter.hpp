#pragma once

#include "gbcbf/flow.hpp"
#include "gbcbf/qp.hpp"

#include <chrono>
#include <optional>

namespace gbcbf {

/// Linear extended class-K function alpha(h) = gain * h.
struct ClassKappa {
  double gain = 1.0;

  explicit ClassKappa(double g = 1.0) : gain(g) {
    require(gain > 0.0, "ClassKappa: gain must be positive");
  }
  double operator()(double h) const { return gain * h; }
};

enum class RowKind { trajectory, terminal };

/// a^T u >= b, produced by one grid node of the flow.
struct ConstraintRow {
  Vec a;
  double b = 0.0;
  RowKind kind = RowKind::trajectory;
  int node = 0;
};

enum class FilterStatus { optimal, fallback };

inline const char* to_string(FilterStatus s) {
  return s == FilterStatus::optimal ? "optimal" : "fallback";
}

struct FilterResult {
  Vec u;
  FilterStatus status = FilterStatus::fallback;
  std::vector<double> margins;  // per row, after normalization
  int iterations = 0;
  double traj_margin = 0.0;  // min_i h(phi(tau_i, x))
  double term_margin = 0.0;  // h_b(phi(T, x))
  double wall_time = 0.0;    // seconds
  std::string message;
};

/**
 * Forward-invariance rows for the implicit set
 *
 *   grad h(phi_i) Phi_i (f(x) + g(x) u) >= -alpha(h(phi_i))          i = 0..N
 *   grad h_b(phi_N) Phi_N (f(x) + g(x) u) >= -alpha_b(h_b(phi_N))
 *
 * rearranged as a^T u >= b. `tightening` is added to every b.
 */
inline std::vector<ConstraintRow> assemble_constraints(const FlowGrid& flow, const ScalarField& h,
                                                       const ScalarField& h_b,
                                                       const SystemModel& sys, const Vec& x,
                                                       const ClassKappa& alpha,
                                                       const ClassKappa& alpha_b,
                                                       double tightening = 0.0) {
  require(flow.has_sensitivity(), "assemble_constraints: flow carries no sensitivities");
  require(flow.nodes() >= 2, "assemble_constraints: flow needs at least two nodes");
  require(x.size() == sys.n && flow.states.front().size() == sys.n,
          "assemble_constraints: state dimension mismatch");
  require(flow.states.front() == x, "assemble_constraints: flow was not computed from this state");

  const Vec fx = sys.f(x);
  const Mat gx = sys.g(x);
  std::vector<ConstraintRow> rows;
  rows.reserve(flow.nodes() + 1);
  for (std::size_t i = 0; i < flow.nodes(); ++i) {
    const Vec& phi = flow.states[i];
    const RowVec dh = h.grad(phi) * flow.sens[i];
    ConstraintRow row;
    row.a = (dh * gx).transpose();
    row.b = -alpha(h(phi)) - dh.dot(fx) + tightening;
    row.kind = RowKind::trajectory;
    row.node = static_cast<int>(i);
    rows.push_back(std::move(row));
  }
  const Vec& phi_t = flow.terminal_state();
  const RowVec dhb = h_b.grad(phi_t) * flow.terminal_sens();
  ConstraintRow term;
  term.a = (dhb * gx).transpose();
  term.b = -alpha_b(h_b(phi_t)) - dhb.dot(fx) + tightening;
  term.kind = RowKind::terminal;
  term.node = static_cast<int>(flow.nodes() - 1);
  rows.push_back(std::move(term));
  return rows;
}

inline constexpr double kRowNormFloor = 1e-12;
inline constexpr double kMarginTol = 1e-8;

/**
 * min (u - u_nom)^T W (u - u_nom) over the box and the rows. Rows are scaled
 * by 1 / (||a|| + 1e-12) before solving. On infeasibility, the iteration cap,
 * or a numerical failure the result carries status fallback and
 * u = fallback_u (clamped to the box), or the clamped nominal when no
 * fallback is supplied.
 */
inline FilterResult solve_filter_qp(const Vec& u_nom, const Mat& w,
                                    const std::vector<ConstraintRow>& rows, const InputBox& box,
                                    const std::optional<Vec>& fallback_u = std::nullopt) {
  const int m = box.dim();
  require(u_nom.size() == m, "solve_filter_qp: nominal input has wrong dimension");
  require(w.rows() == m && w.cols() == m, "solve_filter_qp: weight has wrong shape");
  require((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + w.cwiseAbs().maxCoeff()),
          "solve_filter_qp: weight must be symmetric");

  std::vector<HalfSpace> cons;
  cons.reserve(rows.size() + 2 * m);
  std::vector<double> scale(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].a.size() == m, "solve_filter_qp: row has wrong dimension");
    scale[i] = 1.0 / (rows[i].a.norm() + kRowNormFloor);
    cons.push_back({rows[i].a * scale[i], rows[i].b * scale[i]});
  }
  for (auto& hs : box_halfspaces(box)) cons.push_back(std::move(hs));

  const QpSolution qp = solve_dense_qp(u_nom, w, cons);

  FilterResult out;
  out.iterations = qp.iterations;
  out.message = qp.message;
  auto margins_at = [&](const Vec& u) {
    std::vector<double> mg(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) mg[i] = cons[i].a.dot(u) - cons[i].b;
    return mg;
  };

  if (qp.optimal && qp.u.allFinite()) {
    out.u = box.clamp(qp.u);
    out.margins = margins_at(out.u);
    const bool ok = std::all_of(out.margins.begin(), out.margins.end(),
                                [](double v) { return v >= -kMarginTol; });
    if (ok) {
      out.status = FilterStatus::optimal;
      return out;
    }
    out.message = "solution violates rows after box projection";
  }
  out.status = FilterStatus::fallback;
  out.u = box.clamp(fallback_u ? *fallback_u : u_nom);
  out.margins = margins_at(out.u);
  return out;
}

/// Min trajectory margin and terminal margin of a flow (implicit-set membership).
struct FlowMargins {
  double traj = 0.0;
  double term = 0.0;
  bool inside() const { return traj >= 0.0 && term >= 0.0; }
};

inline FlowMargins flow_margins(const FlowGrid& flow, const ScalarField& h, const ScalarField& h_b) {
  FlowMargins fm;
  fm.traj = std::numeric_limits<double>::infinity();
  for (const Vec& s : flow.states) fm.traj = std::min(fm.traj, h(s));
  fm.term = h_b(flow.terminal_state());
  return fm;
}

/**
 * Everything one control period needs. `flow_law` generates the flow (the
 * backup law for the standard method, the switched law otherwise) and
 * `fallback_law` is applied when the QP cannot be trusted.
 */
struct FilterProblem {
  SystemModel sys;
  ControlLaw flow_law;
  ControlLaw fallback_law;
  ControlLaw nominal;
  ScalarField h;
  ScalarField h_b;
  InputBox box;
  Mat weight;
  ClassKappa alpha{1.0};
  ClassKappa alpha_b{1.0};
  IntegratorConfig cfg;
  double tightening = 0.0;
  // States whose implicit-set margins fall below -outside_tol are handed to
  // the fallback law instead of the QP.
  double outside_tol = 1e-3;
};

inline FilterResult filter_step(const FilterProblem& prob, const Vec& x, const Vec& theta = Vec()) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](FilterResult r) {
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  require(x.size() == prob.sys.n, "filter_step: state has wrong dimension");
  require(x.allFinite(), "filter_step: state is not finite");

  const Vec u_nom = prob.nominal.value(x, Vec());
  FlowGrid flow;
  try {
    flow = integrate_flow(prob.sys, prob.flow_law, x, theta, prob.cfg, true);
  } catch (const DivergedFlowError& e) {
    FilterResult r;
    r.status = FilterStatus::fallback;
    r.u = prob.box.clamp(prob.fallback_law.value(x, theta));
    r.traj_margin = -std::numeric_limits<double>::infinity();
    r.term_margin = -std::numeric_limits<double>::infinity();
    r.message = e.what();
    return finish(std::move(r));
  }
  const FlowMargins fm = flow_margins(flow, prob.h, prob.h_b);
  const Vec u_fb = prob.fallback_law.value(x, theta);

  const auto rows = assemble_constraints(flow, prob.h, prob.h_b, prob.sys, x, prob.alpha,
                                         prob.alpha_b, prob.tightening);
  FilterResult r = solve_filter_qp(u_nom, prob.weight, rows, prob.box, u_fb);
  if (r.status == FilterStatus::optimal &&
      (fm.traj < -prob.outside_tol || fm.term < -prob.outside_tol)) {
    r.status = FilterStatus::fallback;
    r.u = prob.box.clamp(u_fb);
    r.message = "state outside the implicit safe set";
  }
  r.traj_margin = fm.traj;
  r.term_margin = fm.term;
  return finish(std::move(r));
}

}  // namespace gbcbf
