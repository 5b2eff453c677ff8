#include "gbcbf/benchmarks/double_integrator.hpp"
#include "gbcbf/sim.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gbcbf;

namespace {

FilterProblem di_problem(Variant v, const std::string& expander = "") {
  static const ProblemBundle b = di_bundle().bundle;
  SimSettings s;
  s.variant = v;
  s.expander = expander;
  return make_filter_problem(b, s);
}

std::vector<ConstraintRow> rows_at(const FilterProblem& p, const Vec& x) {
  const FlowGrid flow = integrate_flow(p.sys, p.flow_law, x, Vec(), p.cfg, true);
  return assemble_constraints(flow, p.h, p.h_b, p.sys, x, p.alpha, p.alpha_b, p.tightening);
}

}  // namespace

TEST(Constraints, CountAndFirstRowIsVanillaCbf) {
  auto p = di_problem(Variant::gb, "linear");
  for (int n : {1, 7, 200}) {
    p.cfg.steps = n;
    const Vec x = (Vec(2) << 0.5, 0.5).finished();
    const auto rows = rows_at(p, x);
    ASSERT_EQ(rows.size(), static_cast<std::size_t>(n + 2));
    EXPECT_EQ(rows.back().kind, RowKind::terminal);
    const RowVec dh = p.h.grad(x);
    EXPECT_EQ(rows[0].a(0), (dh * p.sys.g(x))(0));
    EXPECT_EQ(rows[0].b, -p.alpha(p.h(x)) - dh.dot(p.sys.f(x)));
  }
}

TEST(Constraints, RowsMatchFiniteDifferencesThroughTheFlow) {
  const auto p = di_problem(Variant::gb, "linear");
  const Vec x = (Vec(2) << 0.5, 0.5).finished();
  const auto rows = rows_at(p, x);
  const double d = 1e-6;
  auto flow_at = [&](const Vec& s) { return integrate_flow(p.sys, p.flow_law, s, Vec(), p.cfg, false); };
  std::vector<FlowGrid> plus, minus;
  for (int j = 0; j < 2; ++j) {
    Vec xp = x, xm = x;
    xp(j) += d;
    xm(j) -= d;
    plus.push_back(flow_at(xp));
    minus.push_back(flow_at(xm));
  }
  const FlowGrid base = flow_at(x);
  const Vec fx = p.sys.f(x);
  const Mat gx = p.sys.g(x);
  int compared = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool term = rows[i].kind == RowKind::terminal;
    const ScalarField& field = term ? p.h_b : p.h;
    const std::size_t node = static_cast<std::size_t>(rows[i].node);
    RowVec grad(2);
    for (int j = 0; j < 2; ++j) grad(j) = (field(plus[j].states[node]) - field(minus[j].states[node])) / (2 * d);
    const double a_ref = (grad * gx)(0);
    const double b_ref = -(term ? p.alpha_b : p.alpha)(field(base.states[node])) - grad.dot(fx);
    const double scale = std::max(1.0, std::abs(a_ref));
    EXPECT_LE(std::abs(rows[i].a(0) - a_ref), 1e-3 * scale) << "row " << i;
    EXPECT_LE(std::abs(rows[i].b - b_ref), 1e-3 * std::max(1.0, std::abs(b_ref))) << "row " << i;
    ++compared;
  }
  EXPECT_EQ(compared, 202);
}

TEST(FilterQp, FeasibleNominalIsReturned) {
  const InputBox box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  std::vector<ConstraintRow> rows{{Vec::Constant(1, 1.0), -0.5, RowKind::trajectory, 0}};
  const auto r = solve_filter_qp(Vec::Constant(1, 0.25), Mat::Identity(1, 1), rows, box);
  EXPECT_EQ(r.status, FilterStatus::optimal);
  EXPECT_EQ(r.u(0), 0.25);
}

TEST(FilterQp, NoRowsClampsToBox) {
  const InputBox box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  const auto r = solve_filter_qp(Vec::Constant(1, 2.0), Mat::Identity(1, 1), {}, box);
  EXPECT_EQ(r.status, FilterStatus::optimal);
  EXPECT_EQ(r.u(0), 1.0);
}

TEST(FilterQp, TwoInputsSingleRow) {
  const InputBox box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  std::vector<ConstraintRow> rows{{(Vec(2) << 1, 1).finished(), 1.0, RowKind::trajectory, 0}};
  const auto r = solve_filter_qp(Vec::Zero(2), Mat::Identity(2, 2), rows, box);
  EXPECT_EQ(r.status, FilterStatus::optimal);
  EXPECT_NEAR(r.u(0), 0.5, 1e-12);
  EXPECT_NEAR(r.u(1), 0.5, 1e-12);
}

TEST(FilterQp, InfeasibleUsesFallbackInsideBox) {
  const InputBox box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  std::vector<ConstraintRow> rows{{Vec::Constant(1, 1.0), 2.0, RowKind::trajectory, 0}};
  const auto r = solve_filter_qp(Vec::Constant(1, 0.0), Mat::Identity(1, 1), rows, box, Vec::Constant(1, -5.0));
  EXPECT_EQ(r.status, FilterStatus::fallback);
  EXPECT_EQ(r.u(0), -1.0);
}

TEST(FilterStep, BackupNominalDeepInsideBackupSet) {
  auto p = di_problem(Variant::bcbf);
  p.nominal = p.flow_law;
  p.alpha = ClassKappa{0.1};
  p.alpha_b = ClassKappa{0.1};
  const Vec x = (Vec(2) << 0.05, -0.05).finished();
  const auto r = filter_step(p, x);
  EXPECT_EQ(r.status, FilterStatus::optimal);
  EXPECT_EQ(r.u(0), p.flow_law(x)(0));
  for (double m : r.margins) EXPECT_GT(m, 0.0);
}

TEST(FilterStep, OutsideImplicitSetFallsBack) {
  const auto p = di_problem(Variant::gb, "linear");
  const Vec x = (Vec(2) << 0.9, 1.5).finished();  // cannot brake before the wall
  const auto r = filter_step(p, x);
  EXPECT_EQ(r.status, FilterStatus::fallback);
  EXPECT_LT(std::min(r.traj_margin, r.term_margin), 0.0);
}

TEST(FilterStep, WallPushIsClippedByActiveRow) {
  const auto p = di_problem(Variant::bcbf);
  const Vec x = (Vec(2) << 0.461399, 0.663088).finished();
  const auto r = filter_step(p, x);
  ASSERT_EQ(r.status, FilterStatus::optimal);
  const double u_nom = p.nominal(x)(0);
  EXPECT_LT(r.u(0), u_nom);
  const double tightest = *std::min_element(r.margins.begin(), r.margins.end());
  EXPECT_GE(tightest, -1e-8);
  EXPECT_LE(tightest, 1e-6);

  // dense 1-D grid oracle over the box
  const auto rows = rows_at(p, x);
  double best = 1e300, best_u = 0.0;
  for (int i = 0; i <= 2000000; ++i) {
    const double u = -1.0 + i * 1e-6;
    bool ok = true;
    for (const auto& row : rows) {
      if (row.a(0) * u < row.b - 1e-12 * (1.0 + std::abs(row.b))) {
        ok = false;
        break;
      }
    }
    if (ok && (u - u_nom) * (u - u_nom) < best) {
      best = (u - u_nom) * (u - u_nom);
      best_u = u;
    }
  }
  EXPECT_NEAR(r.u(0), best_u, 2e-6);
}

TEST(FilterStep, FallbackControllerKeepsTheStateSafe) {
  const ProblemBundle b = di_bundle().bundle;
  const ControlLaw ks = as_control_law(b.switched("linear"));
  std::mt19937_64 rng(23);
  int tested = 0;
  while (tested < 30) {
    const Vec x = oracle::random_vec(rng, 2, -1.0, 1.0);
    if (!implicit_membership(x, b, ks).inside) continue;
    ++tested;
    // sample-and-hold with a fine control period
    Vec s = x;
    const double dt = 0.002;
    const int steps = static_cast<int>(std::lround(b.cfg.horizon / dt));
    double min_h = b.h(s);
    for (int k = 0; k < steps; ++k) {
      s = advance_plant(b.sys, s, b.box.clamp(ks(s)), dt, 4);
      min_h = std::min(min_h, b.h(s));
    }
    EXPECT_GE(min_h, -1e-3) << x.transpose();
    EXPECT_GE(b.h_b(s), -1e-3) << x.transpose();
  }
}
