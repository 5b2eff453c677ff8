#include "gbcbf/benchmarks/double_integrator.hpp"
#include "gbcbf/benchmarks/quadrotor.hpp"
#include "gbcbf/closed_loop.hpp"
#include "gbcbf/lyapunov.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gbcbf;

namespace {

// Hand elimination for the 2x2 case: unknowns (p11, p12, p22) of
// A^T P + P A = -Q with A = [[0, 1], [-a, -b]].
Mat lyap_2x2_companion(double a, double b, const Mat& q) {
  // (1,1): -2a p12 = -q11
  // (1,2): p11 - b p12 - a p22 = -q12
  // (2,2): 2 p12 - 2b p22 = -q22
  const double p12 = q(0, 0) / (2.0 * a);
  const double p22 = (q(1, 1) + 2.0 * p12) / (2.0 * b);
  const double p11 = -q(0, 1) + b * p12 + a * p22;
  Mat p(2, 2);
  p << p11, p12, p12, p22;
  return p;
}

}  // namespace

TEST(Lyapunov, DoubleIntegratorFootnoteGains) {
  Mat a(2, 2);
  a << 0, 1, -2, -1.6;
  const Mat p = solve_lyapunov(a, Mat::Identity(2, 2));
  Mat expect(2, 2);
  expect << 1.3375, 0.25, 0.25, 0.46875;
  EXPECT_LE((p - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((p - lyap_2x2_companion(2.0, 1.6, Mat::Identity(2, 2))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lyapunov, DiagonalCase) {
  const Mat p = solve_lyapunov(-Mat::Identity(2, 2), Mat::Identity(2, 2));
  EXPECT_LE((p - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lyapunov, RejectsNonHurwitz) {
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  EXPECT_THROW(solve_lyapunov(a, Mat::Identity(2, 2)), LyapunovError);
  try {
    solve_lyapunov(a, Mat::Identity(2, 2));
  } catch (const LyapunovError& e) {
    EXPECT_NE(std::string(e.what()).find("Hurwitz"), std::string::npos);
  }
}

TEST(Lyapunov, RandomHurwitzResidualAndDefiniteness) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    Mat a = oracle::random_vec(rng, n * n, -1.0, 1.0).reshaped(n, n);
    // shift the spectrum into the open left half-plane
    const double shift = Eigen::EigenSolver<Mat>(a).eigenvalues().real().maxCoeff() + 0.3;
    a -= shift * Mat::Identity(n, n);
    const Mat q = oracle::random_spd(rng, n);
    const Mat p = solve_lyapunov(a, q);
    const Mat res = a.transpose() * p + p * a + q;
    EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, q.norm()));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(p).eigenvalues().minCoeff(), 0.0);
    EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ClosedLoop, DoubleIntegratorRhs) {
  const auto b = di_bundle().bundle;
  const ControlLaw zero = constant_law(2, Vec::Zero(1));
  EXPECT_EQ(closed_loop_rhs(b.sys, b.k_b, Vec::Zero(2)), Vec::Zero(2));
  EXPECT_EQ(closed_loop_rhs(b.sys, zero, (Vec(2) << 1, 0).finished()), Vec::Zero(2));
  EXPECT_EQ(closed_loop_rhs(b.sys, zero, (Vec(2) << 0, 1).finished()), (Vec(2) << 1, 0).finished());
}

TEST(ClosedLoop, JacobianLinearSaturatedAndFootnoteCase) {
  const auto di = di_bundle();
  const auto& b = di.bundle;
  Mat expect(2, 2);
  expect << 0, 1, -2, -1.6;
  EXPECT_LE((closed_loop_jacobian(b.sys, b.k_b, Vec::Zero(2)) - expect).cwiseAbs().maxCoeff(), 1e-15);
  // deep saturation: the law's derivative vanishes, leaving A
  const Vec far = (Vec(2) << 5.0, 5.0).finished();
  EXPECT_LE((closed_loop_jacobian(b.sys, b.k_b, far) - di.A).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ClosedLoop, JacobianMatchesFiniteDifferencesForAllBenchmarkLaws) {
  std::mt19937_64 rng(8);
  const auto di = di_bundle().bundle;
  const auto qb = quad_bundle().bundle;
  struct Case {
    const ProblemBundle* b;
    ControlLaw law;
    std::string name;
  };
  std::vector<Case> cases;
  for (const auto* b : {&di, &qb}) {
    for (const auto& [name, law] : b->expanders) cases.push_back({b, law, b->id + "/" + name});
    cases.push_back({b, b->nominal, b->id + "/nominal"});
    cases.push_back({b, as_control_law(b->switched(b->default_expander)), b->id + "/switched"});
  }
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      Vec x;
      if (c.b == &di) {
        x = oracle::random_vec(rng, 2, -1.2, 1.2);
      } else {
        x = c.b->x_eq + oracle::random_vec(rng, 6, -0.8, 0.8);
      }
      const Mat j = closed_loop_jacobian(c.b->sys, c.law, x);
      const Mat fd = oracle::central_jacobian(
          [&](const Vec& s) { return closed_loop_rhs(c.b->sys, c.law, s); }, x, 1e-6);
      worst = std::max(worst, (j - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
    EXPECT_LE(worst, 1e-4) << c.name;
  }
}
