#include "gbcbf/qp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gbcbf;

namespace {

void split(const std::vector<HalfSpace>& cons, Mat& a, Vec& b) {
  const int m = cons.empty() ? 0 : static_cast<int>(cons[0].a.size());
  a.resize(static_cast<Eigen::Index>(cons.size()), m);
  b.resize(static_cast<Eigen::Index>(cons.size()));
  for (std::size_t i = 0; i < cons.size(); ++i) {
    a.row(i) = cons[i].a.transpose();
    b(i) = cons[i].b;
  }
}

}  // namespace

TEST(DenseQp, UnconstrainedOptimumIsKept) {
  const Vec u0 = (Vec(2) << 0.2, -0.3).finished();
  const auto sol = solve_dense_qp(u0, Mat::Identity(2, 2), {{(Vec(2) << 1, 0).finished(), -1.0}});
  ASSERT_TRUE(sol.optimal);
  EXPECT_EQ(sol.u, u0);
  EXPECT_EQ(sol.iterations, 0);
}

TEST(DenseQp, ClampToBox) {
  const InputBox box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  const auto sol = solve_dense_qp(Vec::Constant(1, 2.0), Mat::Identity(1, 1), box_halfspaces(box));
  ASSERT_TRUE(sol.optimal);
  EXPECT_DOUBLE_EQ(sol.u(0), 1.0);
}

TEST(DenseQp, HalfSpaceProjectionMatchesAnalyticAndGridOracles) {
  const InputBox box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  auto cons = box_halfspaces(box);
  cons.push_back({(Vec(2) << 1, 1).finished(), 1.0});
  const auto sol = solve_dense_qp(Vec::Zero(2), Mat::Identity(2, 2), cons);
  ASSERT_TRUE(sol.optimal);
  EXPECT_NEAR(sol.u(0), 0.5, 1e-12);
  EXPECT_NEAR(sol.u(1), 0.5, 1e-12);

  double best = 1e300;
  Vec best_u(2);
  for (int i = 0; i <= 2000; ++i) {
    for (int j = 0; j <= 2000; ++j) {
      const double u1 = -1.0 + i * 1e-3, u2 = -1.0 + j * 1e-3;
      if (u1 + u2 < 1.0 - 1e-12) continue;
      const double obj = u1 * u1 + u2 * u2;
      if (obj < best) {
        best = obj;
        best_u << u1, u2;
      }
    }
  }
  EXPECT_LE((sol.u - best_u).norm(), 2e-3);
}

TEST(DenseQp, ReportsInfeasibility) {
  std::vector<HalfSpace> cons{{Vec::Constant(1, 1.0), 1.0}, {Vec::Constant(1, -1.0), 0.0}};
  const auto sol = solve_dense_qp(Vec::Zero(1), Mat::Identity(1, 1), cons);
  EXPECT_FALSE(sol.optimal);
  EXPECT_FALSE(sol.message.empty());
}

TEST(DenseQp, DuplicateAndParallelRowsDoNotCycle) {
  std::vector<HalfSpace> cons;
  for (int k = 0; k < 6; ++k) cons.push_back({(Vec(2) << 1, 1).finished(), 1.0});
  cons.push_back({(Vec(2) << 2, 2).finished(), 2.0});
  cons.push_back({(Vec(2) << 1, 0).finished(), 0.2});
  const auto sol = solve_dense_qp(Vec::Zero(2), Mat::Identity(2, 2), cons);
  ASSERT_TRUE(sol.optimal);
  EXPECT_NEAR(sol.u(0), 0.5, 1e-12);
  EXPECT_NEAR(sol.u(1), 0.5, 1e-12);
}

TEST(DenseQp, RandomInstancesMatchKktEnumeration) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(1, 3), nrows(0, 6);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int m = dim(rng);
    const InputBox box(Vec::Constant(m, -1.0), Vec::Constant(m, 1.0));
    auto cons = box_halfspaces(box);
    const int k = nrows(rng);
    // rows built to be feasible at a random interior point
    const Vec feas = oracle::random_vec(rng, m, -0.8, 0.8);
    for (int r = 0; r < k; ++r) {
      const Vec a = oracle::random_vec(rng, m, -1.0, 1.0);
      cons.push_back({a, a.dot(feas) - std::abs(oracle::random_vec(rng, 1, 0.0, 0.5)(0))});
    }
    const Mat w = oracle::random_spd(rng, m);
    const Vec u0 = oracle::random_vec(rng, m, -3.0, 3.0);
    const auto sol = solve_dense_qp(u0, w, cons);
    ASSERT_TRUE(sol.optimal) << sol.message;
    Mat a;
    Vec b;
    split(cons, a, b);
    Vec ref;
    ASSERT_TRUE(oracle::kkt_enumeration(u0, w, a, b, ref));
    EXPECT_LE((sol.u - ref).lpNorm<Eigen::Infinity>(), 1e-9);
    ++solved;
  }
  EXPECT_EQ(solved, 300);
}

TEST(DenseQp, RejectsBadInputs) {
  EXPECT_THROW(solve_dense_qp(Vec::Zero(2), Mat::Identity(3, 3), {}), InvalidArgument);
  Mat w(2, 2);
  w << 1, 0, 0, -1;
  const auto sol = solve_dense_qp(Vec::Zero(2), w, {});
  EXPECT_FALSE(sol.optimal);
  EXPECT_NE(sol.message.find("positive definite"), std::string::npos);
}
