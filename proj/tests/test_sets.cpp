#include "gbcbf/benchmarks/double_integrator.hpp"
#include "gbcbf/benchmarks/quadrotor.hpp"
#include "gbcbf/sets.hpp"

#include <gtest/gtest.h>

using namespace gbcbf;

namespace {

const ProblemBundle& di() {
  static const ProblemBundle b = di_bundle().bundle;
  return b;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

GridSpec small_grid(int nx, int ny) {
  GridSpec g;
  g.axes = {0, 1};
  g.bounds = {{-1.2, 1.2}, {-2.0, 2.0}};
  g.resolution = {nx, ny};
  g.slice = Vec::Zero(2);
  return g;
}

std::vector<GridCell> collect(const GridSpec& g, Variant v, const std::string& e, int threads) {
  std::vector<GridCell> out;
  grid_scan(g, di(), v, e, [&](const std::vector<GridCell>& row) { out.insert(out.end(), row.begin(), row.end()); },
            threads);
  return out;
}

}  // namespace

TEST(Variants, ParseAndPrint) {
  for (Variant v : {Variant::bcbf, Variant::gb, Variant::agb}) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("gbcbf"), InvalidArgument);
}

TEST(ImplicitSet, BackupSetIsInsideEveryVariant) {
  const Mat map = std::sqrt(di().rho) * inverse_sqrt_spd(di().P);
  for (int i = 0; i < 24; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 24;
    const Vec x = 0.99 * map * v2(std::cos(a), std::sin(a));
    EXPECT_TRUE(implicit_membership(x, di(), Variant::bcbf).inside);
    EXPECT_TRUE(implicit_membership(x, di(), Variant::gb, "linear").inside);
    EXPECT_TRUE(implicit_membership(x, di(), Variant::gb, "time_optimal").inside);
    EXPECT_TRUE(implicit_membership(x, di(), Variant::agb).inside);
  }
}

TEST(ImplicitSet, UnsafeStatesAreOutside) {
  for (const Vec& x : {v2(1.05, 0.0), v2(-1.1, 0.3), v2(1.5, -2.0)}) {
    for (Variant v : {Variant::bcbf, Variant::gb, Variant::agb}) {
      const auto rec = implicit_membership(x, di(), v);
      EXPECT_FALSE(rec.inside);
      EXPECT_LT(rec.traj_margin, 0.0);
    }
  }
}

TEST(ImplicitSet, NonViableStateIsOutside) {
  // the braking distance from (0.95, 1.5) overshoots the wall for every law
  ASSERT_FALSE(di_viability_oracle(v2(0.95, 1.5), 1.0));
  for (Variant v : {Variant::bcbf, Variant::gb, Variant::agb})
    EXPECT_FALSE(implicit_membership(v2(0.95, 1.5), di(), v).inside);
  EXPECT_FALSE(implicit_membership(v2(0.95, 1.5), di(), Variant::gb, "time_optimal").inside);
}

TEST(ImplicitSet, ExpanderStrictlyEnlargesBackupSet) {
  // along x2 = 0.3, some states outside C_B are certified by the gb flow
  int strict = 0;
  for (int i = 0; i <= 100; ++i) {
    const Vec x = v2(-1.0 + 0.02 * i, 0.3);
    const auto gb = implicit_membership(x, di(), Variant::gb, "linear");
    if (gb.inside) {
      EXPECT_TRUE(di_viability_oracle(x, 1.0)) << x.transpose();
    }
    if (gb.inside && di().h_b.value(x) < 0.0) ++strict;
  }
  EXPECT_GT(strict, 0);
}

TEST(ImplicitSet, DivergedFlowGivesNegativeInfinity) {
  ControlLaw blowup;
  blowup.n = 2;
  blowup.m = 1;
  blowup.value = [](const Vec& x, const Vec&) { return Vec::Constant(1, 1e6 * std::exp(std::min(x(1), 700.0))); };
  blowup.dx = [](const Vec&, const Vec&) { return Mat::Zero(1, 2); };
  ProblemBundle b = di();
  b.cfg = IntegratorConfig{50.0, 100};
  const auto rec = implicit_membership(v2(0.0, 1.0), b, blowup);
  EXPECT_FALSE(rec.inside);
  EXPECT_EQ(rec.term_margin, -std::numeric_limits<double>::infinity());
}

TEST(GridScan, InsideBackupSetGrid) {
  GridSpec g;
  g.axes = {0, 1};
  g.bounds = {{-0.05, 0.05}, {-0.05, 0.05}};
  g.resolution = {3, 3};
  g.slice = Vec::Zero(2);
  int cells = 0;
  grid_scan(g, di(), Variant::gb, "linear", [&](const std::vector<GridCell>& row) {
    for (const auto& c : row) {
      EXPECT_TRUE(c.rec.inside);
      ++cells;
    }
  });
  EXPECT_EQ(cells, 9);
}

TEST(GridScan, RowMajorOrderAndCoordinates) {
  const GridSpec g = small_grid(5, 4);
  const auto cells = collect(g, Variant::bcbf, "", 1);
  ASSERT_EQ(cells.size(), 20u);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(cells[i].row, static_cast<int>(i) / 5);
    EXPECT_EQ(cells[i].col, static_cast<int>(i) % 5);
  }
  EXPECT_EQ(cells.front().x(0), -1.2);
  EXPECT_EQ(cells.front().x(1), -2.0);
  EXPECT_EQ(cells.back().x(0), 1.2);
  EXPECT_EQ(cells.back().x(1), 2.0);
  EXPECT_DOUBLE_EQ(cells[2].x(0), 0.0);
}

TEST(GridScan, ThreadCountDoesNotChangeResults) {
  const GridSpec g = small_grid(9, 5);
  const auto a = collect(g, Variant::gb, "linear", 1);
  const auto b = collect(g, Variant::gb, "linear", 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].rec.traj_margin, b[i].rec.traj_margin);
    EXPECT_EQ(a[i].rec.term_margin, b[i].rec.term_margin);
  }
}

TEST(GridScan, RejectsBadSpecs) {
  auto g = small_grid(0, 3);
  EXPECT_THROW(collect(g, Variant::bcbf, "", 1), InvalidArgument);
  g = small_grid(3, 3);
  g.axes = {0, 0};
  EXPECT_THROW(collect(g, Variant::bcbf, "", 1), InvalidArgument);
  g = small_grid(3, 3);
  g.axes = {0, 2};
  EXPECT_THROW(collect(g, Variant::bcbf, "", 1), InvalidArgument);
  g = small_grid(3, 3);
  g.slice = Vec::Zero(3);
  EXPECT_THROW(collect(g, Variant::bcbf, "", 1), InvalidArgument);
}

TEST(GridScan, SingleAxisSlice) {
  GridSpec g;
  g.axes = {1};
  g.bounds = {{-0.1, 0.1}};
  g.resolution = {3};
  g.slice = v2(0.02, 0.0);
  const auto cells = collect(g, Variant::bcbf, "", 1);
  ASSERT_EQ(cells.size(), 3u);
  for (const auto& c : cells) EXPECT_EQ(c.x(0), 0.02);
  EXPECT_EQ(cells[1].x(1), 0.0);
}

TEST(ImplicitSet, QuadHoverInsideAllVariants) {
  const auto q = quad_bundle();
  Vec s = Vec::Zero(6);
  s(0) = q.params.x_hover;
  s(1) = q.params.z_hover;
  for (Variant v : {Variant::bcbf, Variant::gb, Variant::agb}) EXPECT_TRUE(implicit_membership(s, q.bundle, v).inside);
  s(1) = -0.2;
  EXPECT_FALSE(implicit_membership(s, q.bundle, Variant::gb).inside);
}
