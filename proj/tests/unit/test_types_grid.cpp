// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "trajcl/error.hpp"
#include "trajcl/grid.hpp"
#include "trajcl/label_audit.hpp"
#include "trajcl/types.hpp"

using namespace trajcl;

TEST(Grid, CellCentersMapBackToTheirCell) {
  GridSpec g;
  for (std::size_t r = 0; r < g.rows_h; ++r) {
    for (std::size_t c = 0; c < g.cols_w; ++c) {
      const Cell cell{r, c};
      EXPECT_EQ(endpoint_to_cell(cell_to_center(cell, g), g), cell);
    }
  }
}

TEST(Grid, RowsFollowYAndColumnsFollowX) {
  GridSpec g;
  g.rows_h = 4;
  g.cols_w = 5;
  g.origin = {10.0, 20.0};
  g.cell_size = 2.0;
  EXPECT_EQ(cell_to_center({0, 0}, g), (Vec2{11.0, 21.0}));
  EXPECT_EQ(cell_to_center({1, 3}, g), (Vec2{17.0, 23.0}));
  EXPECT_EQ(endpoint_to_cell({17.9, 23.9}, g), (Cell{1, 3}));
}

TEST(Grid, OutsidePointsClampToBorder) {
  GridSpec g;
  EXPECT_EQ(endpoint_to_cell({-100.0, -100.0}, g), (Cell{0, 0}));
  EXPECT_EQ(endpoint_to_cell({1e6, 1e6}, g), (Cell{g.rows_h - 1, g.cols_w - 1}));
  EXPECT_EQ(endpoint_to_cell({1e6, -1e6}, g), (Cell{0, g.cols_w - 1}));
}

TEST(Grid, CenterOfOutOfRangeCellThrows) {
  GridSpec g;
  EXPECT_THROW(cell_to_center({g.rows_h, 0}, g), Error);
}

TEST(Grid, RandomPointsInsideLandWithinHalfCellOfCenter) {
  GridSpec g;
  g.cell_size = 1.5;
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> ux(g.origin.x, g.origin.x + g.cols_w * g.cell_size);
  std::uniform_real_distribution<double> uy(g.origin.y, g.origin.y + g.rows_h * g.cell_size);
  for (int k = 0; k < 1000; ++k) {
    const Vec2 p{ux(eng), uy(eng)};
    const Vec2 c = cell_to_center(endpoint_to_cell(p, g), g);
    EXPECT_LE(std::abs(p.x - c.x), 0.5 * g.cell_size + 1e-12);
    EXPECT_LE(std::abs(p.y - c.y), 0.5 * g.cell_size + 1e-12);
  }
}

TEST(Heatmap, RejectsWrongSizeAndNonFinite) {
  GridSpec g;
  g.rows_h = 2;
  g.cols_w = 2;
  EXPECT_THROW(Heatmap(g, {1.0, 2.0}), Error);
  EXPECT_THROW(Heatmap(g, {1.0, 2.0, NAN, 0.0}), NumericError);
}

TEST(Heatmap, SoftmaxIsStableAndNormalized) {
  const std::vector<double> p = softmax(std::vector<double>{1000.0, 1000.0, -1000.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_EQ(p[2], 0.0);
}

TEST(ResultMatrixTest, LowerTriangleOnly) {
  ResultMatrix m(3);
  m.set(2, 1, 4.0);
  EXPECT_TRUE(m.has(2, 1));
  EXPECT_FALSE(m.has(1, 1));
  EXPECT_DOUBLE_EQ(m.at(2, 1), 4.0);
  EXPECT_THROW(m.set(1, 2, 1.0), Error);
  EXPECT_THROW(m.set(0, 1, 1.0), Error);
  EXPECT_THROW(m.set(3, 1, -1.0), Error);
  EXPECT_THROW(m.at(3, 3), Error);
}

TEST(TargetFrameTest, OriginAndHeadingFollowTheTarget) {
  const SceneShape shape;
  Scene s = test_util::straight_scene(shape, 5.0, {3.0, 4.0});
  // Rotate the whole history by 90 degrees.
  for (AgentState& a : s.tv_history) {
    a = {-(a.y - 4.0) + 3.0, (a.x - 3.0) + 4.0, -a.vy, a.vx};
  }
  const TargetFrame f = TargetFrame::of(s);
  EXPECT_NEAR(f.heading.x, 0.0, 1e-12);
  EXPECT_NEAR(f.heading.y, 1.0, 1e-12);
  const Vec2 p = f.to_local({f.origin.x, f.origin.y + 2.0});
  EXPECT_NEAR(p.x, 2.0, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  const Vec2 back = f.to_world(f.to_local({7.0, -1.0}));
  EXPECT_NEAR(back.x, 7.0, 1e-12);
  EXPECT_NEAR(back.y, -1.0, 1e-12);
}

TEST(TargetFrameTest, StationaryTargetFallsBackToDisplacementThenX) {
  SceneShape shape;
  Scene s = test_util::straight_scene(shape, 0.0);
  const TargetFrame still = TargetFrame::of(s);
  EXPECT_EQ(still.heading, (Vec2{1.0, 0.0}));
  for (std::size_t t = 0; t < shape.t_obs; ++t) {
    s.tv_history[t] = {0.0, static_cast<double>(t), 0.0, 0.0};
  }
  const TargetFrame moved = TargetFrame::of(s);
  EXPECT_NEAR(moved.heading.y, 1.0, 1e-12);
}

TEST(SampleTest, ValidatesTruthAndCountsLabelReads) {
  const SceneShape shape;
  const Scene s = test_util::straight_scene(shape, 1.0);
  EXPECT_THROW(Sample(s, {{0.0, 0.0}, -1.0}, 1), Error);
  EXPECT_THROW(Sample(s, {{NAN, 0.0}, 1.0}, 1), Error);
  EXPECT_THROW(Sample(s, {{0.0, 0.0}, 1.0}, 0), Error);

  const Sample ok(s, {{1.0, 0.0}, 1.0}, 2);
  reset_label_reads();
  EXPECT_EQ(ok.task_label(), 2);
  {
    LabelUseScope scope(LabelUse::evaluation);
    EXPECT_EQ(ok.task_label(), 2);
    EXPECT_EQ(current_label_use(), LabelUse::evaluation);
  }
  EXPECT_EQ(current_label_use(), LabelUse::training);
  EXPECT_EQ(label_reads(LabelUse::training), 1u);
  EXPECT_EQ(label_reads(LabelUse::evaluation), 1u);
}

TEST(SceneShapeTest, InputDimension) {
  EXPECT_EQ((SceneShape{10, 30, 4, 0.1}.input_dim()), 200u);
  EXPECT_THROW((SceneShape{1, 30, 4, 0.1}.validate()), ConfigError);
}
