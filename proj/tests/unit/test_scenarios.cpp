// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "trajcl/error.hpp"
#include "trajcl/label_audit.hpp"
#include "trajcl/scenarios.hpp"

using namespace trajcl;

namespace {

SceneShape shape() { return {5, 10, 3, 0.1}; }

int label_of(const Sample& s) {
  LabelUseScope scope(LabelUse::evaluation);
  return s.task_label();
}

double heading_change(const Sample& s) {
  // Angle between velocity at t_c and the chord from t_c to the endpoint.
  const AgentState& last = s.scene().tv_history.back();
  const Vec2 chord = s.truth().endpoint - last.position();
  return std::atan2(last.vx * chord.y - last.vy * chord.x, last.vx * chord.x + last.vy * chord.y);
}

}  // namespace

TEST(Scenarios, GeneratesRequestedCountAndIsDeterministic) {
  for (MotionKind k : {MotionKind::straight, MotionKind::arc, MotionKind::turn}) {
    const TaskSpec spec = default_task(k, 25, 4);
    const auto a = generate_task(spec, shape(), 3);
    ASSERT_EQ(a.size(), 25u);
    EXPECT_EQ(a, generate_task(spec, shape(), 3));
    for (const Sample& s : a) {
      EXPECT_EQ(label_of(s), 3);
      EXPECT_NO_THROW(validate_scene(s.scene(), shape()));
      EXPECT_GE(s.truth().speed_v, 0.0);
    }
    TaskSpec other = spec;
    other.seed = 5;
    EXPECT_NE(a, generate_task(other, shape(), 3));
  }
}

TEST(Scenarios, FamiliesCurveAsSpecified) {
  TaskSpec straight = default_task(MotionKind::straight, 40, 1);
  TaskSpec arc = default_task(MotionKind::arc, 40, 1);
  straight.noise_sigma = 0.0;
  arc.noise_sigma = 0.0;
  for (const Sample& s : generate_task(straight, shape())) EXPECT_NEAR(heading_change(s), 0.0, 1e-9);
  for (const Sample& s : generate_task(arc, shape())) EXPECT_GT(heading_change(s), 0.01);

  TaskSpec right = default_task(MotionKind::turn, 40, 2);
  right.noise_sigma = 0.0;
  right.turn_angle = {-0.5 * std::numbers::pi, -0.4 * std::numbers::pi};
  for (const Sample& s : generate_task(right, shape())) EXPECT_LT(heading_change(s), -0.01);
}

TEST(Scenarios, SpeedWithinRange) {
  TaskSpec spec = default_task(MotionKind::straight, 30, 7);
  spec.noise_sigma = 0.0;
  spec.speed = {3.0, 4.0};
  for (const Sample& s : generate_task(spec, shape())) {
    EXPECT_GE(s.truth().speed_v, 3.0 - 1e-9);
    EXPECT_LE(s.truth().speed_v, 4.0 + 1e-9);
  }
}

TEST(Scenarios, StreamOrderAndLabels) {
  StreamSpec spec;
  spec.shape = shape();
  spec.seed = 2;
  spec.tasks = {default_task(MotionKind::straight, 7, 1), default_task(MotionKind::turn, 5, 2)};
  const auto stream = build_stream(spec);
  ASSERT_EQ(stream.size(), 12u);
  for (std::size_t i = 0; i < stream.size(); ++i) EXPECT_EQ(label_of(stream[i]), i < 7 ? 1 : 2);
  EXPECT_EQ(stream, build_stream(spec));
}

TEST(Scenarios, InvalidSpecs) {
  TaskSpec spec = default_task(MotionKind::arc, 0, 1);
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.n_samples = 3;
  spec.speed = {5.0, 4.0};
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(parse_motion("zigzag"), ConfigError);
  EXPECT_EQ(parse_motion("turn"), MotionKind::turn);
}

TEST(Csv, RoundTripPreservesWindows) {
  const TrackTable table = generate_task_tracks(default_task(MotionKind::arc, 6, 3), shape(), 2, 100);
  std::stringstream buf;
  write_csv(buf, table);
  const TrackTable back = read_csv(buf);
  ASSERT_EQ(back.tracks.size(), table.tracks.size());
  const auto a = extract_windows(table, shape()).samples;
  const auto b = extract_windows(back, shape()).samples;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 6u);
}

TEST(Csv, WindowsNeighborsAndGaps) {
  const SceneShape sh{2, 2, 2, 0.1};
  TrackTable t;
  RawTrack tv{1, true, 1, {}};
  for (std::int64_t f : {0, 1, 2, 3, 4, 6, 7, 8, 9}) tv.rows.push_back({f, {static_cast<double>(f), 0.0, 1.0, 0.0}});
  RawTrack far{2, false, 1, {}};
  RawTrack near{3, false, 1, {}};
  for (std::int64_t f = 0; f < 10; ++f) {
    far.rows.push_back({f, {static_cast<double>(f), 9.0, 1.0, 0.0}});
    near.rows.push_back({f, {static_cast<double>(f), -2.0, 1.0, 0.0}});
  }
  t.tracks = {tv, far, near};
  const WindowResult w = extract_windows(t, sh);
  // Runs of 5 and 4 consecutive frames: windows of 4 frames -> 2 + 1.
  EXPECT_EQ(w.samples.size(), 3u);
  EXPECT_EQ(w.gaps, 1u);
  const Scene& s = w.samples.front().scene();
  ASSERT_EQ(s.sv_mask, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(s.sv_histories[0].back().y, -2.0);  // nearest first
  EXPECT_EQ(s.sv_histories[1].back().y, 9.0);
  EXPECT_EQ(w.samples.front().truth().endpoint, (Vec2{3.0, 0.0}));
  EXPECT_DOUBLE_EQ(w.samples.front().truth().speed_v, 1.0);
}

TEST(Csv, ParseErrorsCarryLineNumbers) {
  std::istringstream missing("track_id,frame,x,y,vx,vy,agent_role\n1,0,0,0,0,0,tv\n");
  EXPECT_THROW(read_csv(missing), ParseError);

  std::istringstream bad(std::string(kCsvHeader) + "\n1,0,0,0,1,0,tv,1\n1,1,abc,0,1,0,tv,1\n");
  try {
    read_csv(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }

  std::istringstream short_row(std::string(kCsvHeader) + "\n1,0,0,0,1\n");
  EXPECT_THROW(read_csv(short_row), ParseError);

  std::istringstream role(std::string(kCsvHeader) + "\n1,0,0,0,1,0,bus,1\n");
  EXPECT_THROW(read_csv(role), ParseError);
}

TEST(Csv, AcceptsReorderedColumnsAndCrlf) {
  std::istringstream in(
      "\xEF\xBB\xBF"
      "frame,track_id,agent_role,task_label,x,y,vx,vy\r\n0,4,tv,1,1.5,2,0,0\r\n1,4,tv,1,2.5,2,0,0\r\n");
  const TrackTable t = read_csv(in);
  ASSERT_EQ(t.tracks.size(), 1u);
  EXPECT_EQ(t.tracks[0].id, 4);
  EXPECT_TRUE(t.tracks[0].is_target);
  EXPECT_EQ(t.tracks[0].rows[1].state.x, 2.5);
}
