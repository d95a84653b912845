// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "trajcl/types.hpp"

namespace trajcl {

enum class MotionKind { straight, arc, turn };

std::string_view motion_name(MotionKind kind) noexcept;
MotionKind parse_motion(std::string_view name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

/// One synthetic task family.
///  - straight: constant velocity.
///  - arc: constant speed on a circle with signed curvature (left positive).
///  - turn: straight approach, then at t_c the vehicle turns on a circle of
///    curvature |k| until it has rotated by the turn angle (signed, left
///    positive), then drives straight.
struct TaskSpec {
  MotionKind kind = MotionKind::straight;
  std::size_t n_samples = 100;
  double noise_sigma = 0.1;  // meters, on every position
  Range speed{6.0, 8.5};      // m/s
  Range curvature{0.04, 0.066};
  Range turn_angle{-1.75, -1.4};  // radians
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Default ranges for each family: straight-ahead cruising, a left-curving
/// roundabout-like arc, and a slow left or right turn of up to 90 degrees
/// out of a straight approach.
TaskSpec default_task(MotionKind kind, std::size_t n_samples, std::uint64_t seed);

struct StreamSpec {
  std::vector<TaskSpec> tasks;
  std::uint64_t seed = 0;
  SceneShape shape;
};

// Raw trajectory table shared by the generator and the CSV ingestion path.
struct TrackRow {
  std::int64_t frame = 0;
  AgentState state;
};

struct RawTrack {
  std::int64_t id = 0;
  bool is_target = false;
  int task_label = 1;
  std::vector<TrackRow> rows;  // ascending frames
};

struct TrackTable {
  std::vector<RawTrack> tracks;  // first-appearance order
};

struct WindowResult {
  std::vector<Sample> samples;
  std::size_t gaps = 0;  // frame discontinuities skipped inside target tracks
};

/// Slides a (t_obs + t_pred)-frame window along every target track. History
/// is the first t_obs frames, the ground truth the last frame. Neighbors are
/// the other tracks present at every history frame, nearest first at t_c
/// (ties by track id); unused slots are masked and zero-filled.
WindowResult extract_windows(const TrackTable& table, const SceneShape& shape);

/// Raw tracks of one synthetic task. Episode k occupies frames
/// [k * (t_obs + t_pred), (k + 1) * (t_obs + t_pred)); track ids start at
/// `first_track_id`.
TrackTable generate_task_tracks(const TaskSpec& spec, const SceneShape& shape, int task_label = 1,
                                std::int64_t first_track_id = 1);

/// Deterministic samples of one task; labels equal `task_label`.
std::vector<Sample> generate_task(const TaskSpec& spec, const SceneShape& shape = {}, int task_label = 1);

/// Concatenates the tasks in order, each shuffled independently with a
/// sub-stream of the global seed. Task i gets label i + 1.
std::vector<Sample> build_stream(const StreamSpec& spec);

/// Seeded in-place shuffle.
void shuffle_in_place(std::vector<Sample>& samples, std::uint64_t seed);

// CSV schema (header row required, any column order):
//   track_id,frame,x,y,vx,vy,agent_role,task_label
// agent_role is "tv" for target tracks and "sv" otherwise.
inline constexpr std::string_view kCsvHeader = "track_id,frame,x,y,vx,vy,agent_role,task_label";

void write_csv(std::ostream& out, const TrackTable& table);
TrackTable read_csv(std::istream& in);

struct IngestResult {
  std::vector<Sample> samples;
  std::size_t dropped_gaps = 0;
};

/// Reads a CSV file and windows it. Throws ParseError with the line number
/// on malformed rows and on a missing column.
IngestResult ingest_csv(const std::filesystem::path& path, const SceneShape& shape = {});

}  // namespace trajcl
