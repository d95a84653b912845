// SPDX-License-Identifier: Apache-2.0
#include "trajcl/scenarios.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "trajcl/error.hpp"
#include "trajcl/rng.hpp"

namespace trajcl {
namespace {

struct Kinematics {
  Vec2 position;
  Vec2 velocity;
};

Kinematics on_arc(double v, double kappa, double t) {
  if (kappa == 0.0) return {{v * t, 0.0}, {v, 0.0}};
  const double phi = v * kappa * t;
  return {{std::sin(phi) / kappa, (1.0 - std::cos(phi)) / kappa}, {v * std::cos(phi), v * std::sin(phi)}};
}

// Motion in the canonical frame: at t = 0 (the current step) the vehicle is
// at the origin heading +x. Negative t is history.
struct Motion {
  MotionKind kind;
  double speed;
  double curvature;   // signed for arcs, magnitude only for turns
  double turn_angle;  // signed, turn only

  Kinematics at(double t) const {
    switch (kind) {
      case MotionKind::straight:
        return on_arc(speed, 0.0, t);
      case MotionKind::arc:
        return on_arc(speed, curvature, t);
      case MotionKind::turn: {
        if (t <= 0.0 || curvature == 0.0 || turn_angle == 0.0) return on_arc(speed, 0.0, t);
        const double kappa = std::copysign(std::abs(curvature), turn_angle);
        const double turn_time = std::abs(turn_angle) / (speed * std::abs(curvature));
        if (t <= turn_time) return on_arc(speed, kappa, t);
        const Kinematics end = on_arc(speed, kappa, turn_time);
        const Vec2 dir{std::cos(turn_angle), std::sin(turn_angle)};
        return {end.position + (speed * (t - turn_time)) * dir, speed * dir};
      }
    }
    return {};
  }
};

double draw(Rng& rng, Range r) { return rng.uniform(r.lo, r.hi); }

struct Pose {
  Vec2 origin;
  Vec2 heading;
  Vec2 apply(Vec2 p) const {
    return origin + Vec2{heading.x * p.x - heading.y * p.y, heading.y * p.x + heading.x * p.y};
  }
  Vec2 rotate(Vec2 v) const { return {heading.x * v.x - heading.y * v.y, heading.y * v.x + heading.x * v.y}; }
};

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

template <class T>
T parse_field(std::string_view text, std::size_t line, std::string_view column) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (!text.empty() && text.front() == '+') ++first;
  }
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || text.empty()) {
    throw ParseError("cannot parse " + std::string(column) + " value '" + std::string(text) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string_view motion_name(MotionKind kind) noexcept {
  switch (kind) {
    case MotionKind::straight: return "straight";
    case MotionKind::arc: return "arc";
    case MotionKind::turn: return "turn";
  }
  return "?";
}

MotionKind parse_motion(std::string_view name) {
  for (MotionKind k : {MotionKind::straight, MotionKind::arc, MotionKind::turn}) {
    if (motion_name(k) == name) return k;
  }
  throw ConfigError("unknown motion kind '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  if (n_samples < 1) throw ConfigError("task needs at least one sample");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  for (const auto& [name, r] : {std::pair{"speed", speed}, std::pair{"curvature", curvature},
                                std::pair{"turn_angle", turn_angle}}) {
    if (!(r.lo <= r.hi)) throw ConfigError(std::string("degenerate ") + name + " range (min > max)");
  }
  if (speed.lo < 0.0) throw ConfigError("speed range must be non-negative");
}

TaskSpec default_task(MotionKind kind, std::size_t n_samples, std::uint64_t seed) {
  TaskSpec spec;
  spec.kind = kind;
  spec.n_samples = n_samples;
  spec.seed = seed;
  switch (kind) {
    case MotionKind::straight:
      spec.speed = {6.0, 8.5};
      spec.curvature = {0.0, 0.0};
      spec.turn_angle = {0.0, 0.0};
      break;
    case MotionKind::arc:
      spec.speed = {5.0, 7.0};
      spec.curvature = {1.0 / 25.0, 1.0 / 15.0};
      spec.turn_angle = {0.0, 0.0};
      break;
    case MotionKind::turn:
      spec.speed = {4.0, 7.0};
      spec.curvature = {1.0 / 12.0, 1.0 / 8.0};
      spec.turn_angle = {-0.5 * std::numbers::pi, 0.5 * std::numbers::pi};
      break;
  }
  return spec;
}

TrackTable generate_task_tracks(const TaskSpec& spec, const SceneShape& shape, int task_label,
                                std::int64_t first_track_id) {
  spec.validate();
  shape.validate();
  Rng rng(spec.seed);
  TrackTable table;
  const auto obs = static_cast<std::int64_t>(shape.t_obs);
  const auto span_frames = static_cast<std::int64_t>(shape.t_obs + shape.t_pred);
  std::int64_t next_id = first_track_id;

  for (std::size_t k = 0; k < spec.n_samples; ++k) {
    const std::int64_t base = static_cast<std::int64_t>(k) * span_frames;
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Pose pose{{rng.uniform(-200.0, 200.0), rng.uniform(-200.0, 200.0)}, {std::cos(theta), std::sin(theta)}};
    const Motion tv{spec.kind, draw(rng, spec.speed), draw(rng, spec.curvature), draw(rng, spec.turn_angle)};

    RawTrack target{next_id++, true, task_label, {}};
    for (std::int64_t f = 0; f < span_frames; ++f) {
      const double t = static_cast<double>(f - (obs - 1)) * shape.dt;
      const Kinematics kin = tv.at(t);
      const Vec2 p = pose.apply(kin.position);
      const Vec2 v = pose.rotate(kin.velocity);
      target.rows.push_back({base + f, {p.x + rng.normal(0.0, spec.noise_sigma),
                                        p.y + rng.normal(0.0, spec.noise_sigma), v.x, v.y}});
    }
    table.tracks.push_back(std::move(target));

    // Neighbors follow the same family with their own speed, offset along
    // and across the lane.
    const std::size_t n_neighbors = rng.index(shape.k_sv + 1);
    for (std::size_t n = 0; n < n_neighbors; ++n) {
      const Motion sv{spec.kind, draw(rng, spec.speed), tv.curvature, tv.turn_angle};
      const double lane = 3.5 * (static_cast<double>(rng.index(3)) - 1.0);
      double along = rng.uniform(5.0, 25.0) * (rng.index(2) == 0 ? -1.0 : 1.0);
      const Vec2 offset{along, lane};
      RawTrack neighbor{next_id++, false, task_label, {}};
      for (std::int64_t f = 0; f < obs; ++f) {
        const double t = static_cast<double>(f - (obs - 1)) * shape.dt;
        const Kinematics kin = sv.at(t);
        const Vec2 p = pose.apply(kin.position + offset);
        const Vec2 v = pose.rotate(kin.velocity);
        neighbor.rows.push_back({base + f, {p.x + rng.normal(0.0, spec.noise_sigma),
                                            p.y + rng.normal(0.0, spec.noise_sigma), v.x, v.y}});
      }
      table.tracks.push_back(std::move(neighbor));
    }
  }
  return table;
}

WindowResult extract_windows(const TrackTable& table, const SceneShape& shape) {
  shape.validate();
  WindowResult result;
  const std::size_t window = shape.t_obs + shape.t_pred;
  const auto obs = static_cast<std::int64_t>(shape.t_obs);

  // frame -> tracks with a row at that frame
  std::unordered_map<std::int64_t, std::vector<std::size_t>> present;
  for (std::size_t t = 0; t < table.tracks.size(); ++t) {
    for (const TrackRow& row : table.tracks[t].rows) present[row.frame].push_back(t);
  }

  // Row of `track` at `frame`, or nullptr.
  auto row_at = [&](const RawTrack& track, std::int64_t frame) -> const TrackRow* {
    auto it = std::lower_bound(track.rows.begin(), track.rows.end(), frame,
                               [](const TrackRow& r, std::int64_t f) { return r.frame < f; });
    return (it != track.rows.end() && it->frame == frame) ? &*it : nullptr;
  };

  for (std::size_t t = 0; t < table.tracks.size(); ++t) {
    const RawTrack& track = table.tracks[t];
    if (!track.is_target) continue;
    const std::vector<TrackRow>& rows = track.rows;
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
      const bool breaks = i == rows.size() || rows[i].frame != rows[i - 1].frame + 1;
      if (!breaks) continue;
      if (i < rows.size()) ++result.gaps;
      for (std::size_t s = run_start; s + window <= i; ++s) {
        Scene scene;
        for (std::size_t k = 0; k < shape.t_obs; ++k) scene.tv_history.push_back(rows[s + k].state);
        const TrackRow& now = rows[s + shape.t_obs - 1];
        const TrackRow& end = rows[s + window - 1];
        scene.t_c = now.frame;

        std::vector<std::pair<double, std::size_t>> candidates;
        if (auto it = present.find(now.frame); it != present.end()) {
          for (std::size_t other : it->second) {
            if (other == t) continue;
            const RawTrack& nb = table.tracks[other];
            bool complete = true;
            for (std::int64_t f = now.frame - obs + 1; f <= now.frame && complete; ++f) {
              complete = row_at(nb, f) != nullptr;
            }
            if (!complete) continue;
            const double d = (row_at(nb, now.frame)->state.position() - now.state.position()).norm();
            candidates.emplace_back(d, other);
          }
        }
        std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
          return a.first < b.first || (a.first == b.first && table.tracks[a.second].id < table.tracks[b.second].id);
        });

        scene.sv_histories.assign(shape.k_sv, Track(shape.t_obs));
        scene.sv_mask.assign(shape.k_sv, 0);
        for (std::size_t slot = 0; slot < std::min(shape.k_sv, candidates.size()); ++slot) {
          const RawTrack& nb = table.tracks[candidates[slot].second];
          for (std::size_t k = 0; k < shape.t_obs; ++k) {
            scene.sv_histories[slot][k] = row_at(nb, now.frame - obs + 1 + static_cast<std::int64_t>(k))->state;
          }
          scene.sv_mask[slot] = 1;
        }

        const GroundTruth truth{end.state.position(), now.state.velocity().norm()};
        result.samples.emplace_back(std::move(scene), truth, track.task_label);
      }
      run_start = i;
    }
  }
  return result;
}

std::vector<Sample> generate_task(const TaskSpec& spec, const SceneShape& shape, int task_label) {
  return extract_windows(generate_task_tracks(spec, shape, task_label), shape).samples;
}

void shuffle_in_place(std::vector<Sample>& samples, std::uint64_t seed) {
  Rng rng(seed);
  std::shuffle(samples.begin(), samples.end(), rng.engine());
}

std::vector<Sample> build_stream(const StreamSpec& spec) {
  std::vector<Sample> stream;
  for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
    std::vector<Sample> task = generate_task(spec.tasks[i], spec.shape, static_cast<int>(i + 1));
    shuffle_in_place(task, Rng::derive(spec.seed, i));
    stream.insert(stream.end(), std::make_move_iterator(task.begin()), std::make_move_iterator(task.end()));
  }
  return stream;
}

void write_csv(std::ostream& out, const TrackTable& table) {
  out << kCsvHeader << '\n';
  for (const RawTrack& track : table.tracks) {
    const char* role = track.is_target ? "tv" : "sv";
    for (const TrackRow& row : track.rows) {
      out << track.id << ',' << row.frame << ',' << format_number(row.state.x) << ','
          << format_number(row.state.y) << ',' << format_number(row.state.vx) << ','
          << format_number(row.state.vy) << ',' << role << ',' << track.task_label << '\n';
    }
  }
}

TrackTable read_csv(std::istream& in) {
  static constexpr std::array<std::string_view, 8> kColumns{"track_id", "frame", "x", "y",
                                                           "vx", "vy", "agent_role", "task_label"};
  TrackTable table;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return table;  // empty file
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const std::vector<std::string_view> header = split(line);
  std::array<std::size_t, 8> column{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) throw ParseError("missing required column '" + std::string(kColumns[c]) + "'", 1);
    column[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::unordered_map<std::int64_t, std::size_t> index_of;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string_view> f = split(line);
    if (f.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                       line_no);
    }
    const auto id = parse_field<std::int64_t>(f[column[0]], line_no, kColumns[0]);
    TrackRow row;
    row.frame = parse_field<std::int64_t>(f[column[1]], line_no, kColumns[1]);
    row.state.x = parse_field<double>(f[column[2]], line_no, kColumns[2]);
    row.state.y = parse_field<double>(f[column[3]], line_no, kColumns[3]);
    row.state.vx = parse_field<double>(f[column[4]], line_no, kColumns[4]);
    row.state.vy = parse_field<double>(f[column[5]], line_no, kColumns[5]);
    const std::string_view role = f[column[6]];
    if (role != "tv" && role != "sv") throw ParseError("agent_role must be 'tv' or 'sv'", line_no);
    const int label = parse_field<int>(f[column[7]], line_no, kColumns[7]);
    if (label < 1) throw ParseError("task_label must be >= 1", line_no);
    if (!std::isfinite(row.state.x) || !std::isfinite(row.state.y) || !std::isfinite(row.state.vx) ||
        !std::isfinite(row.state.vy)) {
      throw ParseError("non-finite state value", line_no);
    }

    auto [it, inserted] = index_of.try_emplace(id, table.tracks.size());
    if (inserted) table.tracks.push_back({id, role == "tv", label, {}});
    RawTrack& track = table.tracks[it->second];
    if (track.is_target != (role == "tv")) throw ParseError("track changes agent_role", line_no);
    if (track.task_label != label) throw ParseError("track changes task_label", line_no);
    track.rows.push_back(row);
  }

  for (RawTrack& track : table.tracks) {
    std::stable_sort(track.rows.begin(), track.rows.end(),
                     [](const TrackRow& a, const TrackRow& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < track.rows.size(); ++i) {
      if (track.rows[i].frame == track.rows[i - 1].frame) {
        throw ParseError("track " + std::to_string(track.id) + " repeats frame " +
                             std::to_string(track.rows[i].frame),
                         0);
      }
    }
  }
  return table;
}

IngestResult ingest_csv(const std::filesystem::path& path, const SceneShape& shape) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  WindowResult windows = extract_windows(read_csv(in), shape);
  return {std::move(windows.samples), windows.gaps};
}

}  // namespace trajcl
