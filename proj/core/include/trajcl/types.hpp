// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace trajcl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

/// Kinematic state of one agent at one 10 Hz step (meters, meters/second).
struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

using Track = std::vector<AgentState>;

/// Observation/prediction horizons and neighbor slot count shared by the
/// generator, the ingestion path and the predictor input layout.
struct SceneShape {
  std::size_t t_obs = 10;
  std::size_t t_pred = 30;
  std::size_t k_sv = 4;
  double dt = 0.1;

  std::size_t input_dim() const { return (1 + k_sv) * t_obs * 4; }
  void validate() const;
  friend bool operator==(const SceneShape&, const SceneShape&) = default;
};

/// Model input: target-vehicle history plus K_sv fixed neighbor slots.
/// Masked-out slots hold zero-filled tracks.
struct Scene {
  Track tv_history;
  std::vector<Track> sv_histories;
  std::vector<std::uint8_t> sv_mask;
  std::int64_t t_c = 0;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Throws ConfigError when the scene does not match `shape` or holds
/// non-finite values.
void validate_scene(const Scene& scene, const SceneShape& shape);

struct GroundTruth {
  Vec2 endpoint;         // position at t_c + t_pred
  double speed_v = 0.0;  // target speed at t_c
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// One stream element. The task label is evaluation metadata: reads go
/// through an audited accessor (see label_audit.hpp).
class Sample {
 public:
  Sample(Scene scene, GroundTruth truth, int task_label);

  const Scene& scene() const noexcept { return scene_; }
  const GroundTruth& truth() const noexcept { return truth_; }
  int task_label() const noexcept;

  friend bool operator==(const Sample& a, const Sample& b) {
    return a.scene_ == b.scene_ && a.truth_ == b.truth_ && a.task_label_ == b.task_label_;
  }

 private:
  Scene scene_;
  GroundTruth truth_;
  int task_label_;
};

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Heatmap geometry in the target-centric frame. Cell (0,0) sits at the
/// origin corner; rows advance along +y, columns along +x; storage is
/// row-major.
struct GridSpec {
  std::size_t rows_h = 32;
  std::size_t cols_w = 32;
  Vec2 origin{-4.0, -16.0};
  double cell_size = 1.0;

  std::size_t cell_count() const { return rows_h * cols_w; }
  std::size_t index(Cell c) const { return c.row * cols_w + c.col; }
  Cell cell_at(std::size_t index) const { return {index / cols_w, index % cols_w}; }
  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class Heatmap {
 public:
  Heatmap(GridSpec spec, std::vector<double> logits);

  const GridSpec& spec() const noexcept { return spec_; }
  std::span<const double> logits() const noexcept { return logits_; }
  double logit(Cell c) const { return logits_[spec_.index(c)]; }

  /// Softmax of the logits, row-major.
  std::vector<double> probabilities() const;

 private:
  GridSpec spec_;
  std::vector<double> logits_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// R(i, j): error on task j measured after training through task i, for
/// 1 <= j <= i <= N. Task indices are 1-based.
class ResultMatrix {
 public:
  ResultMatrix() = default;
  explicit ResultMatrix(std::size_t n_tasks);

  std::size_t n_tasks() const noexcept { return n_; }
  void set(std::size_t after_task, std::size_t tested_task, double value);
  bool has(std::size_t after_task, std::size_t tested_task) const;
  double at(std::size_t after_task, std::size_t tested_task) const;

 private:
  std::size_t slot(std::size_t i, std::size_t j) const;

  std::size_t n_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> defined_;
};

/// Target-centric frame: origin at the TV position at t_c, +x along the TV
/// velocity at t_c. Falls back to the history displacement, then to the
/// world +x axis, when the TV is stationary.
struct TargetFrame {
  Vec2 origin;
  Vec2 heading{1.0, 0.0};

  static TargetFrame of(const Scene& scene);

  Vec2 rotate_to_local(Vec2 v) const { return {v.dot(heading), heading.x * v.y - heading.y * v.x}; }
  Vec2 rotate_to_world(Vec2 v) const {
    return {heading.x * v.x - heading.y * v.y, heading.y * v.x + heading.x * v.y};
  }
  Vec2 to_local(Vec2 world) const { return rotate_to_local(world - origin); }
  Vec2 to_world(Vec2 local) const { return origin + rotate_to_world(local); }
};

}  // namespace trajcl
