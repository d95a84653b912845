// SPDX-License-Identifier: Apache-2.0
#include "trajcl/types.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "trajcl/error.hpp"
#include "trajcl/label_audit.hpp"

namespace trajcl {
namespace {

bool finite_state(const AgentState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.vx) && std::isfinite(s.vy);
}

}  // namespace

void SceneShape::validate() const {
  if (t_obs < 2) throw ConfigError("t_obs must be at least 2");
  if (t_pred < 1) throw ConfigError("t_pred must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
}

void validate_scene(const Scene& scene, const SceneShape& shape) {
  if (scene.tv_history.size() != shape.t_obs) {
    throw ConfigError("tv_history has " + std::to_string(scene.tv_history.size()) +
                      " steps, expected " + std::to_string(shape.t_obs));
  }
  if (scene.sv_histories.size() != shape.k_sv || scene.sv_mask.size() != shape.k_sv) {
    throw ConfigError("scene must carry exactly " + std::to_string(shape.k_sv) + " neighbor slots");
  }
  if (!std::all_of(scene.tv_history.begin(), scene.tv_history.end(), finite_state)) {
    throw ConfigError("tv_history contains non-finite values");
  }
  for (std::size_t k = 0; k < shape.k_sv; ++k) {
    const Track& track = scene.sv_histories[k];
    if (track.size() != shape.t_obs) throw ConfigError("neighbor track length mismatch");
    if (!std::all_of(track.begin(), track.end(), finite_state)) {
      throw ConfigError("neighbor track contains non-finite values");
    }
    if (!scene.sv_mask[k] &&
        !std::all_of(track.begin(), track.end(), [](const AgentState& s) { return s == AgentState{}; })) {
      throw ConfigError("masked neighbor slot must be zero-filled");
    }
  }
}

Sample::Sample(Scene scene, GroundTruth truth, int task_label)
    : scene_(std::move(scene)), truth_(truth), task_label_(task_label) {
  if (task_label_ < 1) throw ConfigError("task_label must be >= 1");
  if (!(truth_.speed_v >= 0.0)) throw ConfigError("speed_v must be non-negative");
  if (!std::isfinite(truth_.endpoint.x) || !std::isfinite(truth_.endpoint.y)) {
    throw ConfigError("ground-truth endpoint must be finite");
  }
}

int Sample::task_label() const noexcept {
  detail::note_label_read();
  return task_label_;
}

void GridSpec::validate() const {
  if (rows_h < 2 || cols_w < 2) throw ConfigError("grid needs at least 2 rows and 2 columns");
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ConfigError("cell_size must be positive");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) throw ConfigError("grid origin must be finite");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Heatmap::Heatmap(GridSpec spec, std::vector<double> logits)
    : spec_(spec), logits_(std::move(logits)) {
  if (logits_.size() != spec_.cell_count()) {
    throw ConfigError("heatmap has " + std::to_string(logits_.size()) + " logits, grid needs " +
                      std::to_string(spec_.cell_count()));
  }
  if (!std::all_of(logits_.begin(), logits_.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("heatmap logits must be finite");
  }
}

std::vector<double> Heatmap::probabilities() const { return softmax(logits_); }

ResultMatrix::ResultMatrix(std::size_t n_tasks)
    : n_(n_tasks), values_(n_tasks * n_tasks, 0.0), defined_(n_tasks * n_tasks, 0) {}

std::size_t ResultMatrix::slot(std::size_t i, std::size_t j) const {
  if (i < 1 || i > n_ || j < 1 || j > i) {
    throw Error("result matrix index (" + std::to_string(i) + ", " + std::to_string(j) +
                ") outside the lower triangle of a " + std::to_string(n_) + "-task matrix");
  }
  return (i - 1) * n_ + (j - 1);
}

void ResultMatrix::set(std::size_t after_task, std::size_t tested_task, double value) {
  if (!(value >= 0.0)) throw Error("result matrix values must be non-negative");
  const std::size_t s = slot(after_task, tested_task);
  values_[s] = value;
  defined_[s] = 1;
}

bool ResultMatrix::has(std::size_t after_task, std::size_t tested_task) const {
  if (after_task < 1 || after_task > n_ || tested_task < 1 || tested_task > after_task) return false;
  return defined_[slot(after_task, tested_task)] != 0;
}

double ResultMatrix::at(std::size_t after_task, std::size_t tested_task) const {
  const std::size_t s = slot(after_task, tested_task);
  if (!defined_[s]) {
    throw Error("result matrix entry (" + std::to_string(after_task) + ", " +
                std::to_string(tested_task) + ") is undefined");
  }
  return values_[s];
}

TargetFrame TargetFrame::of(const Scene& scene) {
  TargetFrame frame;
  if (scene.tv_history.empty()) return frame;
  const AgentState& now = scene.tv_history.back();
  frame.origin = now.position();
  Vec2 dir = now.velocity();
  if (dir.norm() < 1e-9) dir = now.position() - scene.tv_history.front().position();
  const double n = dir.norm();
  if (n >= 1e-9) frame.heading = (1.0 / n) * dir;
  return frame;
}

}  // namespace trajcl
