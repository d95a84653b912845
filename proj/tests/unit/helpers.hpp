// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "trajcl/learner.hpp"
#include "trajcl/scenarios.hpp"

namespace trajcl::test_util {

// Scene of a TV driving along +x at `speed`, no neighbors.
inline Scene straight_scene(const SceneShape& shape, double speed, Vec2 start = {0.0, 0.0}) {
  Scene s;
  for (std::size_t t = 0; t < shape.t_obs; ++t) {
    const double x = start.x + speed * shape.dt * static_cast<double>(t);
    s.tv_history.push_back({x, start.y, speed, 0.0});
  }
  s.sv_histories.assign(shape.k_sv, Track(shape.t_obs));
  s.sv_mask.assign(shape.k_sv, 0);
  s.t_c = static_cast<std::int64_t>(shape.t_obs) - 1;
  return s;
}

inline PredictorConfig small_model(std::uint64_t seed = 3) {
  PredictorConfig c;
  c.shape = {4, 10, 2, 0.1};
  c.hidden_dims = {12};
  c.grid.rows_h = 6;
  c.grid.cols_w = 6;
  c.grid.origin = {-2.0, -6.0};
  c.grid.cell_size = 2.0;
  c.seed = seed;
  return c;
}

// Two-task stream on the small model's shape: straight then turn.
inline std::vector<Sample> two_task_stream(std::size_t per_task, std::uint64_t seed = 9) {
  StreamSpec spec;
  spec.shape = small_model().shape;
  spec.seed = seed;
  TaskSpec a = default_task(MotionKind::straight, per_task, seed + 1);
  TaskSpec b = default_task(MotionKind::turn, per_task, seed + 2);
  a.speed = {2.0, 4.0};
  b.speed = {2.0, 4.0};
  spec.tasks = {a, b};
  return build_stream(spec);
}

}  // namespace trajcl::test_util
