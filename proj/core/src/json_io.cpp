// SPDX-License-Identifier: Apache-2.0
#include "json_io.hpp"

#include <algorithm>
#include <cmath>

namespace trajcl::json_io {

void expect_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + it.key() + "' in " + std::string(where));
    }
  }
}

Json to_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("cannot serialize a non-finite value");
    out.push_back(x);
  }
  return out;
}

std::vector<double> doubles_from(const Json& j, std::string_view where) {
  if (!j.is_array()) throw ParseError(std::string(where) + " must be an array of numbers", 0);
  std::vector<double> out;
  out.reserve(j.size());
  for (const Json& x : j) {
    if (!x.is_number()) throw ParseError(std::string(where) + " must be an array of numbers", 0);
    out.push_back(x.get<double>());
  }
  return out;
}

Json to_json(const SceneShape& s) {
  return {{"t_obs", s.t_obs}, {"t_pred", s.t_pred}, {"k_sv", s.k_sv}, {"dt", s.dt}};
}

SceneShape scene_shape_from(const Json& j) {
  expect_keys(j, "shape", {"t_obs", "t_pred", "k_sv", "dt"});
  SceneShape s;
  read_opt(j, "t_obs", s.t_obs, "shape");
  read_opt(j, "t_pred", s.t_pred, "shape");
  read_opt(j, "k_sv", s.k_sv, "shape");
  read_opt(j, "dt", s.dt, "shape");
  s.validate();
  return s;
}

Json to_json(const GridSpec& g) {
  return {{"rows", g.rows_h}, {"cols", g.cols_w}, {"origin", {g.origin.x, g.origin.y}}, {"cell_size", g.cell_size}};
}

GridSpec grid_from(const Json& j) {
  expect_keys(j, "grid", {"rows", "cols", "origin", "cell_size"});
  GridSpec g;
  read_opt(j, "rows", g.rows_h, "grid");
  read_opt(j, "cols", g.cols_w, "grid");
  read_opt(j, "cell_size", g.cell_size, "grid");
  if (auto it = j.find("origin"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw ConfigError("grid.origin must be [x, y]");
    g.origin = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }
  g.validate();
  return g;
}

Json to_json(const PredictorConfig& c) {
  return {{"shape", to_json(c.shape)},
          {"hidden", c.hidden_dims},
          {"grid", to_json(c.grid)},
          {"seed", c.seed},
          {"position_scale", c.position_scale},
          {"velocity_scale", c.velocity_scale}};
}

PredictorConfig predictor_from(const Json& j) {
  expect_keys(j, "model", {"shape", "hidden", "grid", "seed", "position_scale", "velocity_scale"});
  PredictorConfig c;
  if (auto it = j.find("shape"); it != j.end()) c.shape = scene_shape_from(*it);
  if (auto it = j.find("grid"); it != j.end()) c.grid = grid_from(*it);
  read_opt(j, "hidden", c.hidden_dims, "model");
  read_opt(j, "seed", c.seed, "model");
  read_opt(j, "position_scale", c.position_scale, "model");
  read_opt(j, "velocity_scale", c.velocity_scale, "model");
  c.validate();
  return c;
}

Json to_json(const LossSpec& l) {
  return {{"base", l.base_kind == BaseLossKind::focal ? "focal" : "cross_entropy"},
          {"focal_gamma", l.focal_gamma},
          {"alpha", l.alpha},
          {"beta", l.beta}};
}

LossSpec loss_from(const Json& j) {
  LossSpec l;
  if (auto it = j.find("base"); it != j.end()) {
    const std::string base = it->get<std::string>();
    if (base == "cross_entropy") {
      l.base_kind = BaseLossKind::cross_entropy;
    } else if (base == "focal") {
      l.base_kind = BaseLossKind::focal;
    } else {
      throw ConfigError("unknown base loss '" + base + "'");
    }
  }
  read_opt(j, "focal_gamma", l.focal_gamma, "train");
  read_opt(j, "alpha", l.alpha, "train");
  read_opt(j, "beta", l.beta, "train");
  l.validate();
  return l;
}

Json to_json(const TrainConfig& c) {
  Json loss = to_json(c.loss);
  Json out = {{"lr", c.lr}, {"batch_size", c.batch_size}, {"buffer_total", c.buffer_total}};
  for (auto it = loss.begin(); it != loss.end(); ++it) out[it.key()] = it.value();
  out["replay_batch"] = c.replay_batch;
  out["seed"] = c.seed;
  out["checkpoint_after_each_task"] = c.checkpoint_after_each_task;
  out["compare_count"] = c.compare_count;
  out["cached_scores"] = c.cached_scores;
  out["score_granularity"] = c.score_granularity == ScoreGranularity::per_batch ? "per_batch" : "per_sample";
  out["agem_reference_batch"] = c.agem_reference_batch;
  out["buffers_enabled"] = c.buffers_enabled;
  return out;
}

TrainConfig train_from(const Json& j) {
  expect_keys(j, "train",
              {"lr", "batch_size", "buffer_total", "base", "focal_gamma", "alpha", "beta", "replay_batch", "seed",
               "checkpoint_after_each_task", "compare_count", "cached_scores", "score_granularity",
               "agem_reference_batch", "buffers_enabled"});
  TrainConfig c;
  read_opt(j, "lr", c.lr, "train");
  read_opt(j, "batch_size", c.batch_size, "train");
  read_opt(j, "buffer_total", c.buffer_total, "train");
  c.loss = loss_from(j);
  read_opt(j, "replay_batch", c.replay_batch, "train");
  read_opt(j, "seed", c.seed, "train");
  read_opt(j, "checkpoint_after_each_task", c.checkpoint_after_each_task, "train");
  read_opt(j, "compare_count", c.compare_count, "train");
  read_opt(j, "cached_scores", c.cached_scores, "train");
  if (auto it = j.find("score_granularity"); it != j.end()) {
    const std::string g = it->get<std::string>();
    if (g == "per_sample") {
      c.score_granularity = ScoreGranularity::per_sample;
    } else if (g == "per_batch") {
      c.score_granularity = ScoreGranularity::per_batch;
    } else {
      throw ConfigError("unknown score_granularity '" + g + "'");
    }
  }
  read_opt(j, "agem_reference_batch", c.agem_reference_batch, "train");
  read_opt(j, "buffers_enabled", c.buffers_enabled, "train");
  return c;
}

Json to_json(const TaskSpec& t) {
  return {{"kind", motion_name(t.kind)},
          {"n_samples", t.n_samples},
          {"noise_sigma", t.noise_sigma},
          {"speed", {t.speed.lo, t.speed.hi}},
          {"curvature", {t.curvature.lo, t.curvature.hi}},
          {"turn_angle", {t.turn_angle.lo, t.turn_angle.hi}},
          {"seed", t.seed}};
}

namespace {
Range range_from(const Json& j, const char* key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(std::string("task.") + key + " must be [min, max]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}
}  // namespace

TaskSpec task_from(const Json& j) {
  expect_keys(j, "task", {"kind", "n_samples", "noise_sigma", "speed", "curvature", "turn_angle", "seed"});
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) throw ConfigError("task.kind is required");
  std::size_t n = 100;
  std::uint64_t seed = 0;
  read_opt(j, "n_samples", n, "task");
  read_opt(j, "seed", seed, "task");
  TaskSpec t = default_task(parse_motion(kind->get<std::string>()), n, seed);
  read_opt(j, "noise_sigma", t.noise_sigma, "task");
  if (auto it = j.find("speed"); it != j.end()) t.speed = range_from(*it, "speed");
  if (auto it = j.find("curvature"); it != j.end()) t.curvature = range_from(*it, "curvature");
  if (auto it = j.find("turn_angle"); it != j.end()) t.turn_angle = range_from(*it, "turn_angle");
  t.validate();
  return t;
}

namespace {
Json track_to_json(const Track& t) {
  Json out = Json::array();
  for (const AgentState& s : t) out.push_back({s.x, s.y, s.vx, s.vy});
  return out;
}

Track track_from(const Json& j) {
  if (!j.is_array()) throw ParseError("track must be an array", 0);
  Track t;
  for (const Json& row : j) {
    if (!row.is_array() || row.size() != 4) throw ParseError("track state must be [x, y, vx, vy]", 0);
    t.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>(), row[3].get<double>()});
  }
  return t;
}
}  // namespace

Json to_json(const Scene& s) {
  Json svs = Json::array();
  for (const Track& t : s.sv_histories) svs.push_back(track_to_json(t));
  return {{"tv", track_to_json(s.tv_history)}, {"sv", svs}, {"mask", s.sv_mask}, {"t_c", s.t_c}};
}

Scene scene_from(const Json& j) {
  Scene s;
  s.tv_history = track_from(j.at("tv"));
  for (const Json& t : j.at("sv")) s.sv_histories.push_back(track_from(t));
  s.sv_mask = j.at("mask").get<std::vector<std::uint8_t>>();
  s.t_c = j.at("t_c").get<std::int64_t>();
  return s;
}

Json to_json(const MemoryTriplet& t) {
  Json out = {{"scene", to_json(t.scene)},
              {"endpoint", {t.truth.endpoint.x, t.truth.endpoint.y}},
              {"speed", t.truth.speed_v},
              {"init_logits", to_json(t.init_logits)},
              {"stream_index", t.stream_index}};
  if (t.cached_gradient) out["cached_gradient"] = to_json(t.cached_gradient->values);
  return out;
}

MemoryTriplet triplet_from(const Json& j) {
  MemoryTriplet t;
  t.scene = scene_from(j.at("scene"));
  const Json& e = j.at("endpoint");
  t.truth.endpoint = {e.at(0).get<double>(), e.at(1).get<double>()};
  t.truth.speed_v = j.at("speed").get<double>();
  t.init_logits = doubles_from(j.at("init_logits"), "init_logits");
  t.stream_index = j.at("stream_index").get<std::size_t>();
  if (auto it = j.find("cached_gradient"); it != j.end()) {
    t.cached_gradient = std::make_shared<const GradVector>(doubles_from(*it, "cached_gradient"));
  }
  return t;
}

}  // namespace trajcl::json_io
