// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "trajcl/memory.hpp"
#include "trajcl/predictor.hpp"
#include "trajcl/replay.hpp"
#include "trajcl/rng.hpp"

namespace trajcl {

enum class StrategyKind { Vanilla, H2C, DerStyle, GssStyle, AGem, Joint };

std::string_view strategy_name(StrategyKind kind) noexcept;
/// Throws ConfigError on an unknown name.
StrategyKind parse_strategy(std::string_view name);
/// Only A-GEM (per-task memories) and Joint (pooling) may consult task labels.
bool strategy_uses_task_labels(StrategyKind kind) noexcept;

enum class ScoreGranularity { per_sample, per_batch };

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::size_t buffer_total = 200;
  LossSpec loss;  // base loss kind plus the alpha/beta replay weights
  std::size_t replay_batch = 8;
  std::uint64_t seed = 0;
  bool checkpoint_after_each_task = true;

  std::size_t compare_count = 10;  // B
  bool cached_scores = false;      // score against gradients captured at storage time
  ScoreGranularity score_granularity = ScoreGranularity::per_sample;
  std::size_t agem_reference_batch = 64;
  bool buffers_enabled = true;

  void validate(StrategyKind kind) const;
};

struct TaskCheckpoint {
  int after_task = 0;
  ParamVector params;
};

struct TrainStats {
  std::vector<std::uint32_t> visits;  // current-batch participations per stream index
  std::size_t steps = 0;
  std::size_t separation_stored = 0;
  std::size_t completion_stored = 0;
  std::size_t agem_reference_steps = 0;
  std::vector<double> agem_projected_dots;  // g' . g_ref after each projection
};

struct RunResult {
  ParamVector final_params;
  AdamState optimizer;
  std::vector<TaskCheckpoint> checkpoints;
  TrainStats stats;
  std::optional<TripletSeparationBuffer> separation;
  std::optional<TripletCompletionBuffer> completion;
};

/// Where each task ends in a task-ordered stream: (last index, label).
/// Reads labels under LabelUse::evaluation. Throws on an empty stream or
/// labels that decrease.
std::vector<std::pair<std::size_t, int>> task_end_indices(std::span<const Sample> stream);

/// One pass over `stream` in order. Per batch: snapshot logits, compute the
/// strategy loss, take one Adam step, then offer each batch sample to the
/// strategy's buffers with its snapshotted logits.
RunResult train_stream(const HeatmapPredictor& model, std::span<const Sample> stream, StrategyKind strategy,
                       const TrainConfig& cfg);

LossGrad vanilla_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                      const TrainConfig& cfg);

/// Draws the completion replay batch first, then the separation one.
LossGrad h2c_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                  const TripletSeparationBuffer& sp, const TripletCompletionBuffer& cp, const TrainConfig& cfg,
                  Rng& rng);

/// L_s + beta * replay(completion batch): reservoir memory with distillation.
LossGrad der_style_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                        const TripletCompletionBuffer& cp, const TrainConfig& cfg, Rng& rng);

/// Base loss over the current batch concatenated with a buffer minibatch.
LossGrad gss_style_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                        const TripletSeparationBuffer& sp, const TrainConfig& cfg, Rng& rng);

/// Projects g so that it no longer conflicts with the reference gradient.
GradVector agem_project(const GradVector& g, const GradVector& g_ref);

}  // namespace trajcl
