// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "trajcl/losses.hpp"
#include "trajcl/memory.hpp"
#include "trajcl/predictor.hpp"

namespace trajcl {

/// Examples for a current batch: base loss only.
std::vector<Example> current_examples(const HeatmapPredictor& model, std::span<const Sample> batch);

/// Examples for replayed triplets. With `distill` each example also pulls
/// the logits towards the stored initial response.
std::vector<Example> replay_examples(const HeatmapPredictor& model, std::span<const MemoryTriplet> batch,
                                     bool distill);

/// Mean over the batch of base loss plus ||logits - init_logits||^2 / (h*w).
/// An empty batch contributes 0.
double replay_loss(const HeatmapPredictor& model, const ParamVector& params,
                   std::span<const MemoryTriplet> batch, const LossSpec& spec);

LossGrad replay_loss_and_grad(const HeatmapPredictor& model, const ParamVector& params,
                              std::span<const MemoryTriplet> batch, const LossSpec& spec);

/// L_s + alpha * replay(separation batch) + beta * replay(completion batch).
double total_loss(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> current,
                  std::span<const MemoryTriplet> sp_batch, std::span<const MemoryTriplet> cp_batch,
                  const LossSpec& spec);

LossGrad total_loss_and_grad(const HeatmapPredictor& model, const ParamVector& params,
                             std::span<const Sample> current, std::span<const MemoryTriplet> sp_batch,
                             std::span<const MemoryTriplet> cp_batch, const LossSpec& spec);

}  // namespace trajcl
