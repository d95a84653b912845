// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "trajcl/types.hpp"

namespace trajcl {

enum class BaseLossKind { cross_entropy, focal };

/// Base prediction loss and the replay weights of the total objective
/// L_s + alpha * replay(separation) + beta * replay(completion).
struct LossSpec {
  BaseLossKind base_kind = BaseLossKind::cross_entropy;
  double focal_gamma = 0.0;  // focal only
  double alpha = 1.0;
  double beta = 1.0;

  /// Throws ConfigError on negative weights or gamma.
  void validate() const;
};

/// Cross-entropy (or focal) of softmax(logits) at `target`. When `dlogits`
/// is non-empty the gradient with respect to the logits is added into it,
/// scaled by `scale`.
double base_loss_logits(std::span<const double> logits, std::size_t target, const LossSpec& spec,
                        std::span<double> dlogits = {}, double scale = 1.0);

/// ||logits - init||^2 / (h*w). Gradient accumulates like base_loss_logits.
double distillation_logits(std::span<const double> logits, std::span<const double> init,
                           std::span<double> dlogits = {}, double scale = 1.0);

double base_loss(const Heatmap& heatmap, Cell target_cell, const LossSpec& spec);

}  // namespace trajcl
