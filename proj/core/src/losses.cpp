// SPDX-License-Identifier: Apache-2.0
#include "trajcl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "trajcl/error.hpp"

namespace trajcl {

void LossSpec::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  if (!(focal_gamma >= 0.0)) throw ConfigError("focal_gamma must be non-negative");
}

double base_loss_logits(std::span<const double> logits, std::size_t target, const LossSpec& spec,
                        std::span<double> dlogits, double scale) {
  if (target >= logits.size()) throw Error("target cell outside the heatmap");
  if (!dlogits.empty() && dlogits.size() != logits.size()) throw Error("gradient buffer shape mismatch");

  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  const double log_p = logits[target] - lse;

  if (spec.base_kind == BaseLossKind::cross_entropy) {
    if (!dlogits.empty()) {
      for (std::size_t k = 0; k < logits.size(); ++k) dlogits[k] += scale * std::exp(logits[k] - lse);
      dlogits[target] -= scale;
    }
    return -log_p;
  }

  // Focal: -(1-p)^gamma log p. With u = 1-p the logit gradient is
  // C * (p_k - [k == t]) where C = 1 - gamma * p * u^gamma * log(p)/u, scaled
  // by u^gamma; log(p)/u tends to -1 as u -> 0.
  const double gamma = spec.focal_gamma;
  const double p = std::exp(log_p);
  const double u = -std::expm1(log_p);
  const double u_gamma = std::pow(u, gamma);
  if (!dlogits.empty()) {
    const double ratio = u > 0.0 ? log_p / u : -1.0;
    const double c = u_gamma * (1.0 - gamma * p * ratio);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      dlogits[k] += scale * c * std::exp(logits[k] - lse);
    }
    dlogits[target] -= scale * c;
  }
  return -u_gamma * log_p;
}

double distillation_logits(std::span<const double> logits, std::span<const double> init,
                           std::span<double> dlogits, double scale) {
  if (init.size() != logits.size()) {
    throw Error("stored logits have " + std::to_string(init.size()) + " entries, model emits " +
                std::to_string(logits.size()));
  }
  if (!dlogits.empty() && dlogits.size() != logits.size()) throw Error("gradient buffer shape mismatch");
  const double n = static_cast<double>(logits.size());
  double sq = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double d = logits[k] - init[k];
    sq += d * d;
    if (!dlogits.empty()) dlogits[k] += scale * 2.0 * d / n;
  }
  return sq / n;
}

double base_loss(const Heatmap& heatmap, Cell target_cell, const LossSpec& spec) {
  const GridSpec& g = heatmap.spec();
  if (target_cell.row >= g.rows_h || target_cell.col >= g.cols_w) {
    throw Error("target cell outside the heatmap");
  }
  return base_loss_logits(heatmap.logits(), g.index(target_cell), spec);
}

}  // namespace trajcl
