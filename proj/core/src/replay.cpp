// SPDX-License-Identifier: Apache-2.0
#include "trajcl/replay.hpp"

#include <Eigen/Core>

#include "trajcl/error.hpp"

namespace trajcl {
namespace {

void axpy(double a, const GradVector& x, GradVector& y) {
  Eigen::Map<Eigen::VectorXd>(y.values.data(), y.size()) +=
      a * Eigen::Map<const Eigen::VectorXd>(x.values.data(), x.size());
}

}  // namespace

std::vector<Example> current_examples(const HeatmapPredictor& model, std::span<const Sample> batch) {
  std::vector<Example> out;
  out.reserve(batch.size());
  for (const Sample& s : batch) out.push_back({&s.scene(), model.target_cell(s.scene(), s.truth()), {}});
  return out;
}

std::vector<Example> replay_examples(const HeatmapPredictor& model, std::span<const MemoryTriplet> batch,
                                     bool distill) {
  std::vector<Example> out;
  out.reserve(batch.size());
  for (const MemoryTriplet& m : batch) {
    if (distill && m.init_logits.size() != model.config().output_dim()) {
      throw Error("stored logits shape does not match the model grid");
    }
    out.push_back({&m.scene, model.target_cell(m.scene, m.truth),
                   distill ? std::span<const double>(m.init_logits) : std::span<const double>{}});
  }
  return out;
}

double replay_loss(const HeatmapPredictor& model, const ParamVector& params,
                   std::span<const MemoryTriplet> batch, const LossSpec& spec) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  for (const MemoryTriplet& m : batch) {
    const Heatmap hm = model.forward(params, m.scene);
    sum += base_loss(hm, model.target_cell(m.scene, m.truth), spec);
    sum += distillation_logits(hm.logits(), m.init_logits);
  }
  return sum / static_cast<double>(batch.size());
}

LossGrad replay_loss_and_grad(const HeatmapPredictor& model, const ParamVector& params,
                              std::span<const MemoryTriplet> batch, const LossSpec& spec) {
  LossGrad out{0.0, GradVector(model.param_count())};
  if (batch.empty()) return out;
  const std::vector<Example> examples = replay_examples(model, batch, true);
  out.loss = model.accumulate(params, examples, spec, 1.0 / static_cast<double>(batch.size()), out.grad);
  return out;
}

double total_loss(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> current,
                  std::span<const MemoryTriplet> sp_batch, std::span<const MemoryTriplet> cp_batch,
                  const LossSpec& spec) {
  spec.validate();
  if (current.empty()) throw Error("total_loss needs a non-empty current batch");
  double ls = 0.0;
  for (const Sample& s : current) {
    ls += base_loss(model.forward(params, s.scene()), model.target_cell(s.scene(), s.truth()), spec);
  }
  ls /= static_cast<double>(current.size());
  double total = ls;
  if (spec.alpha != 0.0) total += spec.alpha * replay_loss(model, params, sp_batch, spec);
  if (spec.beta != 0.0) total += spec.beta * replay_loss(model, params, cp_batch, spec);
  return total;
}

LossGrad total_loss_and_grad(const HeatmapPredictor& model, const ParamVector& params,
                             std::span<const Sample> current, std::span<const MemoryTriplet> sp_batch,
                             std::span<const MemoryTriplet> cp_batch, const LossSpec& spec) {
  spec.validate();
  if (current.empty()) throw Error("total_loss needs a non-empty current batch");
  const std::vector<Example> cur = current_examples(model, current);
  LossGrad out = model.loss_and_grad(params, cur, spec);
  if (spec.alpha != 0.0 && !sp_batch.empty()) {
    const LossGrad sp = replay_loss_and_grad(model, params, sp_batch, spec);
    out.loss += spec.alpha * sp.loss;
    axpy(spec.alpha, sp.grad, out.grad);
  }
  if (spec.beta != 0.0 && !cp_batch.empty()) {
    const LossGrad cp = replay_loss_and_grad(model, params, cp_batch, spec);
    out.loss += spec.beta * cp.loss;
    axpy(spec.beta, cp.grad, out.grad);
  }
  return out;
}

}  // namespace trajcl
