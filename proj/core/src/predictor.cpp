// SPDX-License-Identifier: Apache-2.0
#include "trajcl/predictor.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "trajcl/error.hpp"
#include "trajcl/grid.hpp"
#include "trajcl/rng.hpp"

namespace trajcl {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

}  // namespace

double dot(const GradVector& a, const GradVector& b) {
  if (a.size() != b.size()) throw Error("gradient length mismatch");
  return ConstVectorMap(a.values.data(), a.size()).dot(ConstVectorMap(b.values.data(), b.size()));
}

double norm(const GradVector& g) { return ConstVectorMap(g.values.data(), g.size()).norm(); }

void PredictorConfig::validate() const {
  shape.validate();
  grid.validate();
  if (hidden_dims.empty()) throw ConfigError("predictor needs at least one hidden layer");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw ConfigError("hidden layer width must be positive");
  }
  if (!(position_scale > 0.0) || !(velocity_scale > 0.0)) throw ConfigError("feature scales must be positive");
}

HeatmapPredictor::HeatmapPredictor(PredictorConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t in = config_.input_dim();
  std::size_t offset = 0;
  auto add_layer = [&](std::size_t out) {
    layers_.push_back({in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  };
  for (std::size_t h : config_.hidden_dims) add_layer(h);
  add_layer(config_.output_dim());
  param_count_ = offset;
}

void HeatmapPredictor::check_params(const ParamVector& params) const {
  if (params.size() != param_count_) {
    throw Error("parameter vector has " + std::to_string(params.size()) + " entries, model needs " +
                std::to_string(param_count_));
  }
}

ParamVector HeatmapPredictor::init_params() const {
  ParamVector params(param_count_);
  Rng rng(config_.seed);
  for (const Layer& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t i = 0; i < layer.in * layer.out + layer.out; ++i) {
      params[layer.weight_offset + i] = rng.uniform(-bound, bound);
    }
  }
  return params;
}

std::vector<double> HeatmapPredictor::features(const Scene& scene) const {
  const SceneShape& shape = config_.shape;
  validate_scene(scene, shape);
  const TargetFrame frame = TargetFrame::of(scene);
  std::vector<double> out(config_.input_dim(), 0.0);
  const double ps = 1.0 / config_.position_scale;
  const double vs = 1.0 / config_.velocity_scale;

  auto write_track = [&](const Track& track, std::size_t slot) {
    double* dst = out.data() + slot * shape.t_obs * 4;
    for (const AgentState& s : track) {
      const Vec2 p = frame.to_local(s.position());
      const Vec2 v = frame.rotate_to_local(s.velocity());
      *dst++ = p.x * ps;
      *dst++ = p.y * ps;
      *dst++ = v.x * vs;
      *dst++ = v.y * vs;
    }
  };
  write_track(scene.tv_history, 0);
  for (std::size_t k = 0; k < shape.k_sv; ++k) {
    if (scene.sv_mask[k]) write_track(scene.sv_histories[k], k + 1);
  }
  return out;
}

Cell HeatmapPredictor::target_cell(const Scene& scene, const GroundTruth& truth) const {
  return endpoint_to_cell(TargetFrame::of(scene).to_local(truth.endpoint), config_.grid);
}

Heatmap HeatmapPredictor::forward(const ParamVector& params, const Scene& scene) const {
  check_params(params);
  const std::vector<double> x = features(scene);
  Eigen::VectorXd a = ConstVectorMap(x.data(), x.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    ConstMatrixMap w(params.values.data() + layer.weight_offset, layer.out, layer.in);
    ConstVectorMap b(params.values.data() + layer.bias_offset, layer.out);
    Eigen::VectorXd z = w * a + b;
    if (l + 1 < layers_.size()) z = z.array().tanh();
    if (!z.allFinite()) throw NumericError("non-finite activation in layer " + std::to_string(l + 1));
    a = std::move(z);
  }
  return Heatmap(config_.grid, std::vector<double>(a.data(), a.data() + a.size()));
}

double HeatmapPredictor::accumulate(const ParamVector& params, std::span<const Example> batch,
                                    const LossSpec& spec, double scale, GradVector& grad) const {
  check_params(params);
  if (grad.size() != param_count_) throw Error("gradient vector shape mismatch");
  const std::size_t n_layers = layers_.size();
  std::vector<Eigen::VectorXd> acts(n_layers + 1);
  std::vector<double> dlogits(config_.output_dim());
  double total = 0.0;

  for (const Example& ex : batch) {
    if (ex.scene == nullptr) throw Error("example without a scene");
    const std::vector<double> x = features(*ex.scene);
    acts[0] = ConstVectorMap(x.data(), x.size());
    for (std::size_t l = 0; l < n_layers; ++l) {
      const Layer& layer = layers_[l];
      ConstMatrixMap w(params.values.data() + layer.weight_offset, layer.out, layer.in);
      ConstVectorMap b(params.values.data() + layer.bias_offset, layer.out);
      acts[l + 1] = w * acts[l] + b;
      if (l + 1 < n_layers) acts[l + 1] = acts[l + 1].array().tanh();
      if (!acts[l + 1].allFinite()) {
        throw NumericError("non-finite activation in layer " + std::to_string(l + 1));
      }
    }

    const Eigen::VectorXd& logits = acts[n_layers];
    std::span<const double> logit_span(logits.data(), static_cast<std::size_t>(logits.size()));
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    const GridSpec& g = config_.grid;
    if (ex.target.row >= g.rows_h || ex.target.col >= g.cols_w) throw Error("target cell outside the grid");
    double loss = base_loss_logits(logit_span, g.index(ex.target), spec, dlogits, 1.0);
    if (!ex.init_logits.empty()) loss += distillation_logits(logit_span, ex.init_logits, dlogits, 1.0);
    total += scale * loss;

    Eigen::VectorXd delta = scale * ConstVectorMap(dlogits.data(), dlogits.size());
    for (std::size_t l = n_layers; l-- > 0;) {
      const Layer& layer = layers_[l];
      MatrixMap gw(grad.values.data() + layer.weight_offset, layer.out, layer.in);
      VectorMap gb(grad.values.data() + layer.bias_offset, layer.out);
      gw.noalias() += delta * acts[l].transpose();
      gb += delta;
      if (l == 0) break;
      ConstMatrixMap w(params.values.data() + layer.weight_offset, layer.out, layer.in);
      Eigen::VectorXd back = w.transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return total;
}

LossGrad HeatmapPredictor::loss_and_grad(const ParamVector& params, std::span<const Example> batch,
                                         const LossSpec& spec) const {
  if (batch.empty()) throw Error("loss_and_grad needs a non-empty batch");
  LossGrad out{0.0, GradVector(param_count_)};
  out.loss = accumulate(params, batch, spec, 1.0 / static_cast<double>(batch.size()), out.grad);
  return out;
}

GradVector HeatmapPredictor::sample_gradient(const ParamVector& params, const Scene& scene, Cell target,
                                             const LossSpec& spec) const {
  GradVector grad(param_count_);
  const Example ex{&scene, target, {}};
  accumulate(params, std::span<const Example>(&ex, 1), spec, 1.0, grad);
  return grad;
}

void adam_step(ParamVector& params, const GradVector& grad, AdamState& state, double lr,
               const AdamHyper& hyper) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw Error("adam_step shape mismatch");
  }
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  for (double g : grad.values) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient passed to adam_step");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

}  // namespace trajcl
