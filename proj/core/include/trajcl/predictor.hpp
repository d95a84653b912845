// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trajcl/losses.hpp"
#include "trajcl/types.hpp"

namespace trajcl {

/// Flat parameter-shaped vector. The tag keeps parameters and gradients
/// from being mixed up.
template <class Tag>
struct FlatVector {
  std::vector<double> values;

  FlatVector() = default;
  explicit FlatVector(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit FlatVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const FlatVector&, const FlatVector&) = default;
};

struct ParamTag {};
struct GradTag {};
using ParamVector = FlatVector<ParamTag>;  // all weights and biases, canonical order
using GradVector = FlatVector<GradTag>;

double dot(const GradVector& a, const GradVector& b);
double norm(const GradVector& g);

struct PredictorConfig {
  SceneShape shape;
  std::vector<std::size_t> hidden_dims{128, 128};
  GridSpec grid;
  std::uint64_t seed = 0;
  double position_scale = 10.0;  // meters per unit input
  double velocity_scale = 10.0;  // m/s per unit input

  std::size_t input_dim() const { return shape.input_dim(); }
  std::size_t output_dim() const { return grid.cell_count(); }
  void validate() const;
  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

/// A batch element: the scene plus its target cell and, for replay items,
/// the logits captured when the sample was first observed.
struct Example {
  const Scene* scene = nullptr;
  Cell target;
  std::span<const double> init_logits{};  // empty: no distillation term
};

struct LossGrad {
  double loss = 0.0;
  GradVector grad;
};

/// MLP heatmap predictor: flattened target-centric features -> tanh hidden
/// layers -> one logit per grid cell. Parameters live outside the object so
/// forward and gradient evaluation stay pure.
///
/// Layout of ParamVector: for each layer in order, the weight matrix
/// (out x in, row-major) followed by the bias vector.
class HeatmapPredictor {
 public:
  explicit HeatmapPredictor(PredictorConfig config);

  const PredictorConfig& config() const noexcept { return config_; }
  const GridSpec& grid() const noexcept { return config_.grid; }
  std::size_t param_count() const noexcept { return param_count_; }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from config().seed.
  ParamVector init_params() const;
  ParamVector zero_params() const { return ParamVector(param_count_); }

  /// Target-centric, scaled input vector. Masked neighbor slots stay zero.
  std::vector<double> features(const Scene& scene) const;

  /// Target cell of a ground-truth endpoint in the scene's own frame.
  Cell target_cell(const Scene& scene, const GroundTruth& truth) const;

  Heatmap forward(const ParamVector& params, const Scene& scene) const;

  /// Mean loss over `batch` and its gradient.
  LossGrad loss_and_grad(const ParamVector& params, std::span<const Example> batch,
                         const LossSpec& spec) const;

  /// Adds scale * sum_k loss_k into the return value and scale * sum_k grad_k
  /// into `grad`.
  double accumulate(const ParamVector& params, std::span<const Example> batch, const LossSpec& spec,
                    double scale, GradVector& grad) const;

  /// Full-parameter gradient of the base loss of one sample.
  GradVector sample_gradient(const ParamVector& params, const Scene& scene, Cell target,
                             const LossSpec& spec) const;

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  void check_params(const ParamVector& params) const;

  PredictorConfig config_;
  std::vector<Layer> layers_;
  std::size_t param_count_ = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n), std::vector<double>(n), 0}; }
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update in place. Throws NumericError on a
/// non-finite gradient.
void adam_step(ParamVector& params, const GradVector& grad, AdamState& state, double lr,
               const AdamHyper& hyper = {});

}  // namespace trajcl
