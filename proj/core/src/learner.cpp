// SPDX-License-Identifier: Apache-2.0
#include "trajcl/learner.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "trajcl/error.hpp"
#include "trajcl/label_audit.hpp"

namespace trajcl {
namespace {

constexpr std::uint64_t kReplayStream = 1;
constexpr std::uint64_t kJointShuffleStream = 2;

// Per-task reservoir memories for A-GEM. The total capacity is split evenly
// across the tasks seen so far; closed tasks are subsampled when a new task
// arrives.
class EpisodicMemory {
 public:
  explicit EpisodicMemory(std::size_t total) : total_(total) {}

  void observe(int label, MemoryTriplet item, Rng& rng) {
    if (!current_ || label != current_label_) open_task(label, rng);
    current_->observe(std::move(item), rng);
  }

  std::size_t prior_size() const {
    std::size_t n = 0;
    for (const auto& t : closed_) n += t.size();
    return n;
  }

  std::vector<MemoryTriplet> draw_prior(std::size_t n, Rng& rng) const {
    std::vector<MemoryTriplet> out;
    const std::size_t total = prior_size();
    if (total == 0) return out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t idx = rng.index(total);
      for (const auto& t : closed_) {
        if (idx < t.size()) {
          out.push_back(t[idx]);
          break;
        }
        idx -= t.size();
      }
    }
    return out;
  }

 private:
  void open_task(int label, Rng& rng) {
    if (current_) closed_.push_back(current_->items());
    const std::size_t tasks = closed_.size() + 1;
    const std::size_t quota = std::max<std::size_t>(1, total_ / tasks);
    for (auto& items : closed_) {
      // Partial Fisher-Yates keeps a uniform subset of each closed memory.
      for (std::size_t i = 0; i < std::min(quota, items.size()); ++i) {
        std::swap(items[i], items[i + rng.index(items.size() - i)]);
      }
      if (items.size() > quota) items.resize(quota);
    }
    current_.emplace(quota);
    current_label_ = label;
  }

  std::size_t total_;
  std::vector<std::vector<MemoryTriplet>> closed_;
  std::optional<CompletionBuffer<MemoryTriplet>> current_;
  int current_label_ = 0;
};

struct Capacities {
  std::size_t separation = 0;
  std::size_t completion = 0;
};

Capacities capacities_for(StrategyKind kind, std::size_t total) {
  switch (kind) {
    case StrategyKind::H2C:
      return {total / 2, total / 2};
    case StrategyKind::DerStyle:
      return {0, total};
    case StrategyKind::GssStyle:
      return {total, 0};
    default:
      return {};
  }
}

bool stores_initial_logits(StrategyKind kind) {
  return kind == StrategyKind::H2C || kind == StrategyKind::DerStyle;
}

class StreamTrainer {
 public:
  StreamTrainer(const HeatmapPredictor& model, std::span<const Sample> stream, StrategyKind strategy,
                const TrainConfig& cfg)
      : model_(model),
        stream_(stream),
        strategy_(strategy),
        cfg_(cfg),
        rng_(Rng::derive(cfg.seed, kReplayStream)),
        params_(model.init_params()),
        adam_(AdamState::zeros(model.param_count())),
        episodic_(cfg.buffer_total) {
    const Capacities caps = capacities_for(strategy, cfg.buffer_total);
    if (caps.separation > 0) sp_.emplace(caps.separation, cfg.compare_count);
    if (caps.completion > 0) cp_.emplace(caps.completion);
    stats_.visits.assign(stream.size(), 0);
  }

  RunResult run() {
    std::vector<std::pair<std::size_t, int>> ends = task_end_indices(stream_);
    std::vector<std::size_t> order(stream_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    if (strategy_ == StrategyKind::Joint) {
      // Pool every task, shuffle once, single epoch; only the final model is
      // meaningful.
      Rng shuffle_rng(Rng::derive(cfg_.seed, kJointShuffleStream));
      std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
      ends = {{stream_.size() - 1, ends.back().second}};
    } else if (!cfg_.checkpoint_after_each_task) {
      ends = {ends.back()};
    }

    std::vector<Sample> batch;
    std::vector<std::size_t> batch_index;
    std::size_t next_end = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
      batch.clear();
      batch_index.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(stream_[order[k]]);
        batch_index.push_back(order[k]);
        ++stats_.visits[order[k]];
      }
      step(batch, batch_index);
      // A batch may straddle a task boundary; the checkpoint is taken after
      // the batch that contains the task's last sample.
      while (next_end < ends.size() && ends[next_end].first < stop) {
        result_.checkpoints.push_back({ends[next_end].second, params_});
        ++next_end;
      }
    }

    result_.final_params = params_;
    result_.optimizer = adam_;
    result_.stats = std::move(stats_);
    result_.separation = std::move(sp_);
    result_.completion = std::move(cp_);
    return std::move(result_);
  }

 private:
  void step(std::span<const Sample> batch, std::span<const std::size_t> batch_index) {
    std::vector<std::vector<double>> snapshots;
    if (stores_initial_logits(strategy_) && cfg_.buffers_enabled) {
      snapshots.reserve(batch.size());
      for (const Sample& s : batch) {
        const Heatmap hm = model_.forward(params_, s.scene());
        snapshots.emplace_back(hm.logits().begin(), hm.logits().end());
      }
    }

    LossGrad lg = compute(batch);
    adam_step(params_, lg.grad, adam_, cfg_.lr);
    ++stats_.steps;

    if (!cfg_.buffers_enabled) return;
    offer(batch, batch_index, snapshots);
  }

  LossGrad compute(std::span<const Sample> batch) {
    switch (strategy_) {
      case StrategyKind::Vanilla:
      case StrategyKind::Joint:
        return vanilla_step(model_, params_, batch, cfg_);
      case StrategyKind::H2C:
        return h2c_step(model_, params_, batch, *sp_, *cp_, cfg_, rng_);
      case StrategyKind::DerStyle:
        return der_style_step(model_, params_, batch, *cp_, cfg_, rng_);
      case StrategyKind::GssStyle:
        return gss_style_step(model_, params_, batch, *sp_, cfg_, rng_);
      case StrategyKind::AGem:
        return agem_compute(batch);
    }
    throw Error("unknown strategy");
  }

  LossGrad agem_compute(std::span<const Sample> batch) {
    LossGrad lg = vanilla_step(model_, params_, batch, cfg_);
    const std::vector<MemoryTriplet> ref = episodic_.draw_prior(cfg_.agem_reference_batch, rng_);
    if (ref.empty()) return lg;
    ++stats_.agem_reference_steps;
    const std::vector<Example> examples = replay_examples(model_, ref, false);
    const GradVector g_ref = model_.loss_and_grad(params_, examples, cfg_.loss).grad;
    if (dot(lg.grad, g_ref) < 0.0) {
      lg.grad = agem_project(lg.grad, g_ref);
      stats_.agem_projected_dots.push_back(dot(lg.grad, g_ref));
    }
    return lg;
  }

  GradVector stored_gradient(const MemoryTriplet& m) const {
    if (cfg_.cached_scores && m.cached_gradient) return *m.cached_gradient;
    return model_.sample_gradient(params_, m.scene, model_.target_cell(m.scene, m.truth), cfg_.loss);
  }

  double score(const GradVector& g) {
    if (sp_->empty()) return kInitialSeparationScore;
    return separation_score(g, *sp_, rng_, [this](const MemoryTriplet& m) { return stored_gradient(m); });
  }

  void offer(std::span<const Sample> batch, std::span<const std::size_t> batch_index,
             const std::vector<std::vector<double>>& snapshots) {
    std::optional<double> batch_score;
    std::shared_ptr<const GradVector> batch_grad;
    if (sp_ && cfg_.score_granularity == ScoreGranularity::per_batch) {
      const std::vector<Example> examples = current_examples(model_, batch);
      batch_grad = std::make_shared<const GradVector>(model_.loss_and_grad(params_, examples, cfg_.loss).grad);
      batch_score = score(*batch_grad);
    }

    for (std::size_t k = 0; k < batch.size(); ++k) {
      const Sample& s = batch[k];
      MemoryTriplet item{s.scene(), s.truth(), snapshots.empty() ? std::vector<double>{} : snapshots[k],
                         batch_index[k], nullptr};

      if (strategy_ == StrategyKind::AGem) {
        int label = 0;
        {
          LabelUseScope scope(LabelUse::task_aware_strategy);
          label = s.task_label();
        }
        episodic_.observe(label, std::move(item), rng_);
        continue;
      }
      if (cp_) stats_.completion_stored += cp_->observe(item, rng_) ? 1 : 0;
      if (sp_) {
        double q = 0.0;
        if (batch_score) {
          q = *batch_score;
          if (cfg_.cached_scores) item.cached_gradient = batch_grad;
        } else {
          auto g = std::make_shared<const GradVector>(
              model_.sample_gradient(params_, s.scene(), model_.target_cell(s.scene(), s.truth()), cfg_.loss));
          q = score(*g);
          if (cfg_.cached_scores) item.cached_gradient = std::move(g);
        }
        stats_.separation_stored += sp_->observe(std::move(item), q, rng_) ? 1 : 0;
      }
    }
  }

  const HeatmapPredictor& model_;
  std::span<const Sample> stream_;
  StrategyKind strategy_;
  const TrainConfig& cfg_;
  Rng rng_;
  ParamVector params_;
  AdamState adam_;
  std::optional<TripletSeparationBuffer> sp_;
  std::optional<TripletCompletionBuffer> cp_;
  EpisodicMemory episodic_;
  TrainStats stats_;
  RunResult result_;
};

}  // namespace

std::string_view strategy_name(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::Vanilla: return "Vanilla";
    case StrategyKind::H2C: return "H2C";
    case StrategyKind::DerStyle: return "DerStyle";
    case StrategyKind::GssStyle: return "GssStyle";
    case StrategyKind::AGem: return "AGem";
    case StrategyKind::Joint: return "Joint";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind k : {StrategyKind::Vanilla, StrategyKind::H2C, StrategyKind::DerStyle, StrategyKind::GssStyle,
                         StrategyKind::AGem, StrategyKind::Joint}) {
    if (strategy_name(k) == name) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

bool strategy_uses_task_labels(StrategyKind kind) noexcept {
  return kind == StrategyKind::AGem || kind == StrategyKind::Joint;
}

void TrainConfig::validate(StrategyKind kind) const {
  loss.validate();
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (replay_batch == 0) throw ConfigError("replay_batch must be positive");
  if (compare_count == 0) throw ConfigError("compare_count must be positive");
  const bool needs_buffer = kind != StrategyKind::Vanilla && kind != StrategyKind::Joint;
  if (needs_buffer && buffer_total < (kind == StrategyKind::H2C ? 2u : 1u)) {
    throw ConfigError("buffer_total too small for " + std::string(strategy_name(kind)));
  }
  if (kind == StrategyKind::AGem && agem_reference_batch == 0) {
    throw ConfigError("agem_reference_batch must be positive");
  }
}

std::vector<std::pair<std::size_t, int>> task_end_indices(std::span<const Sample> stream) {
  if (stream.empty()) throw Error("training stream is empty");
  LabelUseScope scope(LabelUse::evaluation);
  std::vector<std::pair<std::size_t, int>> ends;
  int previous = stream.front().task_label();
  for (std::size_t i = 1; i < stream.size(); ++i) {
    const int label = stream[i].task_label();
    if (label < previous) {
      throw Error("task labels must be non-decreasing along the stream (index " + std::to_string(i) + ")");
    }
    if (label != previous) ends.emplace_back(i - 1, previous);
    previous = label;
  }
  ends.emplace_back(stream.size() - 1, previous);
  return ends;
}

RunResult train_stream(const HeatmapPredictor& model, std::span<const Sample> stream, StrategyKind strategy,
                       const TrainConfig& cfg) {
  cfg.validate(strategy);
  StreamTrainer trainer(model, stream, strategy, cfg);
  return trainer.run();
}

LossGrad vanilla_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                      const TrainConfig& cfg) {
  const std::vector<Example> examples = current_examples(model, batch);
  return model.loss_and_grad(params, examples, cfg.loss);
}

LossGrad h2c_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                  const TripletSeparationBuffer& sp, const TripletCompletionBuffer& cp, const TrainConfig& cfg,
                  Rng& rng) {
  const std::vector<MemoryTriplet> cp_batch = draw_minibatch(cp, cfg.replay_batch, rng);
  const std::vector<MemoryTriplet> sp_batch = draw_minibatch(sp, cfg.replay_batch, rng);
  return total_loss_and_grad(model, params, batch, sp_batch, cp_batch, cfg.loss);
}

LossGrad der_style_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                        const TripletCompletionBuffer& cp, const TrainConfig& cfg, Rng& rng) {
  const std::vector<MemoryTriplet> cp_batch = draw_minibatch(cp, cfg.replay_batch, rng);
  LossSpec spec = cfg.loss;
  spec.alpha = 0.0;
  return total_loss_and_grad(model, params, batch, {}, cp_batch, spec);
}

LossGrad gss_style_step(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> batch,
                        const TripletSeparationBuffer& sp, const TrainConfig& cfg, Rng& rng) {
  const std::vector<MemoryTriplet> mem = draw_minibatch(sp, cfg.replay_batch, rng);
  std::vector<Example> examples = current_examples(model, batch);
  const std::vector<Example> replay = replay_examples(model, mem, false);
  examples.insert(examples.end(), replay.begin(), replay.end());
  return model.loss_and_grad(params, examples, cfg.loss);
}

GradVector agem_project(const GradVector& g, const GradVector& g_ref) {
  if (g.size() != g_ref.size()) throw Error("agem_project shape mismatch");
  const double d = dot(g, g_ref);
  const double ref_sq = dot(g_ref, g_ref);
  if (d >= 0.0 || ref_sq == 0.0) return g;
  GradVector out = g;
  const double coeff = d / ref_sq;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= coeff * g_ref[i];
  return out;
}

}  // namespace trajcl
