// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "trajcl/error.hpp"
#include "trajcl/label_audit.hpp"
#include "trajcl/learner.hpp"
#include "trajcl/replay.hpp"

using namespace trajcl;
using trajcl::test_util::small_model;
using trajcl::test_util::two_task_stream;

namespace {

MemoryTriplet triplet(const HeatmapPredictor& m, const ParamVector& p, const Sample& s) {
  const Heatmap h = m.forward(p, s.scene());
  return {s.scene(), s.truth(), std::vector<double>(h.logits().begin(), h.logits().end()), 0, nullptr};
}

TrainConfig small_train() {
  TrainConfig cfg;
  cfg.buffer_total = 8;
  cfg.replay_batch = 4;
  cfg.compare_count = 3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Replay, LossIsBasePlusNormalizedDistillation) {
  const HeatmapPredictor m(small_model());
  const ParamVector p = m.init_params();
  const auto stream = two_task_stream(4);
  std::vector<MemoryTriplet> mem{triplet(m, p, stream[0]), triplet(m, p, stream[5])};
  // Fresh logits equal the stored ones, so only the base loss remains.
  const LossSpec spec;
  double base = 0.0;
  for (const MemoryTriplet& t : mem) base += base_loss(m.forward(p, t.scene), m.target_cell(t.scene, t.truth), spec);
  EXPECT_NEAR(replay_loss(m, p, mem, spec), base / 2.0, 1e-12);

  // Shift every stored logit by 2: distillation adds 4 per sample.
  for (MemoryTriplet& t : mem) {
    for (double& z : t.init_logits) z += 2.0;
  }
  EXPECT_NEAR(replay_loss(m, p, mem, spec), base / 2.0 + 4.0, 1e-12);
  EXPECT_EQ(replay_loss(m, p, {}, spec), 0.0);
}

TEST(Replay, TotalLossWeightsAndGradient) {
  const HeatmapPredictor m(small_model());
  const ParamVector p = m.init_params();
  const auto stream = two_task_stream(6);
  const std::vector<Sample> cur(stream.begin(), stream.begin() + 3);
  std::vector<MemoryTriplet> sp{triplet(m, p, stream[7])}, cp{triplet(m, p, stream[9]), triplet(m, p, stream[4])};
  for (double& z : cp[0].init_logits) z -= 0.5;
  LossSpec spec;
  spec.alpha = 0.3;
  spec.beta = 1.7;
  const double want = total_loss(m, p, cur, {}, {}, spec) + 0.3 * replay_loss(m, p, sp, spec) +
                      1.7 * replay_loss(m, p, cp, spec);
  const LossGrad lg = total_loss_and_grad(m, p, cur, sp, cp, spec);
  EXPECT_NEAR(lg.loss, want, 1e-12);

  // Central differences on a handful of coordinates.
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, p.size() / 2, p.size() - 1}) {
    ParamVector hi = p, lo = p;
    hi[i] += 1e-5;
    lo[i] -= 1e-5;
    const double fd = (total_loss(m, hi, cur, sp, cp, spec) - total_loss(m, lo, cur, sp, cp, spec)) / 2e-5;
    EXPECT_NEAR(lg.grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Agem, ProjectionRemovesConflict) {
  const GradVector g(std::vector<double>{1.0, -2.0, 0.5});
  const GradVector ref(std::vector<double>{0.0, 1.0, 0.0});
  const GradVector out = agem_project(g, ref);
  EXPECT_NEAR(dot(out, ref), 0.0, 1e-15);
  EXPECT_EQ(out[0], 1.0);
  EXPECT_EQ(agem_project(out, ref), out);
  const GradVector aligned(std::vector<double>{0.0, 3.0, 1.0});
  EXPECT_EQ(agem_project(aligned, ref), aligned);
  EXPECT_EQ(agem_project(g, GradVector(3)), g);
}

TEST(Learner, StrategyNamesRoundTrip) {
  for (StrategyKind k : {StrategyKind::Vanilla, StrategyKind::H2C, StrategyKind::DerStyle, StrategyKind::GssStyle,
                         StrategyKind::AGem, StrategyKind::Joint}) {
    EXPECT_EQ(parse_strategy(strategy_name(k)), k);
  }
  EXPECT_THROW(parse_strategy("er"), ConfigError);
  EXPECT_FALSE(strategy_uses_task_labels(StrategyKind::H2C));
  EXPECT_TRUE(strategy_uses_task_labels(StrategyKind::AGem));
}

TEST(Learner, TaskEnds) {
  const auto stream = two_task_stream(5);
  const auto ends = task_end_indices(stream);
  ASSERT_EQ(ends.size(), 2u);
  EXPECT_EQ(ends[0], (std::pair<std::size_t, int>{4, 1}));
  EXPECT_EQ(ends[1], (std::pair<std::size_t, int>{9, 2}));
  std::vector<Sample> reversed(stream.rbegin(), stream.rend());
  EXPECT_THROW(task_end_indices(reversed), Error);
  EXPECT_THROW(task_end_indices({}), Error);
}

TEST(Learner, OnePassAndCheckpointsAtStraddlingBatch) {
  const HeatmapPredictor m(small_model());
  const auto stream = two_task_stream(13);  // 26 samples, batch 8: task 1 ends inside batch 2
  for (StrategyKind k : {StrategyKind::Vanilla, StrategyKind::H2C, StrategyKind::DerStyle, StrategyKind::GssStyle,
                         StrategyKind::AGem, StrategyKind::Joint}) {
    const RunResult r = train_stream(m, stream, k, small_train());
    for (std::uint32_t v : r.stats.visits) EXPECT_EQ(v, 1u) << strategy_name(k);
    EXPECT_EQ(r.stats.steps, 4u);
    if (k == StrategyKind::Joint) {
      ASSERT_EQ(r.checkpoints.size(), 1u);
      EXPECT_EQ(r.checkpoints[0].after_task, 2);
    } else {
      ASSERT_EQ(r.checkpoints.size(), 2u) << strategy_name(k);
      EXPECT_EQ(r.checkpoints[0].after_task, 1);
    }
    EXPECT_EQ(r.checkpoints.back().params, r.final_params);
  }
}

TEST(Learner, BufferCapacitiesPerStrategy) {
  const HeatmapPredictor m(small_model());
  const auto stream = two_task_stream(20);
  const TrainConfig cfg = small_train();
  const RunResult h2c = train_stream(m, stream, StrategyKind::H2C, cfg);
  ASSERT_TRUE(h2c.separation && h2c.completion);
  EXPECT_EQ(h2c.separation->capacity(), 4u);
  EXPECT_EQ(h2c.completion->capacity(), 4u);
  EXPECT_EQ(h2c.completion->stream_count(), stream.size());
  EXPECT_EQ(h2c.separation->stream_count(), stream.size());
  for (const auto& e : h2c.separation->entries()) {
    EXPECT_GE(e.score, 0.0);
    EXPECT_LE(e.score, 2.0);
    EXPECT_EQ(e.item.init_logits.size(), m.grid().cell_count());
  }
  const RunResult der = train_stream(m, stream, StrategyKind::DerStyle, cfg);
  EXPECT_FALSE(der.separation.has_value());
  EXPECT_EQ(der.completion->capacity(), 8u);
  const RunResult gss = train_stream(m, stream, StrategyKind::GssStyle, cfg);
  EXPECT_FALSE(gss.completion.has_value());
  EXPECT_EQ(gss.separation->capacity(), 8u);
  const RunResult van = train_stream(m, stream, StrategyKind::Vanilla, cfg);
  EXPECT_FALSE(van.separation || van.completion);
}

TEST(Learner, DeterministicForASeed) {
  const HeatmapPredictor m(small_model());
  const auto stream = two_task_stream(12);
  TrainConfig cfg = small_train();
  const RunResult a = train_stream(m, stream, StrategyKind::H2C, cfg);
  const RunResult b = train_stream(m, stream, StrategyKind::H2C, cfg);
  EXPECT_EQ(a.final_params, b.final_params);
  cfg.seed = 6;
  const RunResult c = train_stream(m, stream, StrategyKind::H2C, cfg);
  EXPECT_NE(a.final_params, c.final_params);
}

TEST(Learner, TaskFreeStrategiesReadNoLabelsWhileTraining) {
  const HeatmapPredictor m(small_model());
  const auto stream = two_task_stream(10);
  for (StrategyKind k : {StrategyKind::Vanilla, StrategyKind::H2C, StrategyKind::DerStyle, StrategyKind::GssStyle}) {
    reset_label_reads();
    train_stream(m, stream, k, small_train());
    EXPECT_EQ(label_reads(LabelUse::training), 0u) << strategy_name(k);
    EXPECT_EQ(label_reads(LabelUse::task_aware_strategy), 0u);
    EXPECT_GT(label_reads(LabelUse::evaluation), 0u);
  }
  reset_label_reads();
  train_stream(m, stream, StrategyKind::AGem, small_train());
  EXPECT_EQ(label_reads(LabelUse::training), 0u);
  EXPECT_GT(label_reads(LabelUse::task_aware_strategy), 0u);
}

TEST(Learner, AgemProjectedStepsRespectTheConstraint) {
  const HeatmapPredictor m(small_model());
  const auto stream = two_task_stream(40);
  const RunResult r = train_stream(m, stream, StrategyKind::AGem, small_train());
  EXPECT_GT(r.stats.agem_reference_steps, 0u);
  for (double d : r.stats.agem_projected_dots) EXPECT_GE(d, -1e-9);
}

TEST(Learner, ConfigValidation) {
  TrainConfig cfg;
  cfg.buffer_total = 1;
  EXPECT_THROW(cfg.validate(StrategyKind::H2C), ConfigError);
  EXPECT_NO_THROW(cfg.validate(StrategyKind::DerStyle));
  EXPECT_NO_THROW(cfg.validate(StrategyKind::Vanilla));
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(StrategyKind::Vanilla), ConfigError);
  cfg = {};
  cfg.lr = -1.0;
  EXPECT_THROW(cfg.validate(StrategyKind::Vanilla), ConfigError);
}

TEST(Learner, VanillaStepMatchesPlainMeanLoss) {
  const HeatmapPredictor m(small_model());
  const ParamVector p = m.init_params();
  const auto stream = two_task_stream(4);
  const std::vector<Sample> batch(stream.begin(), stream.begin() + 4);
  const LossGrad lg = vanilla_step(m, p, batch, TrainConfig{});
  EXPECT_NEAR(lg.loss, total_loss(m, p, batch, {}, {}, LossSpec{}), 1e-12);
}
