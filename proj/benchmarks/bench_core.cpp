// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "trajcl/learner.hpp"
#include "trajcl/memory.hpp"
#include "trajcl/scenarios.hpp"

using namespace trajcl;

namespace {

PredictorConfig bench_model(std::size_t hidden) {
  PredictorConfig c;
  c.hidden_dims = {hidden, hidden};
  c.grid.rows_h = 16;
  c.grid.cols_w = 16;
  c.grid.cell_size = 2.0;
  c.grid.origin = {-4.0, -16.0};
  return c;
}

const std::vector<Sample>& bench_samples() {
  static const std::vector<Sample> samples = generate_task(default_task(MotionKind::arc, 64, 1));
  return samples;
}

void BM_Forward(benchmark::State& state) {
  const HeatmapPredictor m(bench_model(static_cast<std::size_t>(state.range(0))));
  const ParamVector p = m.init_params();
  const Scene& scene = bench_samples().front().scene();
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(p, scene));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128);

void BM_LossAndGradBatch8(benchmark::State& state) {
  const HeatmapPredictor m(bench_model(static_cast<std::size_t>(state.range(0))));
  const ParamVector p = m.init_params();
  std::vector<Example> batch;
  for (std::size_t i = 0; i < 8; ++i) {
    const Sample& s = bench_samples()[i];
    batch.push_back({&s.scene(), m.target_cell(s.scene(), s.truth()), {}});
  }
  for (auto _ : state) benchmark::DoNotOptimize(m.loss_and_grad(p, batch, LossSpec{}));
}
BENCHMARK(BM_LossAndGradBatch8)->Arg(64)->Arg(128);

void BM_SeparationObserve(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  SeparationBuffer<GradVector> buffer(100, 10);
  std::vector<GradVector> pool;
  for (std::size_t k = 0; k < 256; ++k) {
    GradVector g(dim);
    for (std::size_t i = 0; i < dim; ++i) g[i] = rng.normal(0.0, 1.0);
    pool.push_back(std::move(g));
  }
  std::size_t k = 0;
  for (auto _ : state) {
    const GradVector& g = pool[k++ % pool.size()];
    const double q = buffer.empty() ? kInitialSeparationScore
                                    : separation_score(g, buffer, rng, [](const GradVector& b) -> const GradVector& {
                                        return b;
                                      });
    benchmark::DoNotOptimize(buffer.observe(g, q, rng));
  }
}
BENCHMARK(BM_SeparationObserve)->Arg(1024)->Arg(33664);

void BM_ReservoirObserve(benchmark::State& state) {
  Rng rng(4);
  CompletionBuffer<std::size_t> buffer(100);
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(buffer.observe(k++, rng));
}
BENCHMARK(BM_ReservoirObserve);

void BM_TrainStreamH2C(benchmark::State& state) {
  const HeatmapPredictor m(bench_model(64));
  StreamSpec spec;
  spec.seed = 2;
  spec.tasks = {default_task(MotionKind::straight, 200, 1), default_task(MotionKind::turn, 200, 2)};
  const auto stream = build_stream(spec);
  TrainConfig cfg;
  cfg.buffer_total = 40;
  for (auto _ : state) benchmark::DoNotOptimize(train_stream(m, stream, StrategyKind::H2C, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * stream.size()));
}
BENCHMARK(BM_TrainStreamH2C)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
