// SPDX-License-Identifier: Apache-2.0
#include "trajcl/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "trajcl/error.hpp"
#include "trajcl/grid.hpp"
#include "trajcl/memory.hpp"
#include "trajcl/metrics.hpp"
#include "trajcl/rng.hpp"
#include "trajcl/stats.hpp"

namespace trajcl {
namespace {

Scene random_scene(const SceneShape& shape, Rng& rng) {
  Scene s;
  auto state = [&] { return AgentState{rng.normal(0.0, 5.0), rng.normal(0.0, 5.0), rng.normal(3.0, 2.0), rng.normal(0.0, 2.0)}; };
  for (std::size_t t = 0; t < shape.t_obs; ++t) s.tv_history.push_back(state());
  for (std::size_t k = 0; k < shape.k_sv; ++k) {
    const bool present = rng.index(2) == 1;
    Track track(shape.t_obs);
    if (present) {
      for (AgentState& a : track) a = state();
    }
    s.sv_histories.push_back(std::move(track));
    s.sv_mask.push_back(present ? 1 : 0);
  }
  return s;
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

}  // namespace

PredictorConfig tiny_predictor_config(std::uint64_t seed) {
  PredictorConfig c;
  c.shape = {2, 1, 1, 0.1};
  c.hidden_dims = {4};
  c.grid.rows_h = 3;
  c.grid.cols_w = 3;
  c.grid.origin = {-3.0, -3.0};
  c.grid.cell_size = 2.0;
  c.seed = seed;
  return c;
}

GradientCheck gradient_check(std::size_t cases, double eps, std::uint64_t seed) {
  Rng rng(seed);
  const HeatmapPredictor model(tiny_predictor_config(seed));
  const std::size_t cells = model.grid().cell_count();
  GradientCheck out;
  for (std::size_t c = 0; c < cases; ++c) {
    ParamVector params(model.param_count());
    for (double& p : params.values) p = rng.uniform(-1.0, 1.0);

    LossSpec spec;
    if (c % 2 == 1) {
      spec.base_kind = BaseLossKind::focal;
      spec.focal_gamma = rng.uniform(0.5, 3.0);
    }
    const std::size_t batch_size = 1 + rng.index(3);
    std::vector<Scene> scenes;
    std::vector<std::vector<double>> inits(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) scenes.push_back(random_scene(model.config().shape, rng));
    std::vector<Example> batch;
    for (std::size_t b = 0; b < batch_size; ++b) {
      Example e{&scenes[b], model.grid().cell_at(rng.index(cells)), {}};
      if (rng.index(2) == 1) {
        inits[b].resize(cells);
        for (double& v : inits[b]) v = rng.normal(0.0, 1.0);
        e.init_logits = inits[b];
      }
      batch.push_back(e);
    }

    const GradVector analytic = model.loss_and_grad(params, batch, spec).grad;
    double max_diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      ParamVector plus = params;
      ParamVector minus = params;
      plus[i] += eps;
      minus[i] -= eps;
      const double numeric =
          (model.loss_and_grad(plus, batch, spec).loss - model.loss_and_grad(minus, batch, spec).loss) / (2.0 * eps);
      max_diff = std::max(max_diff, std::abs(analytic[i] - numeric));
      scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric)});
    }
    const double rel = scale > 0.0 ? max_diff / scale : 0.0;
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.cases;
  }
  return out;
}

ReservoirCheck reservoir_check(std::size_t k, std::size_t n, std::size_t runs, std::uint64_t seed) {
  Rng rng(seed);
  ReservoirCheck out;
  out.inclusion_counts.assign(n, 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    CompletionBuffer<std::size_t> buffer(k);
    for (std::size_t i = 0; i < n; ++i) buffer.observe(i, rng);
    for (std::size_t item : buffer.items()) out.inclusion_counts[item] += 1.0;
  }
  const double p = static_cast<double>(k) / static_cast<double>(n);
  out.expected = static_cast<double>(runs) * p;
  out.sigma = binomial_sigma(static_cast<double>(runs), p);
  for (double c : out.inclusion_counts) out.max_abs_z = std::max(out.max_abs_z, std::abs(c - out.expected) / out.sigma);
  const std::vector<double> expected(n, out.expected);
  out.chi_square_p = chi_square_gof(out.inclusion_counts, expected).p_value;
  return out;
}

double replacement_rate(double q_stored, double q_new, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t replaced = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    SeparationBuffer<int> buffer(4);
    for (int i = 0; i < 4; ++i) buffer.observe(i, q_stored, rng);
    if (buffer.observe(-1, q_new, rng)) ++replaced;
  }
  return static_cast<double>(replaced) / static_cast<double>(trials);
}

double descent_ratio(const OptimizerStep& step, std::size_t steps, std::uint64_t seed) {
  Rng rng(seed);
  const HeatmapPredictor model(tiny_predictor_config(seed));
  std::vector<Scene> scenes;
  for (int b = 0; b < 8; ++b) scenes.push_back(random_scene(model.config().shape, rng));
  std::vector<Example> batch;
  for (const Scene& s : scenes) batch.push_back({&s, model.grid().cell_at(rng.index(model.grid().cell_count())), {}});
  ParamVector params = model.init_params();
  AdamState state = AdamState::zeros(model.param_count());
  const LossSpec spec;
  const double initial = model.loss_and_grad(params, batch, spec).loss;
  for (std::size_t s = 0; s < steps; ++s) step(params, model.loss_and_grad(params, batch, spec).grad, state, 1e-2);
  return model.loss_and_grad(params, batch, spec).loss / initial;
}

ExperimentConfig tiny_experiment_config() {
  ExperimentConfig c;
  c.name = "tiny";
  c.model.shape = {4, 10, 1, 0.1};
  c.model.hidden_dims = {8};
  c.model.grid.rows_h = 8;
  c.model.grid.cols_w = 8;
  c.model.grid.origin = {-4.0, -8.0};
  c.model.grid.cell_size = 2.0;
  c.tasks = {default_task(MotionKind::straight, 30, 11), default_task(MotionKind::turn, 30, 12)};
  for (TaskSpec& t : c.tasks) t.speed = {2.0, 4.0};
  c.strategies = {StrategyKind::Vanilla, StrategyKind::H2C};
  c.train.buffer_total = 8;
  c.train.replay_batch = 4;
  c.train.compare_count = 3;
  c.repetitions = 1;
  c.base_seed = 7;
  return c;
}

std::uint64_t tiny_experiment_hash() {
  const ExperimentConfig config = tiny_experiment_config();
  const std::vector<TaskData> tasks = prepare_tasks(config);
  std::uint64_t h = fnv1a64("");
  for (StrategyKind s : config.strategies) {
    const CellOutcome cell = run_cell(config, tasks, s, config.seed_of(0));
    if (!cell.error.empty()) throw Error("tiny experiment failed: " + cell.error);
    h = fnv1a64(matrix_to_csv(cell.report->fde), h);
    h = fnv1a64(matrix_to_csv(cell.report->mr), h);
  }
  return h;
}

std::vector<CheckResult> run_selftest(const SelftestOptions& options) {
  const OptimizerStep optimizer =
      options.optimizer ? options.optimizer
                        : OptimizerStep([](ParamVector& p, const GradVector& g, AdamState& s, double lr) {
                            adam_step(p, g, s, lr);
                          });
  std::vector<CheckResult> results;
  auto run = [&](const std::string& name, auto&& body) {
    CheckResult r;
    r.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(r));
  };

  run("gradient", [](CheckResult& r) {
    const GradientCheck g = gradient_check(20, 1e-3, 1);
    r.passed = g.max_relative_error < 1e-4;
    r.detail = fmt("max relative error %.3g over 20 cases", g.max_relative_error);
  });
  run("reservoir", [](CheckResult& r) {
    const ReservoirCheck c = reservoir_check(10, 100, 2000, 2);
    r.passed = c.max_abs_z <= 3.5 && c.chi_square_p > 0.001;
    r.detail = fmt("max |z| %.2f, chi-square p %.3g", c.max_abs_z, c.chi_square_p);
  });
  run("replacement", [](CheckResult& r) {
    const double equal = replacement_rate(0.5, 0.5, 20000, 3);
    const double zero = replacement_rate(0.5, 0.0, 1000, 4);
    r.passed = std::abs(equal - 0.5) < 0.015 && zero == 1.0;
    r.detail = fmt("equal scores %.4f, q_new = 0 %.4f", equal, zero);
  });
  run("metrics", [](CheckResult& r) {
    bool ok = mr_threshold(0.5) == 1.0 && mr_threshold(6.2) == 1.5 && mr_threshold(20.0) == 2.0;
    const PredictionSet pred{{{0.0, 0.0}, {3.0, 4.0}}};
    ok = ok && fde_sample(pred, {{6.0, 8.0}, 1.0}) == 5.0;
    ResultMatrix m(2);
    m.set(1, 1, 1.0);
    m.set(2, 1, 3.0);
    m.set(2, 2, 2.0);
    ok = ok && bwt(m, 2) == 2.0;
    GridSpec grid;
    grid.rows_h = 3;
    grid.cols_w = 3;
    grid.origin = {0.0, 0.0};
    std::vector<double> logits(9, 0.0);
    logits[grid.index({2, 1})] = 3.0;
    const PredictionSet ends = extract_endpoints(Heatmap(grid, logits), 2);
    ok = ok && ends.endpoints.size() == 2 && ends.endpoints[0] == Vec2{1.5, 2.5};
    r.passed = ok;
    r.detail = ok ? "threshold branches, FDE, BWT and local maxima agree" : "metric oracle mismatch";
  });
  run("descent", [&](CheckResult& r) {
    const double ratio = descent_ratio(optimizer, 100, 5);
    r.passed = ratio < 0.9;
    r.detail = fmt("loss ratio after 100 steps %.4f", ratio);
  });
  run("golden", [](CheckResult& r) {
    const std::uint64_t h = tiny_experiment_hash();
    r.passed = h == kTinyExperimentGolden;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "hash %016llx, expected %016llx", static_cast<unsigned long long>(h),
                  static_cast<unsigned long long>(kTinyExperimentGolden));
    r.detail = buf;
  });
  return results;
}

}  // namespace trajcl
