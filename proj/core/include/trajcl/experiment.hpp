// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajcl/learner.hpp"
#include "trajcl/metrics.hpp"
#include "trajcl/scenarios.hpp"

namespace trajcl {

/// Overrides the configured output directory when set.
inline constexpr const char* kOutputDirEnv = "TRAJCL_OUTPUT_DIR";

struct ExperimentConfig {
  std::string name = "experiment";
  PredictorConfig model;
  std::vector<TaskSpec> tasks;
  // CSV files, one per task, used instead of the synthetic tasks when set.
  std::vector<std::filesystem::path> csv_tasks;
  double test_fraction = 0.2;
  std::vector<StrategyKind> strategies;
  TrainConfig train;
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 1;  // repetition r uses seed base_seed + r
  std::size_t workers = 1;
  bool save_checkpoints = true;
  std::filesystem::path output_dir = "runs";

  std::uint64_t seed_of(std::size_t repetition) const { return base_seed + repetition; }
  /// Throws ConfigError.
  void validate() const;
};

/// Parses the JSON config. Relative csv paths resolve against `base_dir`.
ExperimentConfig parse_experiment(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);
std::string experiment_to_json(const ExperimentConfig& config);

/// Output directory after the environment override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

struct TaskData {
  std::vector<Sample> train;  // first (1 - test_fraction) of the task's samples
  std::vector<Sample> test;
};

/// Per-task samples split by index; labels are the 1-based task positions.
std::vector<TaskData> prepare_tasks(const ExperimentConfig& config);

/// Training stream for one repetition: the train splits in task order, each
/// shuffled with a sub-stream of `seed`.
std::vector<Sample> training_stream(std::span<const TaskData> tasks, std::uint64_t seed);

/// Evaluates every checkpoint on every task learned so far. The final
/// parameters fill the last row when no checkpoint covers it.
EvalReport evaluate_run(const HeatmapPredictor& model, const RunResult& run, std::span<const TaskData> tasks);

struct CellOutcome {
  StrategyKind strategy = StrategyKind::Vanilla;
  std::uint64_t seed = 0;
  std::optional<RunResult> run;
  std::optional<EvalReport> report;
  std::string error;  // non-empty when the cell failed
  double seconds = 0.0;
};

/// Trains and evaluates one (strategy, seed) cell. Errors are captured.
CellOutcome run_cell(const ExperimentConfig& config, std::span<const TaskData> tasks, StrategyKind strategy,
                     std::uint64_t seed);

struct MeanSd {
  double mean = 0.0;
  std::optional<double> sd;  // needs at least two values
  std::size_t n = 0;
};

struct StrategySummary {
  StrategyKind strategy = StrategyKind::Vanilla;
  MeanSd fde_avg;
  MeanSd mr_avg;
  std::optional<MeanSd> fde_bwt;
  std::optional<MeanSd> mr_bwt;
};

MeanSd mean_sd(std::span<const double> values);

/// Aggregates per-seed reports of each strategy in the given order.
std::vector<StrategySummary> summarize(const std::vector<std::pair<StrategyKind, std::vector<EvalReport>>>& reports);
std::string summary_table(const std::vector<StrategySummary>& summary);

struct RunArtifacts {
  std::filesystem::path output_dir;
  std::vector<CellOutcome> cells;  // strategy-major, then repetition
  std::vector<StrategySummary> summary;
  std::size_t failed_cells = 0;
};

/// Layout under the output directory:
///   <strategy>/seed_<s>/{fde_matrix.csv, mr_matrix.csv, report.csv, report.json}
///   <strategy>/seed_<s>/checkpoints/after_task_<c>.json
///   summary.txt, summary.json, manifest.json
RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir);

/// Writes tasks/task_<i>_<kind>.csv and stream_manifest.json.
std::vector<std::filesystem::path> generate_dataset(const ExperimentConfig& config,
                                                    const std::filesystem::path& output_dir);

/// Re-reads every <strategy>/seed_*/report.csv under a run directory and
/// rebuilds the summary. Strategies are ordered as in manifest.json.
std::vector<StrategySummary> summary_from_run_dir(const std::filesystem::path& run_dir);

/// Square matrix CSV: header "after_task,task_1,...,task_N"; undefined
/// cells are empty.
std::string matrix_to_csv(const ResultMatrix& matrix);
ResultMatrix matrix_from_csv(const std::string& text);

std::string report_to_json(const EvalReport& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace trajcl
