// SPDX-License-Identifier: Apache-2.0
// trajcl: generate streams, run strategy sweeps, evaluate checkpoints.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "trajcl/checkpoint.hpp"
#include "trajcl/error.hpp"
#include "trajcl/experiment.hpp"
#include "trajcl/selftest.hpp"

namespace fs = std::filesystem;
using namespace trajcl;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelftest = 3;

fs::path output_dir(const ExperimentConfig& config, const std::string& flag) {
  if (!flag.empty()) return flag;
  return resolve_output_dir(config);
}

int cmd_gen(const std::string& config_path, const std::string& out_flag) {
  const ExperimentConfig config = load_experiment(config_path);
  const fs::path out = output_dir(config, out_flag);
  for (const fs::path& f : generate_dataset(config, out)) std::cout << f.string() << "\n";
  std::cout << (out / "stream_manifest.json").string() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_flag, std::size_t workers) {
  ExperimentConfig config = load_experiment(config_path);
  if (workers > 0) config.workers = workers;
  const fs::path out = output_dir(config, out_flag);
  const RunArtifacts artifacts = run_experiment(config, out);
  std::cout << summary_table(artifacts.summary);
  for (const CellOutcome& cell : artifacts.cells) {
    if (!cell.error.empty()) {
      std::cerr << "cell " << strategy_name(cell.strategy) << " seed " << cell.seed << " failed: " << cell.error
                << "\n";
    }
  }
  std::cout << "artifacts: " << out.string() << "\n";
  return artifacts.failed_cells == 0 ? 0 : kExitRuntime;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path, const std::string& data_path) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const HeatmapPredictor model(ck.model);
  std::printf("task,samples,fde,mr\n");
  if (!data_path.empty()) {
    const IngestResult data = ingest_csv(data_path, ck.model.shape);
    if (data.samples.empty()) throw Error("no complete windows in " + data_path);
    const TaskScore score = evaluate_task(model, ck.params, data.samples);
    std::printf("all,%zu,%.6f,%.6f\n", data.samples.size(), score.fde, score.mr);
    if (data.dropped_gaps > 0) std::fprintf(stderr, "skipped %zu frame gaps\n", data.dropped_gaps);
    return 0;
  }
  const ExperimentConfig config = load_experiment(config_path);
  if (!(config.model.shape == ck.model.shape)) throw ConfigError("checkpoint and config disagree on the scene shape");
  const std::vector<TaskData> tasks = prepare_tasks(config);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const TaskScore score = evaluate_task(model, ck.params, tasks[i].test);
    std::printf("%zu,%zu,%.6f,%.6f\n", i + 1, tasks[i].test.size(), score.fde, score.mr);
  }
  return 0;
}

int cmd_report(const std::string& run_dir) {
  std::cout << summary_table(summary_from_run_dir(run_dir));
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const CheckResult& r : run_selftest()) {
    std::printf("%-12s %s  %s (%.2fs)\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str(), r.seconds);
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-free continual learning for trajectory prediction"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::size_t workers = 0;
  std::string checkpoint_path;
  std::string data_path;
  std::string run_dir;

  auto* gen = app.add_subcommand("gen", "Write per-task CSVs and a stream manifest");
  gen->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("-o,--out", out_flag, "Output directory (overrides TRAJCL_OUTPUT_DIR and the config)");

  auto* run = app.add_subcommand("run", "Train and evaluate every strategy x seed cell");
  run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_flag, "Output directory (overrides TRAJCL_OUTPUT_DIR and the config)");
  run->add_option("-j,--workers", workers, "Concurrent cells (default: config value)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on task test splits or a CSV file");
  eval->add_option("-k,--checkpoint", checkpoint_path, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  auto* eval_config = eval->add_option("-c,--config", config_path, "Experiment config for the test splits");
  auto* eval_data = eval->add_option("-d,--data", data_path, "Trajectory CSV to evaluate on");
  eval_config->excludes(eval_data);

  auto* report = app.add_subcommand("report", "Rebuild the summary table from a run directory");
  report->add_option("run_dir", run_dir, "Directory written by 'run'")->required()->check(CLI::ExistingDirectory);

  auto* selftest = app.add_subcommand("selftest", "Run the fast invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(config_path, out_flag);
    if (*run) return cmd_run(config_path, out_flag, workers);
    if (*eval) {
      if (config_path.empty() && data_path.empty()) throw ConfigError("eval needs --config or --data");
      return cmd_eval(checkpoint_path, config_path, data_path);
    }
    if (*report) return cmd_report(run_dir);
    if (*selftest) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
