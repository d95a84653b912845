// SPDX-License-Identifier: Apache-2.0
#include "trajcl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "json_io.hpp"
#include "trajcl/checkpoint.hpp"
#include "trajcl/error.hpp"
#include "trajcl/stats.hpp"

namespace trajcl {
namespace {

using json_io::Json;

constexpr std::uint64_t kShuffleStream = 100;
constexpr std::uint64_t kModelStream = 200;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string cell_dir_name(StrategyKind kind, std::uint64_t seed) {
  return std::string(strategy_name(kind)) + "/seed_" + std::to_string(seed);
}

Json mean_sd_json(const MeanSd& m) {
  Json j = {{"mean", m.mean}, {"n", m.n}};
  j["sd"] = m.sd ? Json(*m.sd) : Json(nullptr);
  return j;
}

std::string format_mean_sd(const std::optional<MeanSd>& m) {
  if (!m) return "-";
  char buf[64];
  if (m->sd) {
    std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", m->mean, *m->sd);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3f", m->mean);
  }
  return buf;
}

Json summary_json(const std::vector<StrategySummary>& summary) {
  Json rows = Json::array();
  for (const StrategySummary& s : summary) {
    Json row = {{"strategy", strategy_name(s.strategy)},
                {"fde_avg", mean_sd_json(s.fde_avg)},
                {"mr_avg", mean_sd_json(s.mr_avg)}};
    row["fde_bwt"] = s.fde_bwt ? mean_sd_json(*s.fde_bwt) : Json(nullptr);
    row["mr_bwt"] = s.mr_bwt ? mean_sd_json(*s.mr_bwt) : Json(nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (tasks.empty() == csv_tasks.empty()) throw ConfigError("config needs either 'tasks' or 'csv_tasks'");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (strategies.empty()) throw ConfigError("config lists no strategies");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  for (const TaskSpec& t : tasks) t.validate();
  for (StrategyKind s : strategies) train.validate(s);
}

ExperimentConfig parse_experiment(const std::string& text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  json_io::expect_keys(j, "config",
                       {"name", "model", "tasks", "csv_tasks", "test_fraction", "strategies", "train", "repetitions",
                        "base_seed", "workers", "save_checkpoints", "output_dir"});
  ExperimentConfig c;
  try {
    json_io::read_opt(j, "name", c.name, "config");
    if (auto it = j.find("model"); it != j.end()) c.model = json_io::predictor_from(*it);
    if (auto it = j.find("tasks"); it != j.end()) {
      if (!it->is_array()) throw ConfigError("tasks must be an array");
      for (const Json& t : *it) c.tasks.push_back(json_io::task_from(t));
    }
    if (auto it = j.find("csv_tasks"); it != j.end()) {
      for (const std::string& p : it->get<std::vector<std::string>>()) {
        const std::filesystem::path path(p);
        c.csv_tasks.push_back(path.is_absolute() || base_dir.empty() ? path : base_dir / path);
      }
    }
    json_io::read_opt(j, "test_fraction", c.test_fraction, "config");
    if (auto it = j.find("strategies"); it != j.end()) {
      for (const std::string& s : it->get<std::vector<std::string>>()) c.strategies.push_back(parse_strategy(s));
    }
    if (auto it = j.find("train"); it != j.end()) c.train = json_io::train_from(*it);
    json_io::read_opt(j, "repetitions", c.repetitions, "config");
    json_io::read_opt(j, "base_seed", c.base_seed, "config");
    json_io::read_opt(j, "workers", c.workers, "config");
    json_io::read_opt(j, "save_checkpoints", c.save_checkpoints, "config");
    std::string out;
    json_io::read_opt(j, "output_dir", out, "config");
    if (!out.empty()) c.output_dir = out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str(), path.parent_path());
}

std::string experiment_to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["model"] = json_io::to_json(c.model);
  if (!c.tasks.empty()) {
    Json tasks = Json::array();
    for (const TaskSpec& t : c.tasks) tasks.push_back(json_io::to_json(t));
    j["tasks"] = std::move(tasks);
  }
  if (!c.csv_tasks.empty()) {
    Json paths = Json::array();
    for (const auto& p : c.csv_tasks) paths.push_back(p.generic_string());
    j["csv_tasks"] = std::move(paths);
  }
  j["test_fraction"] = c.test_fraction;
  Json strategies = Json::array();
  for (StrategyKind s : c.strategies) strategies.push_back(strategy_name(s));
  j["strategies"] = std::move(strategies);
  j["train"] = json_io::to_json(c.train);
  j["repetitions"] = c.repetitions;
  j["base_seed"] = c.base_seed;
  j["workers"] = c.workers;
  j["save_checkpoints"] = c.save_checkpoints;
  j["output_dir"] = c.output_dir.generic_string();
  return j.dump(2) + "\n";
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

std::vector<TaskData> prepare_tasks(const ExperimentConfig& config) {
  std::vector<std::vector<Sample>> per_task;
  if (!config.csv_tasks.empty()) {
    for (std::size_t i = 0; i < config.csv_tasks.size(); ++i) {
      IngestResult ingested = ingest_csv(config.csv_tasks[i], config.model.shape);
      std::vector<Sample> relabeled;
      relabeled.reserve(ingested.samples.size());
      for (const Sample& s : ingested.samples) relabeled.emplace_back(s.scene(), s.truth(), static_cast<int>(i + 1));
      per_task.push_back(std::move(relabeled));
    }
  } else {
    for (std::size_t i = 0; i < config.tasks.size(); ++i) {
      per_task.push_back(generate_task(config.tasks[i], config.model.shape, static_cast<int>(i + 1)));
    }
  }

  std::vector<TaskData> out;
  for (std::size_t i = 0; i < per_task.size(); ++i) {
    std::vector<Sample>& all = per_task[i];
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(all.size()) * config.test_fraction));
    const std::size_t n_train = all.size() - n_test;
    if (n_train == 0 || n_test == 0) {
      throw ConfigError("task " + std::to_string(i + 1) + " has too few samples for a train/test split");
    }
    TaskData data;
    data.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + n_train));
    data.test.assign(std::make_move_iterator(all.begin() + n_train), std::make_move_iterator(all.end()));
    out.push_back(std::move(data));
  }
  return out;
}

std::vector<Sample> training_stream(std::span<const TaskData> tasks, std::uint64_t seed) {
  std::vector<Sample> stream;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::vector<Sample> part = tasks[i].train;
    shuffle_in_place(part, Rng::derive(seed, kShuffleStream + i));
    stream.insert(stream.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return stream;
}

EvalReport evaluate_run(const HeatmapPredictor& model, const RunResult& run, std::span<const TaskData> tasks) {
  const std::size_t n = tasks.size();
  ResultMatrix fde(n);
  ResultMatrix mr(n);
  auto fill_row = [&](std::size_t row, const ParamVector& params) {
    for (std::size_t j = 1; j <= row; ++j) {
      const TaskScore score = evaluate_task(model, params, tasks[j - 1].test);
      fde.set(row, j, score.fde);
      mr.set(row, j, score.mr);
    }
  };
  bool last_row = false;
  for (const TaskCheckpoint& cp : run.checkpoints) {
    const auto row = static_cast<std::size_t>(cp.after_task);
    if (row < 1 || row > n) throw Error("checkpoint refers to an unknown task");
    fill_row(row, cp.params);
    last_row = last_row || row == n;
  }
  if (!last_row) fill_row(n, run.final_params);
  return make_report(std::move(fde), std::move(mr));
}

CellOutcome run_cell(const ExperimentConfig& config, std::span<const TaskData> tasks, StrategyKind strategy,
                     std::uint64_t seed) {
  CellOutcome out;
  out.strategy = strategy;
  out.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    PredictorConfig model_cfg = config.model;
    model_cfg.seed = Rng::derive(seed, kModelStream);
    const HeatmapPredictor model(model_cfg);
    TrainConfig train = config.train;
    train.seed = seed;
    const std::vector<Sample> stream = training_stream(tasks, seed);
    out.run = train_stream(model, stream, strategy, train);
    out.report = evaluate_run(model, *out.run, tasks);
  } catch (const std::exception& e) {
    out.error = e.what();
    out.run.reset();
    out.report.reset();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd m;
  m.n = values.size();
  m.mean = mean(values);
  if (values.size() >= 2) m.sd = sample_sd(values);
  return m;
}

std::vector<StrategySummary> summarize(
    const std::vector<std::pair<StrategyKind, std::vector<EvalReport>>>& reports) {
  std::vector<StrategySummary> out;
  for (const auto& [kind, list] : reports) {
    if (list.empty()) continue;
    StrategySummary s;
    s.strategy = kind;
    std::vector<double> fa, ma, fb, mb;
    for (const EvalReport& r : list) {
      fa.push_back(r.fde_avg);
      ma.push_back(r.mr_avg);
      if (r.fde_bwt) fb.push_back(*r.fde_bwt);
      if (r.mr_bwt) mb.push_back(*r.mr_bwt);
    }
    s.fde_avg = mean_sd(fa);
    s.mr_avg = mean_sd(ma);
    // BWT is only summarized when every seed defines it.
    if (fb.size() == list.size()) s.fde_bwt = mean_sd(fb);
    if (mb.size() == list.size()) s.mr_bwt = mean_sd(mb);
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_table(const std::vector<StrategySummary>& summary) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %5s  %-18s %-18s %-18s %-18s\n", "strategy", "seeds", "FDE-AVG (m)",
                "MR-AVG (%)", "FDE-BWT (m)", "MR-BWT (%)");
  out << line;
  for (const StrategySummary& s : summary) {
    // The "±" sign takes two bytes but one column; pad by hand.
    auto cell = [](const std::optional<MeanSd>& m) {
      std::string text = format_mean_sd(m);
      const std::size_t width = text.find("±") != std::string::npos ? text.size() - 1 : text.size();
      if (width < 18) text.append(18 - width, ' ');
      return text;
    };
    std::snprintf(line, sizeof(line), "%-10s %5zu  ", std::string(strategy_name(s.strategy)).c_str(), s.fde_avg.n);
    out << line << cell(s.fde_avg) << ' ' << cell(s.mr_avg) << ' ' << cell(s.fde_bwt) << ' ' << cell(s.mr_bwt);
    out << '\n';
  }
  std::string text = out.str();
  // Trim trailing spaces per line.
  std::string trimmed;
  std::istringstream lines(text);
  std::string l;
  while (std::getline(lines, l)) {
    l.erase(l.find_last_not_of(' ') + 1);
    trimmed += l + "\n";
  }
  return trimmed;
}

std::string matrix_to_csv(const ResultMatrix& matrix) {
  const std::size_t n = matrix.n_tasks();
  std::string out = "after_task";
  for (std::size_t j = 1; j <= n; ++j) out += ",task_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 1; i <= n; ++i) {
    out += std::to_string(i);
    for (std::size_t j = 1; j <= n; ++j) {
      out += ',';
      if (j <= i && matrix.has(i, j)) out += format_double(matrix.at(i, j));
    }
    out += '\n';
  }
  return out;
}

ResultMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("after_task", 0) != 0) throw ParseError("missing matrix header", 1);
  const auto n = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  ResultMatrix matrix(n);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != n + 1) throw ParseError("matrix row has the wrong number of fields", line_no);
    const std::size_t i = std::stoul(fields[0]);
    for (std::size_t j = 1; j <= n; ++j) {
      if (fields[j].empty()) continue;
      double v = 0.0;
      const auto res = std::from_chars(fields[j].data(), fields[j].data() + fields[j].size(), v);
      if (res.ec != std::errc()) throw ParseError("bad matrix value '" + fields[j] + "'", line_no);
      matrix.set(i, j, v);
    }
  }
  return matrix;
}

std::string report_to_json(const EvalReport& r) {
  auto matrix_json = [](const ResultMatrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 1; i <= m.n_tasks(); ++i) {
      Json row = Json::array();
      for (std::size_t j = 1; j <= m.n_tasks(); ++j) row.push_back(j <= i && m.has(i, j) ? Json(m.at(i, j)) : Json(nullptr));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  Json j;
  j["fde_per_task"] = r.fde_per_task;
  j["mr_per_task"] = r.mr_per_task;
  j["fde_avg"] = r.fde_avg;
  j["mr_avg"] = r.mr_avg;
  j["fde_bwt"] = r.fde_bwt ? Json(*r.fde_bwt) : Json(nullptr);
  j["mr_bwt"] = r.mr_bwt ? Json(*r.mr_bwt) : Json(nullptr);
  j["fde_matrix"] = matrix_json(r.fde);
  j["mr_matrix"] = matrix_json(r.mr);
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const std::vector<TaskData> tasks = prepare_tasks(config);

  struct Job {
    StrategyKind strategy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (StrategyKind s : config.strategies) {
    for (std::size_t r = 0; r < config.repetitions; ++r) jobs.push_back({s, config.seed_of(r)});
  }

  RunArtifacts artifacts;
  artifacts.output_dir = output_dir;
  artifacts.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < jobs.size(); k = next.fetch_add(1)) {
      artifacts.cells[k] = run_cell(config, tasks, jobs[k].strategy, jobs[k].seed);
    }
  };
  const std::size_t n_workers = std::min(config.workers, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  std::filesystem::create_directories(output_dir);
  Json cells = Json::array();
  std::vector<std::pair<StrategyKind, std::vector<EvalReport>>> by_strategy;
  for (StrategyKind s : config.strategies) by_strategy.push_back({s, {}});

  for (const CellOutcome& cell : artifacts.cells) {
    const std::string rel = cell_dir_name(cell.strategy, cell.seed);
    Json entry = {{"strategy", strategy_name(cell.strategy)}, {"seed", cell.seed}, {"directory", rel}};
    if (!cell.error.empty()) {
      ++artifacts.failed_cells;
      entry["status"] = "error";
      entry["error"] = cell.error;
      entry["wall_clock_seconds"] = cell.seconds;
      cells.push_back(std::move(entry));
      continue;
    }
    const std::filesystem::path dir = output_dir / rel;
    const EvalReport& report = *cell.report;
    write_text_file(dir / "fde_matrix.csv", matrix_to_csv(report.fde));
    write_text_file(dir / "mr_matrix.csv", matrix_to_csv(report.mr));
    write_text_file(dir / "report.csv", report_to_csv(report));
    write_text_file(dir / "report.json", report_to_json(report));
    Json checkpoints = Json::array();
    if (config.save_checkpoints) {
      PredictorConfig model_cfg = config.model;
      model_cfg.seed = Rng::derive(cell.seed, kModelStream);
      for (const TaskCheckpoint& cp : cell.run->checkpoints) {
        const std::string name = "checkpoints/after_task_" + std::to_string(cp.after_task) + ".json";
        Checkpoint ck;
        ck.model = model_cfg;
        ck.params = cp.params;
        ck.after_task = cp.after_task;
        save_checkpoint(dir / name, ck);
        checkpoints.push_back(rel + "/" + name);
      }
      Checkpoint last;
      last.model = model_cfg;
      last.params = cell.run->final_params;
      last.optimizer = cell.run->optimizer;
      last.separation = cell.run->separation;
      last.completion = cell.run->completion;
      save_checkpoint(dir / "checkpoints/final.json", last);
      checkpoints.push_back(rel + "/checkpoints/final.json");
    }
    entry["status"] = "ok";
    entry["checkpoints"] = std::move(checkpoints);
    entry["steps"] = cell.run->stats.steps;
    entry["wall_clock_seconds"] = cell.seconds;
    cells.push_back(std::move(entry));
    for (auto& [kind, list] : by_strategy) {
      if (kind == cell.strategy) list.push_back(report);
    }
  }

  artifacts.summary = summarize(by_strategy);
  write_text_file(output_dir / "summary.txt", summary_table(artifacts.summary));
  write_text_file(output_dir / "summary.json", summary_json(artifacts.summary).dump(2) + "\n");

  Json seeds = Json::array();
  for (std::size_t r = 0; r < config.repetitions; ++r) seeds.push_back(config.seed_of(r));
  Json manifest;
  manifest["name"] = config.name;
  manifest["config"] = Json::parse(experiment_to_json(config));
  manifest["seeds"] = std::move(seeds);
  manifest["cells"] = std::move(cells);
  manifest["failed_cells"] = artifacts.failed_cells;
  manifest["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  write_text_file(output_dir / "manifest.json", manifest.dump(2) + "\n");
  return artifacts;
}

std::vector<std::filesystem::path> generate_dataset(const ExperimentConfig& config,
                                                    const std::filesystem::path& output_dir) {
  if (config.tasks.empty()) throw ConfigError("gen needs synthetic 'tasks' in the config");
  std::vector<std::filesystem::path> files;
  Json order = Json::array();
  std::int64_t next_id = 1;
  for (std::size_t i = 0; i < config.tasks.size(); ++i) {
    const TaskSpec& spec = config.tasks[i];
    const TrackTable table = generate_task_tracks(spec, config.model.shape, static_cast<int>(i + 1), next_id);
    for (const RawTrack& t : table.tracks) next_id = std::max(next_id, t.id + 1);
    const std::string name = "task_" + std::to_string(i + 1) + "_" + std::string(motion_name(spec.kind)) + ".csv";
    std::ostringstream csv;
    write_csv(csv, table);
    write_text_file(output_dir / "tasks" / name, csv.str());
    files.push_back(output_dir / "tasks" / name);
    order.push_back({{"task", i + 1}, {"file", "tasks/" + name}, {"spec", json_io::to_json(spec)}});
  }
  Json manifest;
  manifest["name"] = config.name;
  manifest["shape"] = json_io::to_json(config.model.shape);
  manifest["test_fraction"] = config.test_fraction;
  manifest["tasks"] = std::move(order);
  write_text_file(output_dir / "stream_manifest.json", manifest.dump(2) + "\n");
  return files;
}

std::vector<StrategySummary> summary_from_run_dir(const std::filesystem::path& run_dir) {
  Json manifest;
  try {
    manifest = Json::parse(read_text_file(run_dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what(), 0);
  }
  std::vector<std::pair<StrategyKind, std::vector<EvalReport>>> by_strategy;
  for (const Json& s : manifest.at("config").at("strategies")) by_strategy.push_back({parse_strategy(s.get<std::string>()), {}});
  for (const Json& cell : manifest.at("cells")) {
    if (cell.at("status").get<std::string>() != "ok") continue;
    const StrategyKind kind = parse_strategy(cell.at("strategy").get<std::string>());
    const std::filesystem::path dir = run_dir / cell.at("directory").get<std::string>();
    EvalReport report = report_from_csv(read_text_file(dir / "report.csv"));
    for (auto& [k, list] : by_strategy) {
      if (k == kind) list.push_back(std::move(report));
    }
  }
  return summarize(by_strategy);
}

}  // namespace trajcl
