// SPDX-License-Identifier: Apache-2.0
#include "trajcl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace trajcl {
namespace {

using json_io::Json;

constexpr std::string_view kFormat = "trajcl-checkpoint";
constexpr int kVersion = 1;

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["model"] = json_io::to_json(c.model);
  if (c.after_task) j["after_task"] = *c.after_task;
  j["params"] = json_io::to_json(c.params.values);
  if (c.optimizer) {
    j["optimizer"] = {{"step", c.optimizer->step},
                      {"m", json_io::to_json(c.optimizer->m)},
                      {"v", json_io::to_json(c.optimizer->v)}};
  }
  if (c.rng_state) j["rng"] = *c.rng_state;
  if (c.separation) {
    Json entries = Json::array();
    for (const auto& e : c.separation->entries()) {
      Json item = json_io::to_json(e.item);
      item["score"] = e.score;
      entries.push_back(std::move(item));
    }
    j["separation"] = {{"capacity", c.separation->capacity()},
                       {"compare_count", c.separation->compare_count()},
                       {"stream_count", c.separation->stream_count()},
                       {"entries", std::move(entries)}};
  }
  if (c.completion) {
    Json items = Json::array();
    for (const auto& t : c.completion->items()) items.push_back(json_io::to_json(t));
    j["completion"] = {{"capacity", c.completion->capacity()},
                       {"stream_count", c.completion->stream_count()},
                       {"items", std::move(items)}};
  }
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    if (j.value("format", std::string()) != kFormat) throw ParseError("not a trajcl checkpoint", 0);
    if (j.at("version").get<int>() != kVersion) throw ParseError("unsupported checkpoint version", 0);
    Checkpoint c;
    c.model = json_io::predictor_from(j.at("model"));
    c.params = ParamVector(json_io::doubles_from(j.at("params"), "params"));
    if (c.params.size() != HeatmapPredictor(c.model).param_count()) {
      throw ParseError("parameter count does not match the model config", 0);
    }
    if (auto it = j.find("after_task"); it != j.end()) c.after_task = it->get<int>();
    if (auto it = j.find("optimizer"); it != j.end()) {
      AdamState s;
      s.step = it->at("step").get<std::uint64_t>();
      s.m = json_io::doubles_from(it->at("m"), "optimizer.m");
      s.v = json_io::doubles_from(it->at("v"), "optimizer.v");
      if (s.m.size() != c.params.size() || s.v.size() != c.params.size()) {
        throw ParseError("optimizer state size does not match the parameters", 0);
      }
      c.optimizer = std::move(s);
    }
    if (auto it = j.find("rng"); it != j.end()) c.rng_state = it->get<std::string>();
    if (auto it = j.find("separation"); it != j.end()) {
      std::vector<TripletSeparationBuffer::Entry> entries;
      for (const Json& e : it->at("entries")) entries.push_back({json_io::triplet_from(e), e.at("score").get<double>()});
      c.separation = TripletSeparationBuffer::restore(it->at("capacity").get<std::size_t>(),
                                                      it->at("compare_count").get<std::size_t>(), std::move(entries),
                                                      it->at("stream_count").get<std::uint64_t>());
    }
    if (auto it = j.find("completion"); it != j.end()) {
      std::vector<MemoryTriplet> items;
      for (const Json& e : it->at("items")) items.push_back(json_io::triplet_from(e));
      c.completion = TripletCompletionBuffer::restore(it->at("capacity").get<std::size_t>(), std::move(items),
                                                      it->at("stream_count").get<std::uint64_t>());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string text = checkpoint_to_json(checkpoint);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace trajcl
