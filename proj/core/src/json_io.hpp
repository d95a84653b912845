// SPDX-License-Identifier: Apache-2.0
// JSON mapping of the configuration and data types. Private to the library.
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "trajcl/error.hpp"
#include "trajcl/learner.hpp"
#include "trajcl/memory.hpp"
#include "trajcl/predictor.hpp"
#include "trajcl/scenarios.hpp"

namespace trajcl::json_io {

using Json = nlohmann::ordered_json;

/// Throws ConfigError naming `where` when `j` is not an object or holds a
/// key outside `allowed`.
void expect_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed);

template <class T>
void read_opt(const Json& j, const char* key, T& out, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

Json to_json(const SceneShape& s);
SceneShape scene_shape_from(const Json& j);
Json to_json(const GridSpec& g);
GridSpec grid_from(const Json& j);
Json to_json(const PredictorConfig& c);
PredictorConfig predictor_from(const Json& j);
Json to_json(const LossSpec& l);
LossSpec loss_from(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_from(const Json& j);
Json to_json(const TaskSpec& t);
TaskSpec task_from(const Json& j);

Json to_json(const Scene& s);
Scene scene_from(const Json& j);
Json to_json(const MemoryTriplet& t);
MemoryTriplet triplet_from(const Json& j);

Json to_json(const std::vector<double>& v);
std::vector<double> doubles_from(const Json& j, std::string_view where);

}  // namespace trajcl::json_io
