// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "trajcl/memory.hpp"
#include "trajcl/predictor.hpp"

namespace trajcl {

/// Run-resumption unit: model config and parameters, plus optional
/// optimizer, random engine and buffer state. Doubles round-trip exactly.
struct Checkpoint {
  PredictorConfig model;
  ParamVector params;
  std::optional<int> after_task;
  std::optional<AdamState> optimizer;
  std::optional<std::string> rng_state;
  std::optional<TripletSeparationBuffer> separation;
  std::optional<TripletCompletionBuffer> completion;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
/// Throws ParseError on malformed input or a parameter count that does not
/// match the model config.
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace trajcl
