// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace trajcl {

// Every read of Sample::task_label() is counted under the purpose that is
// active on the calling thread. Task-free training must leave the `training`
// counter untouched; checkpoint scheduling and evaluation run under
// `evaluation`, and the task-aware baselines (A-GEM, Joint) under
// `task_aware_strategy`.
enum class LabelUse : int { training = 0, evaluation = 1, task_aware_strategy = 2 };

inline constexpr int kLabelUseCount = 3;

/// RAII guard that switches the label-read purpose for the current thread.
class LabelUseScope {
 public:
  explicit LabelUseScope(LabelUse use) noexcept;
  ~LabelUseScope();
  LabelUseScope(const LabelUseScope&) = delete;
  LabelUseScope& operator=(const LabelUseScope&) = delete;

 private:
  LabelUse previous_;
};

LabelUse current_label_use() noexcept;
std::uint64_t label_reads(LabelUse use) noexcept;
void reset_label_reads() noexcept;

namespace detail {
void note_label_read() noexcept;
}

}  // namespace trajcl
