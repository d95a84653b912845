// SPDX-License-Identifier: Apache-2.0
#include "trajcl/label_audit.hpp"

#include <array>
#include <atomic>

namespace trajcl {
namespace {

thread_local LabelUse t_current_use = LabelUse::training;
std::array<std::atomic<std::uint64_t>, kLabelUseCount> g_reads{};

}  // namespace

LabelUseScope::LabelUseScope(LabelUse use) noexcept : previous_(t_current_use) {
  t_current_use = use;
}

LabelUseScope::~LabelUseScope() { t_current_use = previous_; }

LabelUse current_label_use() noexcept { return t_current_use; }

std::uint64_t label_reads(LabelUse use) noexcept {
  return g_reads[static_cast<int>(use)].load(std::memory_order_relaxed);
}

void reset_label_reads() noexcept {
  for (auto& counter : g_reads) counter.store(0, std::memory_order_relaxed);
}

namespace detail {
void note_label_read() noexcept {
  g_reads[static_cast<int>(t_current_use)].fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

}  // namespace trajcl
