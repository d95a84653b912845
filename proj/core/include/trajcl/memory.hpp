// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "trajcl/error.hpp"
#include "trajcl/predictor.hpp"
#include "trajcl/rng.hpp"
#include "trajcl/types.hpp"

namespace trajcl {

/// A stored replay sample: input, ground truth, and the logits the model
/// produced when it first observed the sample. Carries no task label.
struct MemoryTriplet {
  Scene scene;
  GroundTruth truth;
  std::vector<double> init_logits;
  // Position in the training stream; provenance for offline analysis only.
  std::size_t stream_index = 0;
  // Gradient captured at storage time; only set in cached scoring mode.
  std::shared_ptr<const GradVector> cached_gradient;
};

/// Reservoir-sampled store: after n >= capacity observations every observed
/// item is held with probability capacity / n.
template <class Item>
class CompletionBuffer {
 public:
  explicit CompletionBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("completion buffer capacity must be positive");
    items_.reserve(capacity_);
  }

  /// Rebuilds a buffer from a dump; checks the size invariant.
  static CompletionBuffer restore(std::size_t capacity, std::vector<Item> items, std::uint64_t stream_count) {
    CompletionBuffer buffer(capacity);
    if (items.size() != std::min<std::uint64_t>(stream_count, capacity)) {
      throw Error("completion buffer dump violates |items| = min(stream_count, capacity)");
    }
    buffer.items_ = std::move(items);
    buffer.stream_count_ = stream_count;
    return buffer;
  }

  /// Offers the j-th stream item. Returns true when it was stored.
  bool observe(Item item, Rng& rng) {
    ++stream_count_;
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
      return true;
    }
    const std::uint64_t r = rng.uniform_int(1, stream_count_);
    if (r > capacity_) return false;
    items_[r - 1] = std::move(item);
    return true;
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t stream_count() const noexcept { return stream_count_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<Item>& items() const noexcept { return items_; }
  const Item& item(std::size_t i) const { return items_.at(i); }

 private:
  std::size_t capacity_;
  std::vector<Item> items_;
  std::uint64_t stream_count_ = 0;
};

/// Score assigned to the first stream sample, before any comparison is possible.
inline constexpr double kInitialSeparationScore = 0.1;

/// Gradient-diversity store. Each entry keeps its similarity score q in
/// [0, 2]; once full, only items with q < 1 may displace an entry, and the
/// entry to challenge is drawn proportionally to the stored scores.
template <class Item>
class SeparationBuffer {
 public:
  struct Entry {
    Item item;
    double score = 0.0;
  };

  explicit SeparationBuffer(std::size_t capacity, std::size_t compare_count = 10)
      : capacity_(capacity), compare_count_(compare_count) {
    if (capacity_ == 0) throw ConfigError("separation buffer capacity must be positive");
    if (compare_count_ == 0) throw ConfigError("separation buffer needs B >= 1");
    entries_.reserve(capacity_);
  }

  static SeparationBuffer restore(std::size_t capacity, std::size_t compare_count, std::vector<Entry> entries,
                                  std::uint64_t stream_count) {
    SeparationBuffer buffer(capacity, compare_count);
    if (entries.size() > capacity) throw Error("separation buffer dump exceeds its capacity");
    for (const Entry& e : entries) {
      if (!(e.score >= 0.0 && e.score <= 2.0)) throw Error("separation score outside [0, 2]");
    }
    buffer.entries_ = std::move(entries);
    buffer.stream_count_ = stream_count;
    return buffer;
  }

  /// Offers an item with its precomputed similarity score. Returns true
  /// when the item was stored.
  bool observe(Item item, double q_new, Rng& rng) {
    if (!(q_new >= 0.0 && q_new <= 2.0)) throw Error("similarity score outside [0, 2]");
    ++stream_count_;
    if (entries_.size() < capacity_) {
      entries_.push_back({std::move(item), q_new});
      return true;
    }
    if (q_new >= 1.0) return false;

    const std::size_t i = draw_candidate(rng);
    const double q_i = entries_[i].score;
    const double denom = q_i + q_new;
    // Both scores zero only happens when every stored score is zero; treat
    // the two as exchangeable.
    const double p_replace = denom > 0.0 ? q_i / denom : 0.5;
    if (rng.uniform01() < p_replace) {
      entries_[i] = {std::move(item), q_new};
      return true;
    }
    return false;
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t compare_count() const noexcept { return compare_count_; }
  std::uint64_t stream_count() const noexcept { return stream_count_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Item& item(std::size_t i) const { return entries_.at(i).item; }

 private:
  // i ~ P(i) = q_i / sum(q); uniform when all scores are zero.
  std::size_t draw_candidate(Rng& rng) const {
    double total = 0.0;
    for (const Entry& e : entries_) total += e.score;
    if (!(total > 0.0)) return rng.index(entries_.size());
    const double target = rng.uniform01() * total;
    double running = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      running += entries_[i].score;
      if (target < running) return i;
    }
    // Rounding can leave target == total; fall back to the last positive entry.
    for (std::size_t i = entries_.size(); i-- > 0;) {
      if (entries_[i].score > 0.0) return i;
    }
    return entries_.size() - 1;
  }

  std::size_t capacity_;
  std::size_t compare_count_;
  std::vector<Entry> entries_;
  std::uint64_t stream_count_ = 0;
};

/// Cosine similarity clamped to [-1, 1]; zero-norm pairs score 0.
inline double cosine_similarity(const GradVector& a, const GradVector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

/// q = max_b cos(g, g_b) + 1 over min(B, |buffer|) stored items drawn
/// uniformly with replacement. `grad_of(item)` yields the stored item's
/// gradient; it is evaluated once per distinct drawn item.
template <class Item, class GradOf>
double separation_score(const GradVector& g, const SeparationBuffer<Item>& buffer, Rng& rng, GradOf&& grad_of) {
  if (buffer.empty()) throw Error("separation_score needs a non-empty buffer");
  const std::size_t draws = std::min(buffer.compare_count(), buffer.size());
  std::vector<std::size_t> picked(draws);
  for (std::size_t& idx : picked) idx = rng.index(buffer.size());
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

  double best = -1.0;
  for (std::size_t idx : picked) {
    const GradVector& g_b = grad_of(buffer.item(idx));
    best = std::max(best, cosine_similarity(g, g_b));
  }
  return best + 1.0;
}

/// n uniform draws with replacement; an empty store yields an empty batch.
template <class Item>
std::vector<Item> draw_minibatch(const CompletionBuffer<Item>& buffer, std::size_t n, Rng& rng) {
  std::vector<Item> out;
  if (buffer.empty()) return out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(buffer.item(rng.index(buffer.size())));
  return out;
}

template <class Item>
std::vector<Item> draw_minibatch(const SeparationBuffer<Item>& buffer, std::size_t n, Rng& rng) {
  std::vector<Item> out;
  if (buffer.empty()) return out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(buffer.item(rng.index(buffer.size())));
  return out;
}

using TripletCompletionBuffer = CompletionBuffer<MemoryTriplet>;
using TripletSeparationBuffer = SeparationBuffer<MemoryTriplet>;

}  // namespace trajcl
