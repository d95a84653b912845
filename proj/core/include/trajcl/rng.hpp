// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace trajcl {

/// Seeded random source. One instance per owner; never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Uniform integer in [lo, hi], both inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Uniform real in [0, 1).
  double uniform01();
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);

  std::mt19937_64& engine() noexcept { return engine_; }

  std::string state() const;
  void restore(const std::string& state);

  /// Independent child seed for a named sub-stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace trajcl
