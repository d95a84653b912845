// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trajcl/experiment.hpp"
#include "trajcl/predictor.hpp"

namespace trajcl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

using OptimizerStep = std::function<void(ParamVector&, const GradVector&, AdamState&, double)>;

struct SelftestOptions {
  // Replaceable for mutation checks; defaults to adam_step.
  OptimizerStep optimizer;
};

struct GradientCheck {
  std::size_t cases = 0;
  double max_relative_error = 0.0;
};

/// Tiny predictor used by the gradient checks.
PredictorConfig tiny_predictor_config(std::uint64_t seed);

/// Central differences with step `eps` against the analytic gradient on
/// `cases` random (params, batch) pairs. Per case the error is
/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|).
GradientCheck gradient_check(std::size_t cases, double eps, std::uint64_t seed);

struct ReservoirCheck {
  std::vector<double> inclusion_counts;  // per stream item
  double expected = 0.0;                 // runs * k / n
  double sigma = 0.0;                    // binomial sd of a count
  double max_abs_z = 0.0;
  double chi_square_p = 0.0;
};

ReservoirCheck reservoir_check(std::size_t k, std::size_t n, std::size_t runs, std::uint64_t seed);

/// Fraction of trials in which a full separation buffer whose stored scores
/// all equal `q_stored` replaces an entry when offered `q_new`.
double replacement_rate(double q_stored, double q_new, std::size_t trials, std::uint64_t seed);

/// Relative loss after `steps` optimizer steps on one fixed batch.
double descent_ratio(const OptimizerStep& step, std::size_t steps, std::uint64_t seed);

/// Small deterministic experiment whose matrices are hashed for the golden check.
ExperimentConfig tiny_experiment_config();
/// FNV-1a over the result matrix CSVs of tiny_experiment_config().
std::uint64_t tiny_experiment_hash();
inline constexpr std::uint64_t kTinyExperimentGolden = 0x703449EAACA9C213ULL;

std::vector<CheckResult> run_selftest(const SelftestOptions& options = {});

}  // namespace trajcl
