// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace trajcl {

/// Arithmetic mean. Throws on empty input.
double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator). Throws when n < 2.
double sample_sd(std::span<const double> xs);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts against per-cell expectations.
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected);

/// sqrt(n p (1 - p)).
double binomial_sigma(double n, double p);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// One-sided paired t-test of H1: mean(a - b) > 0.
TTestResult paired_t_greater(std::span<const double> a, std::span<const double> b);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace trajcl
