// SPDX-License-Identifier: Apache-2.0
#include "trajcl/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "trajcl/error.hpp"

namespace trajcl {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of an empty sequence");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) throw Error("sample standard deviation needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2) {
    throw Error("chi-square needs matching count vectors with at least two cells");
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw Error("chi-square expectation must be positive");
    const double d = observed[i] - expected[i];
    r.statistic += d * d / expected[i];
  }
  r.dof = static_cast<double>(observed.size() - 1);
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

double binomial_sigma(double n, double p) { return std::sqrt(n * p * (1.0 - p)); }

TTestResult paired_t_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("paired t-test needs two equal samples of size >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  TTestResult r;
  r.dof = static_cast<double>(d.size() - 1);
  const double m = mean(d);
  const double se = sample_sd(d) / std::sqrt(static_cast<double>(d.size()));
  if (se == 0.0) {
    r.t = m > 0.0 ? std::numeric_limits<double>::infinity() : (m < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p_value = m > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.t = m / se;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::students_t(r.dof), r.t));
  return r;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace trajcl
