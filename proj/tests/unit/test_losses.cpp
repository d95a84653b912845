// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "trajcl/error.hpp"
#include "trajcl/losses.hpp"

using namespace trajcl;

namespace {

// Direct formulas, no shared code with the library.
double ce_oracle(const std::vector<double>& z, std::size_t t) {
  double sum = 0.0;
  for (double v : z) sum += std::exp(v);
  return -std::log(std::exp(z[t]) / sum);
}

double focal_oracle(const std::vector<double>& z, std::size_t t, double gamma) {
  double sum = 0.0;
  for (double v : z) sum += std::exp(v);
  const double p = std::exp(z[t]) / sum;
  return -std::pow(1.0 - p, gamma) * std::log(p);
}

}  // namespace

TEST(Losses, CrossEntropyOnTwoByTwoGrid) {
  // logits (0, ln 2, 0, ln 5): probabilities 1/9, 2/9, 1/9, 5/9.
  const std::vector<double> z{0.0, std::log(2.0), 0.0, std::log(5.0)};
  const LossSpec spec;
  EXPECT_NEAR(base_loss_logits(z, 3, spec), std::log(9.0 / 5.0), 1e-15);
  EXPECT_NEAR(base_loss_logits(z, 0, spec), std::log(9.0), 1e-15);
  std::vector<double> g(4, 0.0);
  base_loss_logits(z, 3, spec, g);
  EXPECT_NEAR(g[0], 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(g[1], 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(g[3], 5.0 / 9.0 - 1.0, 1e-15);
}

TEST(Losses, FocalWithZeroGammaIsCrossEntropy) {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  LossSpec ce;
  LossSpec focal;
  focal.base_kind = BaseLossKind::focal;
  focal.focal_gamma = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> z(9);
    for (double& v : z) v = n(eng);
    const std::size_t t = static_cast<std::size_t>(k % 9);
    std::vector<double> g1(9, 0.0), g2(9, 0.0);
    EXPECT_NEAR(base_loss_logits(z, t, ce, g1), base_loss_logits(z, t, focal, g2), 1e-12);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(g1[i], g2[i], 1e-12);
  }
}

TEST(Losses, MatchesDirectFormulasAndFiniteDifferences) {
  std::mt19937_64 eng(2);
  std::normal_distribution<double> n(0.0, 1.5);
  for (double gamma : {0.0, 0.5, 2.0}) {
    LossSpec spec;
    if (gamma > 0.0) {
      spec.base_kind = BaseLossKind::focal;
      spec.focal_gamma = gamma;
    }
    for (int k = 0; k < 50; ++k) {
      std::vector<double> z(6);
      for (double& v : z) v = n(eng);
      const std::size_t t = static_cast<std::size_t>(k % 6);
      const double expected = gamma > 0.0 ? focal_oracle(z, t, gamma) : ce_oracle(z, t);
      std::vector<double> g(6, 0.0);
      EXPECT_NEAR(base_loss_logits(z, t, spec, g), expected, 1e-12);
      for (std::size_t i = 0; i < z.size(); ++i) {
        std::vector<double> zp = z, zm = z;
        zp[i] += 1e-6;
        zm[i] -= 1e-6;
        const double fd = (base_loss_logits(zp, t, spec) - base_loss_logits(zm, t, spec)) / 2e-6;
        EXPECT_NEAR(g[i], fd, 1e-6);
      }
    }
  }
}

TEST(Losses, FocalGradientIsFiniteAtCertainty) {
  LossSpec spec;
  spec.base_kind = BaseLossKind::focal;
  spec.focal_gamma = 2.0;
  const std::vector<double> z{100.0, -100.0, -100.0};
  std::vector<double> g(3, 0.0);
  EXPECT_NEAR(base_loss_logits(z, 0, spec, g), 0.0, 1e-300);
  for (double v : g) EXPECT_TRUE(std::isfinite(v));
}

TEST(Losses, DistillationIsMeanSquaredLogitGap) {
  const std::vector<double> z{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> init{1.0, 0.0, 3.0, 5.0};
  std::vector<double> g(4, 0.0);
  EXPECT_DOUBLE_EQ(distillation_logits(z, init, g), (4.0 + 1.0) / 4.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0 * 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(g[3], 2.0 * -1.0 / 4.0);
  EXPECT_DOUBLE_EQ(distillation_logits(z, z), 0.0);
  EXPECT_THROW(distillation_logits(z, std::vector<double>{1.0}), Error);
}

TEST(Losses, GradientScaleAccumulates) {
  const std::vector<double> z{0.3, -0.2};
  std::vector<double> once(2, 0.0), twice(2, 0.0);
  base_loss_logits(z, 1, {}, once, 2.0);
  base_loss_logits(z, 1, {}, twice, 1.0);
  base_loss_logits(z, 1, {}, twice, 1.0);
  EXPECT_NEAR(once[0], twice[0], 1e-15);
  EXPECT_NEAR(once[1], twice[1], 1e-15);
}

TEST(Losses, SpecValidation) {
  LossSpec s;
  s.alpha = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.alpha = 1.0;
  s.focal_gamma = -0.5;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(base_loss_logits(std::vector<double>{0.0}, 1, LossSpec{}), Error);
}
