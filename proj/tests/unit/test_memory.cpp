// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "trajcl/error.hpp"
#include "trajcl/memory.hpp"

using namespace trajcl;

TEST(Completion, FillsThenHoldsCapacity) {
  Rng rng(1);
  CompletionBuffer<int> b(5);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(b.observe(i, rng));
  EXPECT_EQ(b.items(), (std::vector<int>{0, 1, 2, 3, 4}));
  for (int i = 5; i < 500; ++i) {
    b.observe(i, rng);
    EXPECT_EQ(b.size(), 5u);
  }
  EXPECT_EQ(b.stream_count(), 500u);
  const std::set<int> unique(b.items().begin(), b.items().end());
  EXPECT_EQ(unique.size(), 5u);
  EXPECT_THROW(CompletionBuffer<int>(0), ConfigError);
}

TEST(Completion, SecondItemSurvivesWithProbabilityCapacityOverN) {
  // Each item ends in the reservoir with probability k/n.
  Rng rng(2);
  const int runs = 20000;
  int kept_first = 0, kept_last = 0;
  for (int r = 0; r < runs; ++r) {
    CompletionBuffer<int> b(2);
    for (int i = 0; i < 8; ++i) b.observe(i, rng);
    kept_first += std::count(b.items().begin(), b.items().end(), 0);
    kept_last += std::count(b.items().begin(), b.items().end(), 7);
  }
  const double sigma = std::sqrt(runs * 0.25 * 0.75);
  EXPECT_NEAR(kept_first, runs * 0.25, 4 * sigma);
  EXPECT_NEAR(kept_last, runs * 0.25, 4 * sigma);
}

TEST(Completion, RestoreChecksSizeInvariant) {
  EXPECT_NO_THROW(CompletionBuffer<int>::restore(3, {1, 2, 3}, 10));
  EXPECT_NO_THROW(CompletionBuffer<int>::restore(3, {1, 2}, 2));
  EXPECT_THROW(CompletionBuffer<int>::restore(3, {1, 2}, 10), Error);
  Rng a(5);
  CompletionBuffer<int> live(3);
  for (int i = 0; i < 10; ++i) live.observe(i, a);
  auto copy = CompletionBuffer<int>::restore(3, live.items(), live.stream_count());
  Rng b(0);
  b.restore(a.state());
  for (int i = 10; i < 50; ++i) {
    live.observe(i, a);
    copy.observe(i, b);
  }
  EXPECT_EQ(live.items(), copy.items());
}

TEST(Separation, AppendsUntilFull) {
  Rng rng(3);
  SeparationBuffer<int> b(3);
  EXPECT_TRUE(b.observe(1, 1.9, rng));
  EXPECT_TRUE(b.observe(2, 2.0, rng));
  EXPECT_TRUE(b.observe(3, 0.0, rng));
  EXPECT_EQ(b.size(), 3u);
  EXPECT_THROW(b.observe(4, 2.5, rng), Error);
  EXPECT_THROW(b.observe(4, -0.1, rng), Error);
}

TEST(Separation, FullBufferDiscardsScoresOfOneOrMore) {
  Rng rng(4);
  SeparationBuffer<int> b(2);
  b.observe(1, 1.5, rng);
  b.observe(2, 1.5, rng);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_FALSE(b.observe(99, 1.0, rng));
    EXPECT_FALSE(b.observe(99, 1.7, rng));
  }
  EXPECT_EQ(b.stream_count(), 2002u);
}

TEST(Separation, ZeroScoreAlwaysReplaces) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    SeparationBuffer<int> b(3);
    b.observe(1, 0.3, rng);
    b.observe(2, 1.2, rng);
    b.observe(3, 0.7, rng);
    EXPECT_TRUE(b.observe(9, 0.0, rng));
  }
}

TEST(Separation, CandidateDrawnProportionalToScore) {
  // Stored scores 0.2 and 1.8, q_new tiny: replacement probability is ~1,
  // so the slot that changes reveals the candidate draw.
  Rng rng(6);
  const int trials = 20000;
  int high = 0;
  for (int t = 0; t < trials; ++t) {
    SeparationBuffer<int> b(2);
    b.observe(0, 0.2, rng);
    b.observe(1, 1.8, rng);
    b.observe(9, 1e-12, rng);
    if (b.item(1) == 9) ++high;
  }
  const double sigma = std::sqrt(trials * 0.9 * 0.1);
  EXPECT_NEAR(high, trials * 0.9, 4 * sigma);
}

TEST(Separation, ReplacementProbabilityFollowsScoreRatio) {
  // q_i = 0.6 everywhere, q_new = 0.2: replace with probability 0.75.
  Rng rng(7);
  const int trials = 40000;
  int replaced = 0;
  for (int t = 0; t < trials; ++t) {
    SeparationBuffer<int> b(2);
    b.observe(0, 0.6, rng);
    b.observe(1, 0.6, rng);
    replaced += b.observe(9, 0.2, rng) ? 1 : 0;
  }
  EXPECT_NEAR(replaced, trials * 0.75, 4 * std::sqrt(trials * 0.75 * 0.25));
}

TEST(Separation, AllZeroScoresReplaceHalfTheTime) {
  Rng rng(8);
  const int trials = 20000;
  int replaced = 0;
  for (int t = 0; t < trials; ++t) {
    SeparationBuffer<int> b(2);
    b.observe(0, 0.0, rng);
    b.observe(1, 0.0, rng);
    replaced += b.observe(9, 0.0, rng) ? 1 : 0;
  }
  EXPECT_NEAR(replaced, trials * 0.5, 4 * std::sqrt(trials * 0.25));
}

TEST(Separation, RestoreRejectsBadDumps) {
  using B = SeparationBuffer<int>;
  EXPECT_THROW(B::restore(1, 10, {{1, 0.5}, {2, 0.5}}, 2), Error);
  EXPECT_THROW(B::restore(2, 10, {{1, 2.5}}, 1), Error);
  const B ok = B::restore(2, 4, {{1, 0.5}, {2, 1.5}}, 7);
  EXPECT_EQ(ok.compare_count(), 4u);
  EXPECT_EQ(ok.stream_count(), 7u);
}

TEST(Cosine, ZeroNormScoresNeutralAndRangeIsClamped) {
  const GradVector z(3);
  const GradVector a(std::vector<double>{1.0, 2.0, 3.0});
  const GradVector neg(std::vector<double>{-2.0, -4.0, -6.0});
  EXPECT_EQ(cosine_similarity(z, a), 0.0);
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  EXPECT_NEAR(cosine_similarity(a, neg), -1.0, 1e-15);
}

TEST(SeparationScore, MaxCosinePlusOneOverDrawnItems) {
  Rng rng(9);
  SeparationBuffer<GradVector> b(2, 10);
  b.observe(GradVector(std::vector<double>{1.0, 0.0}), 0.5, rng);
  b.observe(GradVector(std::vector<double>{0.0, 1.0}), 0.5, rng);
  auto identity = [](const GradVector& g) -> const GradVector& { return g; };
  // With 10 draws from 2 items both are almost surely compared.
  const double q = separation_score(GradVector(std::vector<double>{1.0, 1.0}), b, rng, identity);
  EXPECT_NEAR(q, 1.0 + std::sqrt(0.5), 1e-12);
  const double opposite = separation_score(GradVector(std::vector<double>{-1.0, -1.0}), b, rng, identity);
  EXPECT_NEAR(opposite, 1.0 - std::sqrt(0.5), 1e-12);
  SeparationBuffer<GradVector> empty(2);
  EXPECT_THROW(separation_score(GradVector(2), empty, rng, identity), Error);
}

TEST(SeparationScore, ComparesAtMostBItems) {
  Rng rng(10);
  SeparationBuffer<int> b(50, 3);
  for (int i = 0; i < 50; ++i) b.observe(i, 1.0, rng);
  for (int k = 0; k < 200; ++k) {
    int calls = 0;
    separation_score(GradVector(std::vector<double>{1.0}), b, rng, [&](int) {
      ++calls;
      return GradVector(std::vector<double>{1.0});
    });
    EXPECT_GE(calls, 1);
    EXPECT_LE(calls, 3);
  }
}

TEST(Minibatch, DrawsWithReplacementAndEmptyGivesEmpty) {
  Rng rng(11);
  CompletionBuffer<int> c(4);
  EXPECT_TRUE(draw_minibatch(c, 8, rng).empty());
  c.observe(5, rng);
  const auto batch = draw_minibatch(c, 8, rng);
  EXPECT_EQ(batch, std::vector<int>(8, 5));
  SeparationBuffer<int> s(4);
  EXPECT_TRUE(draw_minibatch(s, 8, rng).empty());
}
