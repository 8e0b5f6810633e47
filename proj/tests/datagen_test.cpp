// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "paritylab/datagen.hpp"

using namespace paritylab;

TEST(Rng, SubstreamsAreDeterministicAndDistinct) {
  auto a = Rng::substream(7, Stream::train_data);
  auto b = Rng::substream(7, Stream::train_data);
  auto c = Rng::substream(7, Stream::test_data);
  auto d = Rng::substream(8, Stream::train_data);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
  }
}

TEST(Rng, KnownSequence) {
  // xoshiro256** seeded via SplitMix64; frozen so any platform drift shows up.
  Rng rng(0);
  const std::uint64_t first = rng();
  Rng again(0);
  EXPECT_EQ(first, again());
  EXPECT_EQ(first, 0x99EC5F36CB75F2B4ULL);
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(5);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 50ULL, 1000003ULL}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(bound), bound);
  }
}

TEST(SampleUniform01, OnlyZerosAndOnes) {
  Rng rng(1);
  const auto bits = sample_uniform01(4, rng);
  EXPECT_EQ(bits.size(), 4U);
  for (auto t : bits) EXPECT_TRUE(t == 0 || t == 1);
  EXPECT_THROW(sample_uniform01(0, rng), DomainError);
}

TEST(SampleUniform01, Deterministic) {
  Rng a(9), b(9);
  EXPECT_EQ(sample_uniform01(30, a), sample_uniform01(30, b));
}

TEST(SampleUniform01, MeanOnesNearHalfLength) {
  Rng rng(2);
  double ones = 0;
  constexpr int draws = 100'000;
  for (int i = 0; i < draws; ++i) {
    const auto bits = sample_uniform01(20, rng);
    ones += static_cast<double>(std::count(bits.begin(), bits.end(), Trit{1}));
  }
  EXPECT_NEAR(ones / draws, 10.0, 0.1);
}

TEST(SampleLatentCurriculum, WeightInRangeAndDeterministic) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto bits = sample_latent_curriculum(5, rng);
    const auto w = hamming_weight(bits);
    EXPECT_GE(w, 1U);
    EXPECT_LE(w, 5U);
  }
  Rng a(4), b(4);
  EXPECT_EQ(sample_latent_curriculum(50, a), sample_latent_curriculum(50, b));
}

TEST(SampleLatentCurriculum, WeightUniformChiSquare) {
  Rng rng(5);
  std::vector<std::size_t> counts(50, 0);
  std::size_t plus = 0;
  std::size_t minus = 0;
  for (int i = 0; i < 100'000; ++i) {
    const auto bits = sample_latent_curriculum(50, rng);
    ++counts[hamming_weight(bits) - 1];
    plus += static_cast<std::size_t>(std::count(bits.begin(), bits.end(), Trit{1}));
    minus += static_cast<std::size_t>(std::count(bits.begin(), bits.end(), Trit{-1}));
  }
  EXPECT_LT(oracle::chi_square_uniform(counts), oracle::chi2_49_p001);
  EXPECT_NEAR(static_cast<double>(plus) / static_cast<double>(plus + minus), 0.5, 0.01);
}

TEST(SampleLatentCurriculum, PositionsUniform) {
  // Each slot is nonzero with probability E[k]/n = (n+1)/(2n).
  Rng rng(6);
  constexpr std::size_t n = 10;
  std::vector<std::size_t> nonzero(n, 0);
  constexpr int draws = 50'000;
  for (int i = 0; i < draws; ++i) {
    const auto bits = sample_latent_curriculum(n, rng);
    for (std::size_t j = 0; j < n; ++j) nonzero[j] += bits[j] != 0 ? 1 : 0;
  }
  for (auto c : nonzero) EXPECT_NEAR(static_cast<double>(c) / draws, 0.55, 0.01);
}

TEST(SampleVariableLength, LengthsUniform) {
  Rng one(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_variable_length(1, one).size(), 1U);
  Rng rng(7);
  std::vector<std::size_t> counts(50, 0);
  for (int i = 0; i < 100'000; ++i) {
    const auto bits = sample_variable_length(50, rng);
    ASSERT_GE(bits.size(), 1U);
    ASSERT_LE(bits.size(), 50U);
    for (auto t : bits) ASSERT_TRUE(t == 0 || t == 1);
    ++counts[bits.size() - 1];
  }
  EXPECT_LT(oracle::chi_square_uniform(counts), oracle::chi2_49_p001);
  Rng a(8), b(8);
  EXPECT_EQ(sample_variable_length(50, a), sample_variable_length(50, b));
}

TEST(SampleNimTrajectory, SingleCounter) {
  Rng rng(1);
  const auto boards = sample_nim_trajectory({{1}}, 1, rng);
  ASSERT_EQ(boards.size(), 2U);
  EXPECT_EQ(boards[0].bits, (Bitstring{1}));
  EXPECT_EQ(boards[1].bits, (Bitstring{0}));
}

TEST(SampleNimTrajectory, MoveCountBoundsAndMonotone) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto boards = sample_nim_trajectory({{2, 1}}, 2, rng);
    EXPECT_GE(boards.size(), 2U);
    EXPECT_LE(boards.size(), 4U);
    EXPECT_EQ(boards.front().bits, nim::encode_board({{2, 1}}, 2).bits);
    for (std::size_t k = 1; k < boards.size(); ++k) {
      const auto before = nim::decode_board(boards[k - 1].bits);
      const auto after = nim::decode_board(boards[k].bits);
      EXPECT_LT(after.total(), before.total());
      std::size_t changed = 0;
      for (std::size_t h = 0; h < before.heaps.size(); ++h) changed += before.heaps[h] != after.heaps[h] ? 1 : 0;
      EXPECT_EQ(changed, 1U);
    }
    EXPECT_TRUE(nim::decode_board(boards.back().bits).terminal());
  }
}

TEST(SampleNimTrajectory, TerminalStartYieldsItself) {
  Rng rng(3);
  const auto boards = sample_nim_trajectory({{0, 0}}, 2, rng);
  ASSERT_EQ(boards.size(), 1U);
  EXPECT_EQ(boards[0].bits, (Bitstring{0, 0, -1, 0, 0}));
}

TEST(SamplerSpec, Validation) {
  EXPECT_THROW(SamplerSpec::bits(SamplerKind::uniform01, 0), DomainError);
  SamplerSpec bad{SamplerKind::nim_trajectory, 3, std::nullopt};
  EXPECT_THROW(bad.validate(), DomainError);
  EXPECT_THROW(SamplerSpec::nim_trajectory({{4}}, 3), CapacityExceededError);
  EXPECT_EQ(SamplerSpec::nim_trajectory({{5, 5, 5}}, 5).n, 17U);
}

TEST(MakeLabeledBatch, LabelsMatchOracle) {
  Rng rng(4);
  EXPECT_THROW(make_labeled_batch(SamplerSpec::bits(SamplerKind::latent_curriculum, 20), 0, rng), DomainError);
  const auto batch = make_labeled_batch(SamplerSpec::bits(SamplerKind::latent_curriculum, 20), 128, rng);
  ASSERT_EQ(batch.size(), 128U);
  for (const auto& ex : batch) {
    EXPECT_EQ(ex.bits.size(), 20U);
    EXPECT_EQ(ex.label, parity(ex.bits));
    EXPECT_FALSE(ex.label_is_corrupted);
  }
  const auto nim_batch = make_labeled_batch(SamplerSpec::nim_trajectory({{3, 2}}, 3), 100, rng);
  ASSERT_EQ(nim_batch.size(), 100U);
  for (const auto& ex : nim_batch) EXPECT_EQ(ex.label, nim::is_winning(nim::decode_board(ex.bits)) ? 1 : 0);
}

TEST(MakeLabeledBatch, ReplayAndDistinctSeeds) {
  const auto spec = SamplerSpec::bits(SamplerKind::latent_curriculum, 20);
  Rng a(10), b(10), c(11);
  const auto x = make_labeled_batch(spec, 1000, a);
  const auto y = make_labeled_batch(spec, 1000, b);
  const auto z = make_labeled_batch(spec, 1000, c);
  std::size_t same = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].bits, y[i].bits);
    same += x[i].bits == z[i].bits ? 1 : 0;
  }
  EXPECT_LT(same, 50U);
}

TEST(MakeLabeledBatch, LatentCurriculumLabelBalance) {
  Rng rng(12);
  const auto batch = make_labeled_batch(SamplerSpec::bits(SamplerKind::latent_curriculum, 20), 100'000, rng);
  double ones = 0;
  for (const auto& ex : batch) ones += ex.label;
  const double frac = ones / static_cast<double>(batch.size());
  EXPECT_GE(frac, 0.45);
  EXPECT_LE(frac, 0.55);
}
