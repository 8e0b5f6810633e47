// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "paritylab/bitstring.hpp"
#include "paritylab/rng.hpp"

using paritylab::Bitstring;
using paritylab::DomainError;

TEST(Parity, CountsOnlyOnes) {
  EXPECT_EQ(paritylab::parity(Bitstring{1, 1, 0}), 0);
  EXPECT_EQ(paritylab::parity(Bitstring{1, 0, -1}), 1);
  EXPECT_EQ(paritylab::parity(Bitstring{-1, -1, -1}), 0);
}

TEST(HammingWeight, CountsNonzero) {
  EXPECT_EQ(paritylab::hamming_weight(Bitstring{0, 0, 0}), 0U);
  EXPECT_EQ(paritylab::hamming_weight(Bitstring{1, -1, 0}), 2U);
  EXPECT_EQ(paritylab::hamming_weight(Bitstring{1, 1, 1}), 3U);
}

TEST(Bitstring, RejectsEmptyAndOutOfRange) {
  EXPECT_THROW(Bitstring(std::vector<paritylab::Trit>{}), DomainError);
  EXPECT_THROW((Bitstring{1, 2}), DomainError);
  EXPECT_THROW(Bitstring(std::vector<paritylab::Trit>{0, -2}), DomainError);
}

TEST(Bitstring, LiteralRoundTrip) {
  const auto bits = Bitstring::parse("110m0");
  EXPECT_EQ(bits, (Bitstring{1, 1, 0, -1, 0}));
  EXPECT_EQ(bits.literal(), "110m0");
  EXPECT_THROW(Bitstring::parse(""), DomainError);
  EXPECT_THROW(Bitstring::parse("1,0"), DomainError);
  EXPECT_THROW(Bitstring::parse("12"), DomainError);
}

namespace {

std::vector<int> random_trits(paritylab::Rng& rng, std::size_t n) {
  std::vector<int> v(n);
  for (auto& t : v) t = static_cast<int>(rng.between(-1, 1));
  return v;
}

Bitstring to_bits(const std::vector<int>& v) {
  std::vector<paritylab::Trit> t(v.begin(), v.end());
  return Bitstring(t);
}

} // namespace

TEST(ParityProperty, PermutationInvariant) {
  paritylab::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = random_trits(rng, 1 + rng.below(30));
    const int expected = paritylab::parity(to_bits(v));
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.below(k)]);
    EXPECT_EQ(paritylab::parity(to_bits(v)), expected);
  }
}

TEST(ParityProperty, FlipSensitivity) {
  paritylab::Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = random_trits(rng, 1 + rng.below(30));
    const auto i = rng.below(v.size());
    v[i] = 0;
    const int base = paritylab::parity(to_bits(v));
    v[i] = 1;
    EXPECT_NE(paritylab::parity(to_bits(v)), base) << "0 <-> 1 must flip parity";
    v[i] = -1;
    EXPECT_EQ(paritylab::parity(to_bits(v)), base) << "0 <-> -1 must not flip parity";
  }
}

TEST(ParityProperty, MatchesPopcountOracleExhaustivelyUpToLength6) {
  for (std::size_t n = 1; n <= 6; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<int> v(n);
      auto c = code;
      for (auto& t : v) {
        t = static_cast<int>(c % 3) - 1;
        c /= 3;
      }
      const auto bits = to_bits(v);
      ASSERT_EQ(paritylab::parity(bits), oracle::popcount_parity(v));
      const auto weight = paritylab::hamming_weight(bits);
      ASSERT_LE(weight, n);
    }
  }
}
