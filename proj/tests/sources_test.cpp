#include "aitrand/sources.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aitrand/ait_tests.hpp"
#include "aitrand/digest.hpp"

namespace {

using aitrand::BitString;

// Step-by-step evaluation of the first xorshift64* word for seed 1.
std::uint64_t first_word_seed1() {
  std::uint64_t s = 1;
  s = s ^ (s >> 12);  // 1
  s = s ^ (s << 25);  // 0x2000001
  s = s ^ (s >> 27);  // unchanged, 0x2000001 >> 27 == 0
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(s) * 2685821657736338717ull);
}

TEST(GenPrng, FirstWordMatchesRecurrence) {
  ASSERT_EQ(first_word_seed1(), 0x47e4ce4b896cdd1dull);
  const BitString x = aitrand::gen_prng(1, 64);
  EXPECT_EQ(x.extract(0, 64), 0x47e4ce4b896cdd1dull);
}

TEST(GenPrng, PrefixProperty) {
  EXPECT_EQ(aitrand::gen_prng(1, 8).extract(0, 8), 0x47u);
  const BitString long_x = aitrand::gen_prng(77, 1000);
  for (std::uint64_t n : {1u, 63u, 64u, 65u, 999u}) EXPECT_EQ(aitrand::gen_prng(77, n), long_x.prefix(n));
}

TEST(GenPrng, ZeroSeedRejected) { EXPECT_THROW(aitrand::gen_prng(0, 8), aitrand::ParameterError); }

// Digests produced by tests/oracles/generator_digests.py.
TEST(Generators, GoldenDigests) {
  auto digest = [](const BitString& x) { return aitrand::sha256_hex(x.bytes()); };
  constexpr std::uint64_t n = 1u << 16;
  EXPECT_EQ(digest(aitrand::gen_prng(1, n)), "49d08c70ef3dd44f98f0a12a8275636fdccab43eb71d583414bd38a7101e873a");
  EXPECT_EQ(digest(aitrand::gen_prng(12345, n + 3)),
            "d821ec2c461e9e9d374130794a8fd6a07de9cb1429f21f04ce445554abec6e48");
  EXPECT_EQ(digest(aitrand::gen_weak_prng(1, n)), "bddcfc886da402144fa52235ca5b1db13e2fef30893f29c4d4170416d4291e4a");
  EXPECT_EQ(digest(aitrand::gen_champernowne(n)), "2b8979943666b15ca68eb42b8f3f76e3e0e9ca86f86aee04c5c9c890d56886ad");
  EXPECT_EQ(digest(aitrand::gen_biased(1, 0.3, n)), "4ac7cce117c61af9f0a821557d0c5ace7ac22662f25638e57bee4ae8cf45810b");
  const BitString vn = aitrand::vn_normalize(aitrand::gen_biased(1, 0.9, n));
  EXPECT_EQ(vn.size(), 5943u);
  EXPECT_EQ(digest(vn), "4aa63b6302f41a016c4391818c2a4e44a44677fda575fad42a3de371c9e5f190");
}

TEST(Generators, PureFunctionsOfParameters) {
  EXPECT_EQ(aitrand::gen_prng(42, 5000), aitrand::gen_prng(42, 5000));
  EXPECT_EQ(aitrand::gen_weak_prng(43, 5000), aitrand::gen_weak_prng(43, 5000));
  EXPECT_EQ(aitrand::gen_biased(42, 0.2, 5000), aitrand::gen_biased(42, 0.2, 5000));
  EXPECT_NE(aitrand::gen_prng(42, 5000), aitrand::gen_prng(43, 5000));
}

TEST(GenWeakPrng, FirstBitsAreTopBitsOfStates) {
  // 65539, 65539^2 mod 2^31 = 393225, 65539^3 mod 2^31 = 1769499, all below 2^30.
  EXPECT_EQ(aitrand::gen_weak_prng(1, 3).to_text(), "000");
  EXPECT_EQ(aitrand::gen_weak_prng(1, 1).to_text(), "0");
}

TEST(GenWeakPrng, MatchesPowerFormula) {
  // state_k = seed * 65539^k mod 2^31, evaluated by square-and-multiply.
  auto pow_mod_2_31 = [](std::uint64_t base, std::uint64_t e) {
    std::uint64_t r = 1;
    base &= (1ull << 31) - 1;
    while (e) {
      if (e & 1) r = (r * base) & ((1ull << 31) - 1);
      base = (base * base) & ((1ull << 31) - 1);
      e >>= 1;
    }
    return r;
  };
  const std::uint64_t seed = 12345;
  const BitString x = aitrand::gen_weak_prng(seed, 2000);
  for (std::uint64_t k = 1; k <= 2000; ++k) {
    const std::uint64_t state = (seed * pow_mod_2_31(65539, k)) & ((1ull << 31) - 1);
    ASSERT_EQ(x.bit(k - 1), ((state >> 30) & 1) == 1) << k;
  }
}

TEST(GenWeakPrng, SeedValidation) {
  EXPECT_THROW(aitrand::gen_weak_prng(2, 8), aitrand::ParameterError);
  EXPECT_THROW(aitrand::gen_weak_prng(0, 8), aitrand::ParameterError);
  EXPECT_THROW(aitrand::gen_weak_prng(1ull << 31, 8), aitrand::ParameterError);
  EXPECT_NO_THROW(aitrand::gen_weak_prng((1ull << 31) - 1, 8));
}

TEST(GenChampernowne, Unrolled) {
  EXPECT_EQ(aitrand::gen_champernowne(10).to_text(), "1101110010");
  EXPECT_EQ(aitrand::gen_champernowne(1).to_text(), "1");
  EXPECT_THROW(aitrand::gen_champernowne(0), aitrand::ParameterError);
}

TEST(GenChampernowne, PrefixProperty) {
  const BitString big = aitrand::gen_champernowne(5000);
  for (std::uint64_t n = 1; n < 300; ++n) ASSERT_EQ(aitrand::gen_champernowne(n), big.prefix(n));
}

// Leading bits of each integer are all 1, so finite prefixes carry an excess
// of ones that only vanishes in the limit. Lengths are taken where every k-bit
// integer has just been written.
TEST(GenChampernowne, OnesExcessShrinksWithLength) {
  auto excess_through_width = [](unsigned k) {
    std::uint64_t n = 0;
    for (unsigned j = 1; j <= k; ++j) n += std::uint64_t{j} << (j - 1);
    return static_cast<double>(aitrand::gen_champernowne(n).count_ones()) / static_cast<double>(n) - 0.5;
  };
  const double e8 = excess_through_width(8), e12 = excess_through_width(12), e16 = excess_through_width(16);
  EXPECT_GT(e16, 0.0);
  EXPECT_LT(e16, e12);
  EXPECT_LT(e12, e8);
  const auto out = aitrand::borel_normality(aitrand::gen_champernowne(1u << 20));
  EXPECT_EQ(out.m_max, 4u);
  EXPECT_FALSE(out.per_m[0].pass);
}

TEST(GenBiased, HalfProbabilityIsBalanced) {
  const BitString x = aitrand::gen_biased(1, 0.5, 1u << 16);
  const double ones = static_cast<double>(x.count_ones());
  EXPECT_LE(std::abs(ones - 32768.0), 4.0 * std::sqrt(65536.0 * 0.25));
}

TEST(GenBiased, MatchesWordThreshold) {
  aitrand::Xorshift64Star rng(99);
  const BitString x = aitrand::gen_biased(99, 0.37, 4096);
  for (std::uint64_t i = 0; i < 4096; ++i) {
    const long double frac = static_cast<long double>(rng.next()) / 18446744073709551616.0L;
    ASSERT_EQ(x.bit(i), frac < 0.37L) << i;
  }
}

TEST(GenBiased, NearOneGivesOnes) {
  const BitString x = aitrand::gen_biased(1, 0.999999, 100);
  EXPECT_GE(x.count_ones(), 99u);
}

TEST(GenBiased, ProbabilityValidation) {
  EXPECT_THROW(aitrand::gen_biased(1, 1.0, 8), aitrand::ParameterError);
  EXPECT_THROW(aitrand::gen_biased(1, 0.0, 8), aitrand::ParameterError);
  EXPECT_THROW(aitrand::gen_biased(0, 0.5, 8), aitrand::ParameterError);
}

TEST(VnNormalize, AlternatingGivesConstantZero) {
  for (std::uint64_t k : {1u, 7u, 32u, 33u, 500u}) {
    std::string s;
    for (std::uint64_t i = 0; i < k; ++i) s += "01";
    const BitString out = aitrand::vn_normalize(BitString::from_text(s));
    EXPECT_EQ(out.to_text(), std::string(k, '0'));
  }
}

TEST(VnNormalize, DoubledPairsGiveEmpty) {
  for (std::uint64_t k : {1u, 16u, 17u, 400u}) {
    std::string s;
    for (std::uint64_t i = 0; i < k; ++i) s += "1100";
    EXPECT_TRUE(aitrand::vn_normalize(BitString::from_text(s)).empty());
  }
}

TEST(VnNormalize, MatchesNaivePairLoop) {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    const std::uint64_t n = rng() % 3000;
    const BitString x = aitrand::gen_biased(rng() | 1, 0.1 + 0.8 * (rng() % 100) / 100.0, n == 0 ? 1 : n);
    std::string expect;
    for (std::uint64_t i = 0; i + 1 < x.size(); i += 2) {
      if (x.bit(i) != x.bit(i + 1)) expect.push_back(x.bit(i) ? '1' : '0');
    }
    const BitString out = aitrand::vn_normalize(x);
    ASSERT_EQ(out.to_text(), expect);
    ASSERT_LE(out.size(), x.size() / 2);
  }
}

TEST(VnNormalize, DebiasesStrongBias) {
  const BitString out = aitrand::vn_normalize(aitrand::gen_biased(1, 0.9, 1u << 16));
  const double n = static_cast<double>(out.size());
  const double ones = static_cast<double>(out.count_ones());
  EXPECT_LE(std::abs(ones - n / 2), 4.0 * std::sqrt(n * 0.25));
}

TEST(VnNormalize, SeedAveragedOnesFractionNearHalf) {
  double total_ones = 0, total_bits = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const BitString out = aitrand::vn_normalize(aitrand::gen_biased(seed, 0.7, 1u << 14));
    total_ones += static_cast<double>(out.count_ones());
    total_bits += static_cast<double>(out.size());
  }
  EXPECT_LE(std::abs(total_ones / total_bits - 0.5), 4.0 * std::sqrt(0.25 / total_bits));
}

}  // namespace
