#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "aitrand/bitstream.hpp"
#include "aitrand/errors.hpp"

namespace aitrand {

// xorshift64* state machine. Each call advances the state and returns the
// scrambled output word.
class Xorshift64Star {
 public:
  static constexpr std::uint64_t kMultiplier = 2685821657736338717ull;

  explicit Xorshift64Star(std::uint64_t seed) : state_(seed) {
    if (seed == 0) throw ParameterError("xorshift64* seed must be nonzero");
  }

  std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * kMultiplier;
  }

 private:
  std::uint64_t state_;
};

inline BitString gen_prng(std::uint64_t seed, std::uint64_t bit_len) {
  Xorshift64Star rng(seed);
  BitWriter w;
  w.reserve(bit_len);
  std::uint64_t left = bit_len;
  while (left >= 64) {
    w.push_bits(rng.next(), 64);
    left -= 64;
  }
  if (left > 0) w.push_bits(rng.next() >> (64 - left), static_cast<unsigned>(left));
  return std::move(w).finish();
}

// RANDU, x <- 65539 x mod 2^31, emitting bit 30 of each new state.
inline BitString gen_weak_prng(std::uint64_t seed, std::uint64_t bit_len) {
  constexpr std::uint64_t kModMask = (1ull << 31) - 1;
  if (seed == 0 || seed > kModMask || seed % 2 == 0) {
    throw ParameterError("RANDU seed must be odd and in (0, 2^31), got " + std::to_string(seed));
  }
  BitWriter w;
  w.reserve(bit_len);
  std::uint64_t x = seed;
  for (std::uint64_t i = 0; i < bit_len; ++i) {
    x = (65539 * x) & kModMask;
    w.push_bit((x >> 30) & 1u);
  }
  return std::move(w).finish();
}

// Binary Champernowne word 1 10 11 100 101 ... truncated to bit_len.
inline BitString gen_champernowne(std::uint64_t bit_len) {
  if (bit_len == 0) throw ParameterError("bit length must be positive");
  BitWriter w;
  w.reserve(bit_len);
  for (std::uint64_t n = 1; w.size() < bit_len; ++n) {
    const auto width = static_cast<unsigned>(std::bit_width(n));
    const std::uint64_t room = bit_len - w.size();
    if (width <= room) {
      w.push_bits(n, width);
    } else {
      w.push_bits(n >> (width - room), static_cast<unsigned>(room));
    }
  }
  return std::move(w).finish();
}

// Bit i is 1 iff the i-th xorshift64* word, read as a fraction of 2^64, is below p.
inline BitString gen_biased(std::uint64_t seed, double p, std::uint64_t bit_len) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("bias probability must be in (0, 1)");
  Xorshift64Star rng(seed);
  BitWriter w;
  w.reserve(bit_len);
  for (std::uint64_t i = 0; i < bit_len; ++i) {
    w.push_bit(std::ldexp(static_cast<double>(rng.next()), -64) < p);
  }
  return std::move(w).finish();
}

// Von Neumann debiasing over non-overlapping pairs: 01 -> 0, 10 -> 1, 00/11 dropped.
// A trailing odd bit is discarded.
inline BitString vn_normalize(const BitString& raw) {
  BitWriter w;
  w.reserve(raw.size() / 4);
  const std::uint64_t pairs = raw.size() / 2;
  std::uint64_t i = 0;
  // 32 pairs per step; most of the time goes into skipping equal pairs.
  for (; i + 32 <= pairs; i += 32) {
    const std::uint64_t word = raw.extract(2 * i, 64);
    const std::uint64_t hi = word & 0xAAAAAAAAAAAAAAAAull;
    std::uint64_t diff = (hi >> 1) ^ (word & 0x5555555555555555ull);
    while (diff != 0) {
      const int lead = std::countl_zero(diff);  // odd index of the pair's low bit
      w.push_bit((word >> (63 - (lead - 1))) & 1u);
      diff &= ~(1ull << (63 - lead));
    }
  }
  for (; i < pairs; ++i) {
    const bool a = raw.bit(2 * i);
    const bool b = raw.bit(2 * i + 1);
    if (a != b) w.push_bit(a);
  }
  return std::move(w).finish();
}

}  // namespace aitrand
