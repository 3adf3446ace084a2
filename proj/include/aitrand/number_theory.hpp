#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "aitrand/bitstream.hpp"
#include "aitrand/errors.hpp"

namespace aitrand {

// Largest modulus accepted by the modular routines (exclusive).
inline constexpr std::uint64_t kModulusLimit = 1ull << 63;

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t n) noexcept {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % n);
}

namespace detail {

inline std::uint64_t pow_mod_unchecked(std::uint64_t a, std::uint64_t e, std::uint64_t n) noexcept {
  std::uint64_t r = 1 % n;
  a %= n;
  while (e != 0) {
    if (e & 1u) r = mul_mod(r, a, n);
    a = mul_mod(a, a, n);
    e >>= 1;
  }
  return r;
}

}  // namespace detail

// a^e mod n for odd 3 <= n < 2^63 and 0 <= a < n.
inline std::uint64_t mod_pow(std::uint64_t a, std::uint64_t e, std::uint64_t n) {
  if (n < 3 || n % 2 == 0 || n >= kModulusLimit) {
    throw ParameterError("modulus must be odd and in [3, 2^63), got " + std::to_string(n));
  }
  if (a >= n) throw ParameterError("base must be reduced modulo n");
  return detail::pow_mod_unchecked(a, e, n);
}

// Jacobi symbol (a/n) for odd n >= 1, binary reciprocity algorithm.
inline int jacobi(std::uint64_t a, std::uint64_t n) {
  if (n == 0 || n % 2 == 0) throw ParameterError("Jacobi symbol needs an odd positive modulus");
  a %= n;
  int result = 1;
  while (a != 0) {
    const int twos = std::countr_zero(a);
    a >>= twos;
    // (2/n) = -1 iff n = 3, 5 mod 8
    if ((twos & 1) && (n % 8 == 3 || n % 8 == 5)) result = -result;
    // reciprocity: flip when both are 3 mod 4
    if (a % 4 == 3 && n % 4 == 3) result = -result;
    std::swap(a, n);
    a %= n;
  }
  return n == 1 ? result : 0;
}

// True iff i proves n composite: gcd(i, n) > 1 or i^((n-1)/2) differs from (i/n) mod n.
inline bool euler_witness(std::uint64_t i, std::uint64_t n) {
  if (n < 3 || n % 2 == 0 || n >= kModulusLimit) {
    throw ParameterError("witness modulus must be odd and in [3, 2^63)");
  }
  if (i < 2 || i > n - 2) throw ParameterError("witness must lie in [2, n-2]");
  if (std::gcd(i, n) > 1) return true;
  const std::uint64_t power = detail::pow_mod_unchecked(i, (n - 1) / 2, n);
  const int j = jacobi(i, n);
  const std::uint64_t expected = j == 1 ? 1 : n - 1;  // j != 0 since gcd is 1
  return power != expected;
}

// ---------------------------------------------------------------------------
// Primality and factoring for 64-bit values (used to validate Carmichael data)
// ---------------------------------------------------------------------------

inline bool is_prime_u64(std::uint64_t n) noexcept {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  const int s = std::countr_zero(d);
  d >>= s;
  // This base set is deterministic for all n < 2^64.
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = detail::pow_mod_unchecked(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

namespace detail {

// Brent's variant of Pollard rho; n must be odd composite.
inline std::uint64_t pollard_rho(std::uint64_t n) {
  for (std::uint64_t c = 1;; ++c) {
    auto f = [&](std::uint64_t v) { return (mul_mod(v, v, n) + c) % n; };
    std::uint64_t y = 2, x = 2, g = 1, q = 1, ys = 2;
    const std::uint64_t m = 128;
    for (std::uint64_t r = 1; g == 1; r <<= 1) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = f(y);
      for (std::uint64_t k = 0; k < r && g == 1; k += m) {
        ys = y;
        for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
          y = f(y);
          q = mul_mod(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
      }
    }
    if (g == n) {
      do {
        ys = f(ys);
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

inline void factor_into(std::uint64_t n, std::vector<std::uint64_t>& out) {
  if (n == 1) return;
  if (is_prime_u64(n)) {
    out.push_back(n);
    return;
  }
  const std::uint64_t d = pollard_rho(n);
  factor_into(d, out);
  factor_into(n / d, out);
}

}  // namespace detail

// Prime factors with multiplicity, ascending.
inline std::vector<std::uint64_t> factorize(std::uint64_t n) {
  std::vector<std::uint64_t> f;
  for (std::uint64_t p = 2; p < 1000 && p * p <= n; p += (p == 2 ? 1 : 2)) {
    while (n % p == 0) {
      f.push_back(p);
      n /= p;
    }
  }
  if (n > 1) detail::factor_into(n, f);
  std::sort(f.begin(), f.end());
  return f;
}

// Odd, composite, squarefree, and p - 1 | n - 1 for every prime p | n.
inline bool satisfies_korselt(std::uint64_t n, const std::vector<std::uint64_t>& factors) {
  if (n < 3 || n % 2 == 0 || factors.size() < 2) return false;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i > 0 && factors[i] == factors[i - 1]) return false;
    if ((n - 1) % (factors[i] - 1) != 0) return false;
  }
  return true;
}

inline bool is_carmichael(std::uint64_t n) {
  if (n < 3 || n % 2 == 0) return false;
  return satisfies_korselt(n, factorize(n));
}

// ---------------------------------------------------------------------------
// Carmichael sets
// ---------------------------------------------------------------------------

struct CarmichaelSet {
  std::uint64_t bound = 0;
  std::vector<std::uint64_t> numbers;  // ascending

  friend bool operator==(const CarmichaelSet&, const CarmichaelSet&) = default;
};

inline constexpr std::uint64_t kDefaultCarmichaelBound = 10'000'000;
inline constexpr std::uint64_t kDefaultSieveBudgetBytes = 1ull << 30;

// All Carmichael numbers <= bound via a smallest-prime-factor sieve over odd n.
inline CarmichaelSet enumerate_carmichael(std::uint64_t bound,
                                          std::uint64_t memory_budget_bytes = kDefaultSieveBudgetBytes) {
  if (bound < 3) throw ParameterError("Carmichael bound must be at least 3");
  const std::uint64_t slots = (bound + 1) / 2;  // index k <-> n = 2k + 1
  if (bound >= (1ull << 32) || slots * sizeof(std::uint32_t) > memory_budget_bytes) {
    throw ResourceError("sieving to " + std::to_string(bound) + " needs " +
                        std::to_string(slots * sizeof(std::uint32_t) >> 20) +
                        " MiB; raise the memory budget or load a precomputed list with load_carmichael_file");
  }
  std::vector<std::uint32_t> spf(slots, 0);
  for (std::uint64_t p = 3; p * p <= bound; p += 2) {
    if (spf[p / 2] != 0) continue;
    for (std::uint64_t q = p * p; q <= bound; q += 2 * p) {
      if (spf[q / 2] == 0) spf[q / 2] = static_cast<std::uint32_t>(p);
    }
  }

  CarmichaelSet cs;
  cs.bound = bound;
  for (std::uint64_t n = 9; n <= bound; n += 2) {
    if (spf[n / 2] == 0) continue;  // prime
    std::uint64_t rest = n;
    bool ok = true;
    int prime_count = 0;
    while (rest > 1 && ok) {
      const std::uint64_t p = spf[rest / 2] == 0 ? rest : spf[rest / 2];
      rest /= p;
      if (rest % p == 0 || (n - 1) % (p - 1) != 0) ok = false;
      ++prime_count;
    }
    if (ok && prime_count >= 2) cs.numbers.push_back(n);
  }
  return cs;
}

// Newline-separated ascending decimal integers; every entry is checked with
// Korselt's criterion.
inline CarmichaelSet load_carmichael_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CarmichaelSet cs;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const char* first = line.data() + start;
    const char* last = line.data() + line.size();
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(first, last, n);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (ec != std::errc() || ptr != last) throw DataIntegrityError(where + "not a decimal integer: '" + line + "'");
    if (n >= kModulusLimit) throw DataIntegrityError(where + "value exceeds 2^63");
    if (!cs.numbers.empty() && n <= cs.numbers.back()) throw DataIntegrityError(where + "values not strictly ascending");
    if (!is_carmichael(n)) throw DataIntegrityError(where + std::to_string(n) + " is not a Carmichael number");
    cs.numbers.push_back(n);
  }
  if (in.bad()) throw IoError("read failed for " + path.string());
  cs.bound = cs.numbers.empty() ? 0 : cs.numbers.back();
  return cs;
}

inline void write_carmichael_file(const std::filesystem::path& path, const CarmichaelSet& cs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const std::uint64_t n : cs.numbers) out << n << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Solovay-Strassen metric over a bit sample
// ---------------------------------------------------------------------------

struct SSRun {
  std::uint64_t k = 0;  // witnesses per pending number in the last round
  std::uint64_t bits_consumed = 0;
  bool verdict_complete = false;
  std::uint64_t numbers_total = 0;
  std::uint64_t numbers_resolved = 0;
  std::uint64_t witnesses_tested = 0;
  std::uint64_t draws_rejected = 0;

  friend bool operator==(const SSRun&, const SSRun&) = default;
};

// The sample ran out before every number was declared composite.
class SampleTooShortError : public ExhaustionError {
 public:
  SampleTooShortError(const std::string& what, SSRun progress) : ExhaustionError(what), progress_(progress) {}
  const SSRun& progress() const noexcept { return progress_; }

 private:
  SSRun progress_;
};

inline constexpr unsigned kMaxConsecutiveRejections = 64;

// Bits read per witness draw for modulus n: ceil(log2(n - 3)).
inline unsigned witness_draw_width(std::uint64_t n) noexcept {
  return static_cast<unsigned>(std::bit_width(n - 4));
}

// Rounds k = 1, 2, ...: every pending number (ascending) receives up to k fresh
// witnesses drawn from one shared cursor, stopping at the first Euler witness.
// Each draw reads witness_draw_width(n) bits as v and proposes i = 2 + v, rejecting
// i > n - 2. Bits are consumed whether or not a draw is accepted.
inline SSRun ss_carmichael_metric(const BitString& x, const CarmichaelSet& cs) {
  if (cs.numbers.empty()) throw ParameterError("Carmichael set is empty");
  for (const std::uint64_t n : cs.numbers) {
    if (n < 5 || n % 2 == 0 || n >= kModulusLimit) {
      throw ParameterError("Carmichael candidates must be odd and in [5, 2^63)");
    }
  }

  BitCursor cursor(x);
  SSRun run;
  run.numbers_total = cs.numbers.size();
  std::vector<std::uint64_t> pending = cs.numbers;
  std::vector<std::uint64_t> still_pending;

  auto draw = [&](std::uint64_t n) -> std::uint64_t {
    const unsigned width = witness_draw_width(n);
    for (unsigned tries = 0; tries < kMaxConsecutiveRejections; ++tries) {
      std::uint64_t v = 0;
      try {
        v = cursor.take_bits(width);
      } catch (const ExhaustionError&) {
        run.bits_consumed = cursor.position();
        throw SampleTooShortError("sample exhausted after " + std::to_string(run.bits_consumed) + " bits with " +
                                      std::to_string(run.numbers_total - run.numbers_resolved) +
                                      " numbers unresolved at k = " + std::to_string(run.k),
                                  run);
      }
      run.bits_consumed = cursor.position();
      if (v <= n - 4) return 2 + v;
      ++run.draws_rejected;
    }
    throw DegenerateSourceError(std::to_string(kMaxConsecutiveRejections) +
                                " consecutive witness draws rejected for n = " + std::to_string(n));
  };

  for (std::uint64_t k = 1; !pending.empty(); ++k) {
    run.k = k;
    still_pending.clear();
    for (const std::uint64_t n : pending) {
      bool composite = false;
      for (std::uint64_t w = 0; w < k && !composite; ++w) {
        const std::uint64_t i = draw(n);
        ++run.witnesses_tested;
        composite = euler_witness(i, n);
      }
      if (composite) {
        ++run.numbers_resolved;
      } else {
        still_pending.push_back(n);
      }
    }
    pending.swap(still_pending);
  }
  run.verdict_complete = true;
  return run;
}

}  // namespace aitrand
