#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aitrand/errors.hpp"

namespace aitrand {

// Order of bits inside each byte of a raw dump. All in-memory strings are MSB-first;
// LSB-first only affects ingestion.
enum class BitOrder { msb_first, lsb_first };

// Immutable packed bit sequence. Bit i lives in byte i/8 at bit position 7 - i%8.
// Trailing pad bits of the last byte are always zero.
class BitString {
 public:
  BitString() = default;

  static BitString from_packed_bytes(std::span<const std::uint8_t> bytes, std::uint64_t bit_len) {
    if (bit_len > 8 * static_cast<std::uint64_t>(bytes.size())) {
      throw LengthError("bit length " + std::to_string(bit_len) + " exceeds " +
                        std::to_string(8 * bytes.size()) + " available bits");
    }
    std::vector<std::uint8_t> data(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>((bit_len + 7) / 8));
    return BitString(std::move(data), bit_len);
  }

  static BitString from_packed_bytes(std::vector<std::uint8_t>&& bytes, std::uint64_t bit_len) {
    if (bit_len > 8 * static_cast<std::uint64_t>(bytes.size())) {
      throw LengthError("bit length " + std::to_string(bit_len) + " exceeds " +
                        std::to_string(8 * bytes.size()) + " available bits");
    }
    bytes.resize((bit_len + 7) / 8);
    return BitString(std::move(bytes), bit_len);
  }

  // Parses a string of '0'/'1' characters; other characters are ignored so that
  // literals may be grouped ("0101 1100").
  static BitString from_text(std::string_view text) {
    std::vector<std::uint8_t> data;
    std::uint64_t n = 0;
    for (char c : text) {
      if (c != '0' && c != '1') continue;
      if (n % 8 == 0) data.push_back(0);
      if (c == '1') data.back() |= static_cast<std::uint8_t>(0x80u >> (n % 8));
      ++n;
    }
    return BitString(std::move(data), n);
  }

  std::uint64_t size() const noexcept { return bit_len_; }
  bool empty() const noexcept { return bit_len_ == 0; }

  // Packed storage, ceil(size()/8) bytes with zeroed pad bits.
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }

  bool bit(std::uint64_t i) const noexcept { return (data_[i >> 3] >> (7 - (i & 7))) & 1u; }

  // Returns k bits (0 <= k <= 64) starting at pos, first bit most significant.
  // Bits beyond size() read as zero; callers are responsible for range checks.
  std::uint64_t extract(std::uint64_t pos, unsigned k) const noexcept {
    if (k == 0) return 0;
    const std::uint64_t byte = pos >> 3;
    const unsigned off = static_cast<unsigned>(pos & 7);
    const std::uint64_t word = load_be64(byte) << off;
    std::uint64_t r = word >> (64 - k);
    const unsigned have = 64 - off;
    if (k > have) {
      const unsigned extra = k - have;
      const std::uint64_t next = byte + 8 < data_.size() ? data_[byte + 8] : 0;
      r |= next >> (8 - extra);
    }
    return r;
  }

  std::uint64_t count_ones() const noexcept {
    std::uint64_t ones = 0;
    std::size_t i = 0;
    for (; i + 8 <= data_.size(); i += 8) ones += std::popcount(load_be64(i));
    for (; i < data_.size(); ++i) ones += std::popcount(static_cast<unsigned>(data_[i]));
    return ones;
  }

  // First `bits` bits as a new string.
  BitString prefix(std::uint64_t bits) const {
    if (bits > bit_len_) throw LengthError("prefix longer than string");
    return from_packed_bytes(std::span<const std::uint8_t>(data_), bits);
  }

  std::string to_text() const {
    std::string s;
    s.reserve(bit_len_);
    for (std::uint64_t i = 0; i < bit_len_; ++i) s.push_back(bit(i) ? '1' : '0');
    return s;
  }

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  BitString(std::vector<std::uint8_t> data, std::uint64_t bit_len) : data_(std::move(data)), bit_len_(bit_len) {
    if (const unsigned rem = bit_len_ % 8; rem != 0) {
      data_.back() &= static_cast<std::uint8_t>(0xFFu << (8 - rem));
    }
  }

  std::uint64_t load_be64(std::uint64_t byte) const noexcept {
    std::uint64_t w = 0;
    if (byte + 8 <= data_.size()) {
      for (int i = 0; i < 8; ++i) w = (w << 8) | data_[byte + i];
      return w;
    }
    for (int i = 0; i < 8; ++i) {
      w <<= 8;
      if (byte + i < data_.size()) w |= data_[byte + i];
    }
    return w;
  }

  std::vector<std::uint8_t> data_;
  std::uint64_t bit_len_ = 0;
};

// Append-only builder used by the generators.
class BitWriter {
 public:
  void reserve(std::uint64_t bits) { data_.reserve((bits + 7) / 8); }

  void push_bit(bool b) {
    if (bit_len_ % 8 == 0) data_.push_back(0);
    if (b) data_.back() |= static_cast<std::uint8_t>(0x80u >> (bit_len_ % 8));
    ++bit_len_;
  }

  // Appends the low k bits of value, most significant first.
  void push_bits(std::uint64_t value, unsigned k) {
    while (k > 0 && bit_len_ % 8 != 0) {
      push_bit((value >> (k - 1)) & 1u);
      --k;
    }
    while (k >= 8) {
      data_.push_back(static_cast<std::uint8_t>(value >> (k - 8)));
      bit_len_ += 8;
      k -= 8;
    }
    while (k > 0) {
      push_bit((value >> (k - 1)) & 1u);
      --k;
    }
  }

  std::uint64_t size() const noexcept { return bit_len_; }

  BitString finish() && { return BitString::from_packed_bytes(std::move(data_), bit_len_); }

 private:
  std::vector<std::uint8_t> data_;
  std::uint64_t bit_len_ = 0;
};

inline std::uint8_t reverse_bits(std::uint8_t b) noexcept {
  b = static_cast<std::uint8_t>((b & 0xF0u) >> 4 | (b & 0x0Fu) << 4);
  b = static_cast<std::uint8_t>((b & 0xCCu) >> 2 | (b & 0x33u) << 2);
  b = static_cast<std::uint8_t>((b & 0xAAu) >> 1 | (b & 0x55u) << 1);
  return b;
}

// Reads a headerless raw dump. Without truncation the string holds 8 x file size bits.
inline BitString load_raw_file(const std::filesystem::path& path, std::optional<std::uint64_t> truncate_bits = {},
                               BitOrder order = BitOrder::msb_first) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  if (end < 0) throw IoError("cannot determine size of " + path.string());
  in.seekg(0, std::ios::beg);
  const auto file_bytes = static_cast<std::uint64_t>(end);
  std::uint64_t bit_len = 8 * file_bytes;
  if (truncate_bits) {
    if (*truncate_bits > bit_len) {
      throw LengthError("requested " + std::to_string(*truncate_bits) + " bits but " + path.string() + " holds " +
                        std::to_string(bit_len));
    }
    bit_len = *truncate_bits;
  }
  std::vector<std::uint8_t> data((bit_len + 7) / 8);
  if (!data.empty() && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()))) {
    throw IoError("short read from " + path.string());
  }
  if (order == BitOrder::lsb_first) {
    for (auto& b : data) b = reverse_bits(b);
  }
  return BitString::from_packed_bytes(std::move(data), bit_len);
}

// Writes the packed bytes (pad bits zero). The bit length is not recorded.
inline void write_raw_file(const std::filesystem::path& path, const BitString& x) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto bytes = x.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// Occurrence counts of non-overlapping m-bit blocks; counts[v] is the number of
// blocks whose lexicographic value is v.
struct BlockCounts {
  unsigned m = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t blocks_total = 0;

  friend bool operator==(const BlockCounts&, const BlockCounts&) = default;
};

inline constexpr unsigned kMaxBlockLength = 16;

inline BlockCounts count_blocks(const BitString& x, unsigned m) {
  if (m == 0 || m > kMaxBlockLength) {
    throw ParameterError("block length must be in 1.." + std::to_string(kMaxBlockLength) + ", got " +
                         std::to_string(m));
  }
  if (x.size() < m) throw InputTooShortError("string shorter than one block");

  BlockCounts bc;
  bc.m = m;
  bc.counts.assign(std::size_t{1} << m, 0);
  bc.blocks_total = x.size() / m;
  const std::uint64_t covered = bc.blocks_total * m;

  if (m == 1) {
    // Pad bits are zero, so ones in the covered prefix are all ones.
    const std::uint64_t ones = x.count_ones();
    bc.counts[1] = ones;
    bc.counts[0] = covered - ones;
    return bc;
  }

  const auto bytes = x.bytes();
  std::uint64_t pos = 0;
  if (m == 2 || m == 4 || m == 8) {
    // Blocks never straddle a byte boundary; histogram whole bytes first.
    const std::uint64_t whole = covered / 8;
    std::array<std::uint64_t, 256> hist{};
    for (std::uint64_t i = 0; i < whole; ++i) ++hist[bytes[i]];
    const unsigned per_byte = 8 / m;
    const unsigned mask = (1u << m) - 1;
    for (unsigned v = 0; v < 256; ++v) {
      if (hist[v] == 0) continue;
      for (unsigned k = 0; k < per_byte; ++k) bc.counts[(v >> (8 - m * (k + 1))) & mask] += hist[v];
    }
    pos = whole * 8;
  }
  for (; pos < covered; pos += m) ++bc.counts[x.extract(pos, m)];
  return bc;
}

// Single-owner sequential reader. Bits are never re-read.
class BitCursor {
 public:
  explicit BitCursor(const BitString& source) noexcept : source_(&source) {}

  std::uint64_t position() const noexcept { return position_; }
  std::uint64_t remaining() const noexcept { return source_->size() - position_; }

  // Next k bits (1..63), first-read bit most significant.
  std::uint64_t take_bits(unsigned k) {
    if (k == 0 || k > 63) throw ParameterError("take_bits width must be in 1..63");
    if (remaining() < k) {
      throw ExhaustionError("requested " + std::to_string(k) + " bits with " + std::to_string(remaining()) +
                            " remaining");
    }
    const std::uint64_t v = source_->extract(position_, k);
    position_ += k;
    return v;
  }

 private:
  const BitString* source_;
  std::uint64_t position_ = 0;
};

}  // namespace aitrand
