#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fpt {

/// Philox4x32-10 counter-based generator.
///
/// A stream is fixed by (seed, stream index); the remaining two counter words
/// enumerate blocks of four outputs inside the stream. Satisfies
/// UniformRandomBitGenerator.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using counter_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == kBuffered) refill();
    return buffer_[used_++];
  }

  /// Ten rounds of the Philox bijection.
  static counter_type bijection(const counter_type& c, const key_type& k) {
    std::uint32_t c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3];
    std::uint32_t k0 = k[0], k1 = k[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
      c0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
      c1 = static_cast<std::uint32_t>(p1);
      c2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
      c3 = static_cast<std::uint32_t>(p0);
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
  }

 private:
  static constexpr int kBlocks = 8;
  static constexpr int kBuffered = 4 * kBlocks;

  // Independent blocks computed together so their multiply chains overlap.
  void refill() {
    for (int b = 0; b < kBlocks; ++b) {
      const counter_type out = bijection(counter_, key_);
      for (int j = 0; j < 4; ++j) buffer_[4 * b + j] = out[j];
      if (++counter_[0] == 0) ++counter_[1];
    }
    used_ = 0;
  }

  key_type key_;
  counter_type counter_;
  std::array<std::uint32_t, kBuffered> buffer_{};
  int used_ = kBuffered;
};

/// Uniform double in (0, 1) from 53 random bits.
inline double uniform_open(Philox4x32& rng) {
  const std::uint64_t hi = rng() >> 5;
  const std::uint64_t lo = rng() >> 6;
  return (static_cast<double>(hi * 67108864u + lo) + 0.5) * 0x1.0p-53;
}

}  // namespace fpt
