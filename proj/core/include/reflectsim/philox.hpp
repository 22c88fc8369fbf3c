// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace reflectsim {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
///
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits. There
/// is no internal state, so any block of any stream can be produced in O(1).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  static constexpr int kRounds = 10;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int r = 0; r < kRounds; ++r) {
      if (r > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Sequential 64-bit generator over one Philox stream.
///
/// The stream is identified by (seed, lane, tag, offset): the seed is the key,
/// the remaining words pin the upper half of the counter and the lower word
/// walks. Four blocks are produced per refill so the rounds interleave.
/// Satisfies UniformRandomBitGenerator.
class PhiloxStream {
 public:
  using result_type = std::uint64_t;
  static constexpr int kBlocks = 4;

  PhiloxStream(std::uint64_t seed, std::uint32_t lane, std::uint32_t tag,
               std::uint32_t offset = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        lane_(lane),
        tag_(tag),
        offset_(offset) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (used_ == 2 * kBlocks) {
      refill();
    }
    return buffer_[used_++];
  }

 private:
  void refill() noexcept {
    for (int b = 0; b < kBlocks; ++b) {
      const auto out = Philox4x32::block({block_ + static_cast<std::uint32_t>(b), offset_,
                                          lane_, tag_},
                                         key_);
      buffer_[2 * b] = (std::uint64_t{out[1]} << 32) | out[0];
      buffer_[2 * b + 1] = (std::uint64_t{out[3]} << 32) | out[2];
    }
    block_ += kBlocks;
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t lane_;
  std::uint32_t tag_;
  std::uint32_t offset_;
  std::uint32_t block_ = 0;
  std::array<result_type, 2 * kBlocks> buffer_{};
  int used_ = 2 * kBlocks;
};

}  // namespace reflectsim
