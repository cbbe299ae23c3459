#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace hdrisk {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, stream id); the 64-bit block counter
/// together with the stream id forms the 128-bit Philox counter, the seed
/// is the key. Two streams with different ids never overlap, so replication
/// r can draw from stream r independently of scheduling order.
class RngStream {
 public:
  using result_type = std::uint32_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (lane_ == 4) {
      refill();
    }
    return buffer_[lane_++];
  }

  /// A child stream keyed by the same seed, labelled by `tag`.
  [[nodiscard]] RngStream substream(std::uint64_t tag) const noexcept {
    return RngStream(seed(), splitmix64(stream_ ^ splitmix64(tag + 0x9E3779B97F4A7C15ULL)));
  }

  [[nodiscard]] std::uint64_t seed() const noexcept {
    return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
  }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_; }

  static constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  /// One Philox4x32-10 block.
  static constexpr Block philox(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53U) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57U) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9U;
      key[1] += 0xBB67AE85U;
    }
    return ctr;
  }

 private:
  void refill() noexcept {
    buffer_ = philox({static_cast<std::uint32_t>(counter_),
                      static_cast<std::uint32_t>(counter_ >> 32),
                      static_cast<std::uint32_t>(stream_),
                      static_cast<std::uint32_t>(stream_ >> 32)},
                     key_);
    ++counter_;
    lane_ = 0;
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block buffer_{};
  int lane_ = 4;
};

}  // namespace hdrisk
