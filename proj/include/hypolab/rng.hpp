#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hypolab {

// Counter-based RNG: Philox4x32-10.
//
// Each (key, counter) pair maps to an independent 128-bit block of output, so
// streams are split by addressing rather than by jumping state:
//   key          = (seed_lo32, seed_hi32)          -- the master seed
//   counter[2,3] = stream index (lo32, hi32)       -- one stream per path/task
//   counter[0,1] = block index within the stream   -- advances as draws happen
// Identical (seed, stream, draw index) gives bit-identical output on every
// platform and for any worker partition.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, bool antithetic = false)
      : seed_(seed), stream_(stream), antithetic_(antithetic) {}

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      buf_ = philox4x32({std::uint32_t(block_), std::uint32_t(block_ >> 32),
                         std::uint32_t(stream_), std::uint32_t(stream_ >> 32)},
                        {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
      ++block_;
      idx_ = 0;
    }
    return buf_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on (0, 1]: 53-bit resolution, never 0 (safe under log()).
  double next_uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1p-53; }
  // Uniform on [0, 1).
  double next_uniform() { return double(next_u64() >> 11) * 0x1p-53; }

  // Standard normal via Box-Muller; pairs are cached. With antithetic set the
  // output sign is flipped, which negates every gaussian draw exactly.
  double next_gaussian() {
    double z;
    if (have_cached_) {
      have_cached_ = false;
      z = cached_;
    } else {
      const double u1 = next_uniform_pos();
      const double u2 = next_uniform();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * M_PI * u2;
      z = r * std::cos(a);
      cached_ = r * std::sin(a);
      have_cached_ = true;
    }
    return antithetic_ ? -z : z;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  bool antithetic() const { return antithetic_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int idx_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
  bool antithetic_;
};

}  // namespace hypolab
