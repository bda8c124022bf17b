#ifndef SPIKECAM_RNG_HPP
#define SPIKECAM_RNG_HPP

#include <array>
#include <cstdint>

namespace spikecam::rng {

// Philox 4x32-10 counter-based generator. Every (seed, pixel, frame, channel)
// tuple names an independent substream, so simulation results cannot depend
// on thread count or scheduling: a draw is a pure function of its coordinates.

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Substream identifiers; spatial channels use frame index 0.
enum class Channel : std::uint32_t {
  shot = 0,
  thermal = 1,
  map_c = 2,
  map_v = 3,
  map_alpha = 4,
  map_dark = 5,
  texture = 6,
};

/// One substream: counter word 0 advances per generated block, words 1..3
/// carry (pixel, frame, channel). Blocks are produced lazily.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint32_t pixel, std::uint32_t frame, Channel channel)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        base_{0, pixel, frame, static_cast<std::uint32_t>(channel)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = philox4x32(base_, key_);
      ++base_[0];
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  /// Uniform double strictly inside (0, 1), 53-bit resolution.
  double next_unit() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    const std::uint64_t v = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(v) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the inverse CDF.
  double next_normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> base_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
double normal_quantile(double p);

/// Poisson sampler with cached per-mean constants; product method below
/// mean 10, transformed rejection (PTRS) above, normal tail approximation
/// for extreme means.
class PoissonSampler {
 public:
  std::int64_t operator()(double mean, Stream& stream);

 private:
  void prepare(double mean);

  double mean_ = -1.0;
  // small-mean path
  double exp_neg_mean_ = 0.0;
  // PTRS path
  double b_ = 0.0, a_ = 0.0, vr_ = 0.0, inv_alpha_ = 0.0, log_mean_ = 0.0;
};

/// log(k!) — exact table for small k, Stirling series beyond.
double log_factorial(std::int64_t k);

}  // namespace spikecam::rng

#endif  // SPIKECAM_RNG_HPP
