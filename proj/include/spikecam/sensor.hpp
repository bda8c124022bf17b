#ifndef SPIKECAM_SENSOR_HPP
#define SPIKECAM_SENSOR_HPP

#include <cstdint>

#include "spikecam/rng.hpp"
#include "spikecam/types.hpp"

namespace spikecam {

/// Thermal voltage noise std sqrt(kB * T0 / C) in volts.
/// T0 in kelvin, C in farads; C <= 0 is a domain error.
double thermal_sigma(double t0_kelvin, double capacitance);

/// Draw the frozen fixed-pattern maps, i.i.d. per pixel:
///   c_s ~ N(0, sigma_c_s^2), v_s ~ N(0, sigma_v_s^2),
///   alpha ~ N(mu_alpha, sigma_alpha_s^2), i_dark ~ N(mu_dark, sigma_dark_s^2).
/// Draws are clamped so every effective threshold factor stays positive and
/// i_dark stays nonnegative; clamp events are counted on the result.
/// Identical (cfg, np, seed) always produces bit-identical maps.
SpatialNoiseMaps sample_spatial_maps(const SensorConfig& cfg, const NoiseParams& np,
                                     std::uint64_t seed);

/// Shot-noise luminance draw: ph ~ Poisson(photons_per_unit * mu_l),
/// returns ph / photons_per_unit so the expectation is mu_l.
double sample_luminance(double mu_l, double photons_per_unit, rng::Stream& stream,
                        rng::PoissonSampler& sampler);

struct SimOptions {
  int threads = 0;  // 0 = OpenMP default
};

struct SimStats {
  std::int64_t threshold_floor_hits = 0;  // voltage term pulled up to the positive floor
};

/// Noise-free integrate-and-fire: per frame A += alpha * mu_L, fire and
/// reset when A reaches the nominal threshold. `alpha` defaults to one
/// accumulation unit per luminance unit per dt.
SpikeStream simulate_ideal(const LuminanceSequence& lum, const SensorConfig& cfg,
                           double alpha = 1.0, const SimOptions& opt = {});

/// Full noisy sampling process. Per frame and pixel: sample the luminance
/// (shot noise) and the thermal voltage offset, accumulate
/// A += alpha(x,y) * L + i_dark(x,y), compare against the instantaneous
/// threshold (C + c_s)(V_d + v_t0 + v_s), fire and reset. Bit-identical for
/// identical (lum, cfg, np, maps, seed) at any thread count.
SpikeStream simulate_noisy(const LuminanceSequence& lum, const SensorConfig& cfg,
                           const NoiseParams& np, const SpatialNoiseMaps& maps,
                           std::uint64_t seed, const SimOptions& opt = {},
                           SimStats* stats = nullptr);

namespace reference {

/// Serial reference implementations: plain per-pixel loops with no tiling
/// and no OpenMP, kept as the comparison oracle for the parallel kernels.
SpikeStream simulate_ideal(const LuminanceSequence& lum, const SensorConfig& cfg,
                           double alpha = 1.0);
SpikeStream simulate_noisy(const LuminanceSequence& lum, const SensorConfig& cfg,
                           const NoiseParams& np, const SpatialNoiseMaps& maps,
                           std::uint64_t seed, SimStats* stats = nullptr);

}  // namespace reference

}  // namespace spikecam

#endif  // SPIKECAM_SENSOR_HPP
