#include <cmath>
#include <stdexcept>

#include "spikecam/sensor.hpp"

// Serial reference implementations. These repeat the sampling process as
// straight per-pixel loops so the tiled OpenMP kernels in sensor.cpp can be
// checked against them bit for bit.

namespace spikecam::reference {

namespace {
constexpr double kRelativeFloor = 1e-3;
}

SpikeStream simulate_ideal(const LuminanceSequence& lum, const SensorConfig& cfg, double alpha) {
  cfg.validate();
  if (lum.height != cfg.height || lum.width != cfg.width)
    throw std::invalid_argument("simulate: luminance dimensions do not match the sensor");
  if (static_cast<float>(lum.dt_us) != static_cast<float>(cfg.dt_us))
    throw std::invalid_argument("simulate: luminance dt does not match the sensor readout dt");
  if (!(alpha > 0.0)) throw std::domain_error("simulate_ideal: alpha must be > 0");

  const std::int64_t n_pixels = cfg.pixel_count();
  const double phi = cfg.threshold();
  const bool subtract = cfg.reset_mode == ResetMode::subtract;

  SpikeStream out(cfg.height, cfg.width, lum.n_frames, cfg.dt_us, StreamOrigin::simulated_ideal);
  for (std::int64_t p = 0; p < n_pixels; ++p) {
    double a = 0.0;
    for (std::int64_t n = 0; n < lum.n_frames; ++n) {
      a += alpha * static_cast<double>(lum.values[n * n_pixels + p]);
      if (a >= phi) {
        out.set(n, p);
        a = subtract ? a - phi : 0.0;
      }
    }
  }
  return out;
}

SpikeStream simulate_noisy(const LuminanceSequence& lum, const SensorConfig& cfg,
                           const NoiseParams& np, const SpatialNoiseMaps& maps,
                           std::uint64_t seed, SimStats* stats) {
  cfg.validate();
  np.validate();
  maps.validate(cfg);
  if (lum.height != cfg.height || lum.width != cfg.width)
    throw std::invalid_argument("simulate: luminance dimensions do not match the sensor");
  if (static_cast<float>(lum.dt_us) != static_cast<float>(cfg.dt_us))
    throw std::invalid_argument("simulate: luminance dt does not match the sensor readout dt");

  const std::int64_t n_pixels = cfg.pixel_count();
  const double v_d = cfg.drive_voltage();
  const double v_floor = kRelativeFloor * v_d;
  const double inv_photons = 1.0 / cfg.photons_per_unit;
  const bool shot = cfg.shot_noise;
  const bool thermal = np.sigma_t0 > 0.0;
  const bool subtract = cfg.reset_mode == ResetMode::subtract;

  SpikeStream out(cfg.height, cfg.width, lum.n_frames, cfg.dt_us, StreamOrigin::simulated_noisy);
  std::int64_t floor_hits = 0;
  rng::PoissonSampler poisson;

  for (std::int64_t p = 0; p < n_pixels; ++p) {
    const double cap = cfg.capacitance + maps.c_s[p];
    const double vbase = v_d + maps.v_s[p];
    const double gain = maps.alpha[p];
    const double dark = maps.i_dark[p];
    double a = 0.0;
    for (std::int64_t n = 0; n < lum.n_frames; ++n) {
      const double mu_l = static_cast<double>(lum.values[n * n_pixels + p]);

      double lum_sample = mu_l;
      if (shot && mu_l > 0.0) {
        rng::Stream s(seed, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(n),
                      rng::Channel::shot);
        lum_sample = static_cast<double>(poisson(cfg.photons_per_unit * mu_l, s)) * inv_photons;
      }

      double v_term = vbase;
      if (thermal) {
        rng::Stream s(seed, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(n),
                      rng::Channel::thermal);
        v_term += np.sigma_t0 * s.next_normal();
      }
      if (v_term < v_floor) {
        v_term = v_floor;
        ++floor_hits;
      }
      const double threshold = cap * v_term;

      a += gain * lum_sample + dark;
      if (a >= threshold) {
        out.set(n, p);
        a = subtract ? a - threshold : 0.0;
      }
    }
  }

  if (stats) stats->threshold_floor_hits = floor_hits;
  return out;
}

}  // namespace spikecam::reference
