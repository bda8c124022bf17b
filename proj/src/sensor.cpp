#include "spikecam/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spikecam {

namespace {

constexpr double kBoltzmann = 1.380649e-23;  // J/K
// Positive floors for the threshold factors, as a fraction of nominal.
constexpr double kRelativeFloor = 1e-3;

int resolve_threads(const SimOptions& opt) {
#ifdef _OPENMP
  return opt.threads > 0 ? opt.threads : omp_get_max_threads();
#else
  (void)opt;
  return 1;
#endif
}

// Pixel tiles aligned to byte boundaries so no two tiles share an output
// byte. Tile extent never affects results, only scheduling.
std::int64_t pick_tile_pixels(std::int64_t n_pixels, int threads) {
  std::int64_t t = n_pixels / (8 * std::max(threads, 1));
  t = (t / 8) * 8;
  return std::clamp<std::int64_t>(t, 8, 4096);
}

void check_geometry(const LuminanceSequence& lum, const SensorConfig& cfg) {
  if (lum.height != cfg.height || lum.width != cfg.width)
    throw std::invalid_argument("simulate: luminance dimensions do not match the sensor");
  // Containers carry dt as f32; compare at that precision.
  if (static_cast<float>(lum.dt_us) != static_cast<float>(cfg.dt_us))
    throw std::invalid_argument("simulate: luminance dt does not match the sensor readout dt");
  if (lum.values.size() != static_cast<std::size_t>(lum.n_frames * lum.pixel_count()))
    throw std::invalid_argument("simulate: luminance buffer does not match its geometry");
}

}  // namespace

double thermal_sigma(double t0_kelvin, double capacitance) {
  if (!(capacitance > 0.0)) throw std::domain_error("thermal_sigma: capacitance must be > 0");
  if (t0_kelvin < 0.0) throw std::domain_error("thermal_sigma: temperature must be >= 0");
  return std::sqrt(kBoltzmann * t0_kelvin / capacitance);
}

SpatialNoiseMaps sample_spatial_maps(const SensorConfig& cfg, const NoiseParams& np,
                                     std::uint64_t seed) {
  cfg.validate();
  np.validate();

  SpatialNoiseMaps maps;
  maps.seed = seed;
  maps.c_s = Grid<double>(cfg.height, cfg.width);
  maps.v_s = Grid<double>(cfg.height, cfg.width);
  maps.alpha = Grid<double>(cfg.height, cfg.width);
  maps.i_dark = Grid<double>(cfg.height, cfg.width);

  const std::int64_t n = cfg.pixel_count();
  const double c_floor = kRelativeFloor * cfg.capacitance - cfg.capacitance;
  const double v_floor = kRelativeFloor * cfg.drive_voltage() - cfg.drive_voltage();
  const double alpha_floor = kRelativeFloor * np.mu_alpha;
  std::int64_t clamped = 0;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : clamped)
#endif
  for (std::int64_t p = 0; p < n; ++p) {
    const auto pixel = static_cast<std::uint32_t>(p);
    double c_s = 0.0, v_s = 0.0, alpha = np.mu_alpha, dark = np.mu_dark;
    if (np.sigma_c_s > 0.0) {
      rng::Stream s(seed, pixel, 0, rng::Channel::map_c);
      c_s = np.sigma_c_s * s.next_normal();
    }
    if (np.sigma_v_s > 0.0) {
      rng::Stream s(seed, pixel, 0, rng::Channel::map_v);
      v_s = np.sigma_v_s * s.next_normal();
    }
    if (np.sigma_alpha_s > 0.0) {
      rng::Stream s(seed, pixel, 0, rng::Channel::map_alpha);
      alpha += np.sigma_alpha_s * s.next_normal();
    }
    if (np.sigma_dark_s > 0.0) {
      rng::Stream s(seed, pixel, 0, rng::Channel::map_dark);
      dark += np.sigma_dark_s * s.next_normal();
    }
    if (c_s < c_floor) { c_s = c_floor; ++clamped; }
    if (v_s < v_floor) { v_s = v_floor; ++clamped; }
    if (alpha < alpha_floor) { alpha = alpha_floor; ++clamped; }
    if (dark < 0.0) { dark = 0.0; ++clamped; }
    maps.c_s[p] = c_s;
    maps.v_s[p] = v_s;
    maps.alpha[p] = alpha;
    maps.i_dark[p] = dark;
  }
  maps.clamped_draws = clamped;
  return maps;
}

double sample_luminance(double mu_l, double photons_per_unit, rng::Stream& stream,
                        rng::PoissonSampler& sampler) {
  if (!(photons_per_unit > 0.0))
    throw std::domain_error("sample_luminance: photons_per_unit must be > 0");
  if (mu_l < 0.0) throw std::domain_error("sample_luminance: luminance must be >= 0");
  if (mu_l == 0.0) return 0.0;
  const std::int64_t ph = sampler(photons_per_unit * mu_l, stream);
  return static_cast<double>(ph) / photons_per_unit;
}

SpikeStream simulate_ideal(const LuminanceSequence& lum, const SensorConfig& cfg, double alpha,
                           const SimOptions& opt) {
  cfg.validate();
  check_geometry(lum, cfg);
  if (!(alpha > 0.0)) throw std::domain_error("simulate_ideal: alpha must be > 0");

  const std::int64_t n_pixels = cfg.pixel_count();
  const std::int64_t n_frames = lum.n_frames;
  const double phi = cfg.threshold();
  const bool subtract = cfg.reset_mode == ResetMode::subtract;

  SpikeStream out(cfg.height, cfg.width, n_frames, cfg.dt_us, StreamOrigin::simulated_ideal);
  const int nt = resolve_threads(opt);
  const std::int64_t tile = pick_tile_pixels(n_pixels, nt);
  const std::int64_t n_tiles = (n_pixels + tile - 1) / tile;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
  for (std::int64_t ti = 0; ti < n_tiles; ++ti) {
    const std::int64_t begin = ti * tile;
    const std::int64_t end = std::min(begin + tile, n_pixels);
    std::vector<double> acc(static_cast<std::size_t>(end - begin), 0.0);
    for (std::int64_t n = 0; n < n_frames; ++n) {
      const float* frame = lum.values.data() + n * n_pixels;
      std::uint8_t* bits = out.frame_data(n);
      for (std::int64_t p = begin; p < end; ++p) {
        double a = acc[p - begin];
        a += alpha * static_cast<double>(frame[p]);
        if (a >= phi) {
          bits[p >> 3] |= static_cast<std::uint8_t>(1u << (p & 7));
          a = subtract ? a - phi : 0.0;
        }
        acc[p - begin] = a;
      }
    }
  }
  return out;
}

SpikeStream simulate_noisy(const LuminanceSequence& lum, const SensorConfig& cfg,
                           const NoiseParams& np, const SpatialNoiseMaps& maps,
                           std::uint64_t seed, const SimOptions& opt, SimStats* stats) {
  cfg.validate();
  np.validate();
  maps.validate(cfg);
  check_geometry(lum, cfg);

  const std::int64_t n_pixels = cfg.pixel_count();
  const std::int64_t n_frames = lum.n_frames;
  const double v_d = cfg.drive_voltage();
  const double v_floor = kRelativeFloor * v_d;
  const double inv_photons = 1.0 / cfg.photons_per_unit;
  const bool shot = cfg.shot_noise;
  const bool thermal = np.sigma_t0 > 0.0;
  const bool subtract = cfg.reset_mode == ResetMode::subtract;

  SpikeStream out(cfg.height, cfg.width, n_frames, cfg.dt_us, StreamOrigin::simulated_noisy);
  const int nt = resolve_threads(opt);
  const std::int64_t tile = pick_tile_pixels(n_pixels, nt);
  const std::int64_t n_tiles = (n_pixels + tile - 1) / tile;
  std::int64_t floor_hits = 0;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt) reduction(+ : floor_hits)
#endif
  for (std::int64_t ti = 0; ti < n_tiles; ++ti) {
    const std::int64_t begin = ti * tile;
    const std::int64_t end = std::min(begin + tile, n_pixels);
    const std::size_t count = static_cast<std::size_t>(end - begin);

    // Per-pixel constants hoisted out of the frame loop.
    std::vector<double> acc(count, 0.0), cap(count), vbase(count), gain(count), dark(count);
    for (std::int64_t p = begin; p < end; ++p) {
      cap[p - begin] = cfg.capacitance + maps.c_s[p];
      vbase[p - begin] = v_d + maps.v_s[p];
      gain[p - begin] = maps.alpha[p];
      dark[p - begin] = maps.i_dark[p];
    }

    rng::PoissonSampler poisson;
    for (std::int64_t n = 0; n < n_frames; ++n) {
      const float* frame = lum.values.data() + n * n_pixels;
      std::uint8_t* bits = out.frame_data(n);
      const auto frame_idx = static_cast<std::uint32_t>(n);
      for (std::int64_t p = begin; p < end; ++p) {
        const std::size_t i = static_cast<std::size_t>(p - begin);
        const double mu_l = static_cast<double>(frame[p]);

        double lum_sample = mu_l;
        if (shot && mu_l > 0.0) {
          rng::Stream s(seed, static_cast<std::uint32_t>(p), frame_idx, rng::Channel::shot);
          lum_sample =
              static_cast<double>(poisson(cfg.photons_per_unit * mu_l, s)) * inv_photons;
        }

        double v_term = vbase[i];
        if (thermal) {
          rng::Stream s(seed, static_cast<std::uint32_t>(p), frame_idx, rng::Channel::thermal);
          v_term += np.sigma_t0 * s.next_normal();
        }
        if (v_term < v_floor) {
          v_term = v_floor;
          ++floor_hits;
        }
        const double threshold = cap[i] * v_term;

        double a = acc[i];
        a += gain[i] * lum_sample + dark[i];
        if (a >= threshold) {
          bits[p >> 3] |= static_cast<std::uint8_t>(1u << (p & 7));
          a = subtract ? a - threshold : 0.0;
        }
        acc[i] = a;
      }
    }
  }

  if (stats) stats->threshold_floor_hits = floor_hits;
  return out;
}

}  // namespace spikecam
