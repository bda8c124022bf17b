#include "spikecam/types.hpp"

#include <bit>
#include <cmath>

namespace spikecam {

void SensorConfig::validate() const {
  if (height < 1) throw std::invalid_argument("SensorConfig: height must be >= 1");
  if (width < 1) throw std::invalid_argument("SensorConfig: width must be >= 1");
  if (!(dt_us > 0.0)) throw std::invalid_argument("SensorConfig: dt_us must be > 0");
  if (!(capacitance > 0.0)) throw std::invalid_argument("SensorConfig: capacitance must be > 0");
  if (!(reset_voltage > reference_voltage))
    throw std::invalid_argument(
        "SensorConfig: reset_voltage must exceed reference_voltage (threshold must be positive)");
  if (!(photons_per_unit > 0.0))
    throw std::invalid_argument("SensorConfig: photons_per_unit must be > 0");
}

void NoiseParams::validate() const {
  if (sigma_c_s < 0.0) throw std::invalid_argument("NoiseParams: sigma_c_s must be >= 0");
  if (sigma_v_s < 0.0) throw std::invalid_argument("NoiseParams: sigma_v_s must be >= 0");
  if (mu_dark < 0.0) throw std::invalid_argument("NoiseParams: mu_dark must be >= 0");
  if (sigma_dark_s < 0.0) throw std::invalid_argument("NoiseParams: sigma_dark_s must be >= 0");
  if (!(mu_alpha > 0.0)) throw std::invalid_argument("NoiseParams: mu_alpha must be > 0");
  if (sigma_alpha_s < 0.0) throw std::invalid_argument("NoiseParams: sigma_alpha_s must be >= 0");
  if (sigma_t0 < 0.0) throw std::invalid_argument("NoiseParams: sigma_t0 must be >= 0");
}

NoiseParams NoiseParams::zero() {
  NoiseParams np;
  np.sigma_c_s = 0.0;
  np.sigma_v_s = 0.0;
  np.mu_dark = 0.0;
  np.sigma_dark_s = 0.0;
  np.sigma_alpha_s = 0.0;
  np.sigma_t0 = 0.0;
  return np;
}

void SpatialNoiseMaps::validate(const SensorConfig& cfg) const {
  if (c_s.height() != cfg.height || c_s.width() != cfg.width)
    throw std::invalid_argument("SpatialNoiseMaps: map dimensions do not match the sensor");
  if (!c_s.same_shape(v_s) || !c_s.same_shape(alpha) || !c_s.same_shape(i_dark))
    throw std::invalid_argument("SpatialNoiseMaps: maps must share one shape");
  const double v_d = cfg.drive_voltage();
  for (std::int64_t i = 0; i < c_s.size(); ++i) {
    if (!(cfg.capacitance + c_s[i] > 0.0))
      throw std::invalid_argument("SpatialNoiseMaps: effective capacitance must stay positive");
    if (!(v_d + v_s[i] > 0.0))
      throw std::invalid_argument("SpatialNoiseMaps: effective drive voltage must stay positive");
    if (!(alpha[i] > 0.0))
      throw std::invalid_argument("SpatialNoiseMaps: alpha must stay positive");
    if (i_dark[i] < 0.0)
      throw std::invalid_argument("SpatialNoiseMaps: dark current must be nonnegative");
  }
}

void LuminanceSequence::validate() const {
  if (height < 1 || width < 1)
    throw std::invalid_argument("LuminanceSequence: dimensions must be >= 1");
  if (n_frames < 0) throw std::invalid_argument("LuminanceSequence: negative frame count");
  if (!(dt_us > 0.0)) throw std::invalid_argument("LuminanceSequence: dt_us must be > 0");
  if (values.size() != static_cast<std::size_t>(n_frames * pixel_count()))
    throw std::invalid_argument("LuminanceSequence: value buffer does not match geometry");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (std::isnan(v) || v < 0.0f) {
      const std::int64_t frame = static_cast<std::int64_t>(i) / pixel_count();
      const std::int64_t pixel = static_cast<std::int64_t>(i) % pixel_count();
      throw std::invalid_argument("LuminanceSequence: invalid value at frame " +
                                  std::to_string(frame) + ", pixel " + std::to_string(pixel));
    }
  }
  if (!flow.empty() &&
      flow.size() != static_cast<std::size_t>(n_frames * pixel_count() * 2))
    throw std::invalid_argument("LuminanceSequence: flow buffer does not match geometry");
}

SpikeStream::SpikeStream(int height, int width, std::int64_t n_frames, double dt_us,
                         StreamOrigin origin)
    : height_(height), width_(width), n_frames_(n_frames), dt_us_(dt_us), origin_(origin) {
  if (height < 1 || width < 1) throw std::invalid_argument("SpikeStream: dimensions must be >= 1");
  if (n_frames < 0) throw std::invalid_argument("SpikeStream: negative frame count");
  bits_.assign(static_cast<std::size_t>(n_frames) * frame_bytes(), 0u);
}

std::int64_t SpikeStream::total_spikes() const {
  std::int64_t total = 0;
  for (std::uint8_t b : bits_) total += std::popcount(b);
  return total;
}

std::int64_t SpikeStream::pixel_spikes(std::int64_t pixel) const {
  std::int64_t total = 0;
  for (std::int64_t n = 0; n < n_frames_; ++n) total += get(n, pixel);
  return total;
}

}  // namespace spikecam
