#ifndef SPIKECAM_TYPES_HPP
#define SPIKECAM_TYPES_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikecam {

/// Dense row-major H x W plane. Index math: (x, y) -> y * width + x,
/// with x the column in [0, W) and y the row in [0, H).
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        values_(static_cast<std::size_t>(height) * width, fill) {
    if (height < 1 || width < 1)
      throw std::invalid_argument("Grid: dimensions must be >= 1");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

  T& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
  T& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  bool same_shape(const Grid& o) const { return height_ == o.height_ && width_ == o.width_; }
  bool operator==(const Grid&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

enum class ResetMode : std::uint8_t { subtract, zero };

/// Sensor geometry, readout timing and circuit constants.
struct SensorConfig {
  int height = 250;
  int width = 400;
  double dt_us = 25.0;                // readout interval
  double capacitance = 1e-14;         // farads
  double reset_voltage = 2.0;         // volts
  double reference_voltage = 1.0;     // volts
  double photons_per_unit = 100.0;    // expected photons per pixel per dt at unit luminance
  bool shot_noise = true;
  ResetMode reset_mode = ResetMode::subtract;

  double drive_voltage() const { return reset_voltage - reference_voltage; }
  /// Nominal firing threshold in accumulation units (farad * volt).
  double threshold() const { return capacitance * drive_voltage(); }
  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height) * width; }

  void validate() const;
};

/// Aggregate statistics of the per-pixel and per-readout noise sources.
/// Spatial sigmas describe frozen fixed-pattern draws; sigma_t0 is the
/// per-readout thermal voltage fluctuation.
struct NoiseParams {
  double sigma_c_s = 2e-16;      // capacitance mismatch std, farads
  double sigma_v_s = 0.02;       // bias voltage std, volts
  double mu_dark = 1e-17;        // mean dark accumulation per dt
  double sigma_dark_s = 1e-18;   // dark current std
  double mu_alpha = 2.5e-15;     // conversion gain: accumulation per luminance unit per dt
  double sigma_alpha_s = 5e-17;  // conversion gain std
  double sigma_t0 = 6.4358e-4;   // thermal voltage std, volts

  void validate() const;

  /// All noise magnitudes zero; mu_alpha keeps its default so the gain stays valid.
  static NoiseParams zero();
};

/// Frozen per-pixel fixed-pattern state drawn once per sensor instance.
struct SpatialNoiseMaps {
  Grid<double> c_s;     // capacitance offset, farads
  Grid<double> v_s;     // bias voltage offset, volts
  Grid<double> alpha;   // conversion gain
  Grid<double> i_dark;  // dark accumulation per dt
  std::uint64_t seed = 0;
  std::int64_t clamped_draws = 0;  // draws pulled back to keep thresholds positive

  void validate(const SensorConfig& cfg) const;
};

/// T frames of H x W nonnegative luminance, with an optional per-frame
/// (vx, vy) flow label in pixels per frame. NaN flow marks pixels whose
/// label is invalid (border band in clamp mode).
struct LuminanceSequence {
  int height = 0;
  int width = 0;
  std::int64_t n_frames = 0;
  double dt_us = 0.0;
  std::vector<float> values;  // n_frames * height * width
  std::vector<float> flow;    // empty, or n_frames * height * width * 2

  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height) * width; }
  bool has_flow() const { return !flow.empty(); }

  std::span<const float> frame(std::int64_t t) const {
    return {values.data() + t * pixel_count(), static_cast<std::size_t>(pixel_count())};
  }
  std::span<float> frame(std::int64_t t) {
    return {values.data() + t * pixel_count(), static_cast<std::size_t>(pixel_count())};
  }

  void validate() const;
};

enum class StreamOrigin : std::uint8_t { simulated_ideal = 0, simulated_noisy = 1, captured = 2 };

/// Bit-packed binary spike frames. Within a frame, pixel p (row-major,
/// p = y*W + x) lives in byte p/8 at bit p%8; the final partial byte of
/// each frame is zero-padded.
class SpikeStream {
 public:
  SpikeStream() = default;
  SpikeStream(int height, int width, std::int64_t n_frames, double dt_us, StreamOrigin origin);

  int height() const { return height_; }
  int width() const { return width_; }
  std::int64_t n_frames() const { return n_frames_; }
  double dt_us() const { return dt_us_; }
  StreamOrigin origin() const { return origin_; }
  void set_origin(StreamOrigin o) { origin_ = o; }

  std::int64_t pixel_count() const { return static_cast<std::int64_t>(height_) * width_; }
  std::size_t frame_bytes() const { return static_cast<std::size_t>((pixel_count() + 7) / 8); }

  bool get(std::int64_t frame, std::int64_t pixel) const {
    const std::uint8_t b = bits_[frame * static_cast<std::int64_t>(frame_bytes()) + (pixel >> 3)];
    return (b >> (pixel & 7)) & 1u;
  }
  void set(std::int64_t frame, std::int64_t pixel) {
    bits_[frame * static_cast<std::int64_t>(frame_bytes()) + (pixel >> 3)] |=
        static_cast<std::uint8_t>(1u << (pixel & 7));
  }
  bool at(std::int64_t frame, int x, int y) const {
    return get(frame, static_cast<std::int64_t>(y) * width_ + x);
  }

  std::uint8_t* frame_data(std::int64_t frame) { return bits_.data() + frame * frame_bytes(); }
  const std::uint8_t* frame_data(std::int64_t frame) const {
    return bits_.data() + frame * frame_bytes();
  }
  const std::vector<std::uint8_t>& raw() const { return bits_; }
  std::vector<std::uint8_t>& raw() { return bits_; }

  std::int64_t total_spikes() const;
  std::int64_t pixel_spikes(std::int64_t pixel) const;

  bool operator==(const SpikeStream&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::int64_t n_frames_ = 0;
  double dt_us_ = 0.0;
  StreamOrigin origin_ = StreamOrigin::simulated_ideal;
  std::vector<std::uint8_t> bits_;
};

}  // namespace spikecam

#endif  // SPIKECAM_TYPES_HPP
