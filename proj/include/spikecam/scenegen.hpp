#ifndef SPIKECAM_SCENEGEN_HPP
#define SPIKECAM_SCENEGEN_HPP

#include <cstdint>

#include "spikecam/types.hpp"

namespace spikecam {

/// Static scene: every pixel of every frame at gray * l_monitor, with a
/// zero flow label.
LuminanceSequence uniform_scene(double gray, double l_monitor, std::int64_t n_frames,
                                const SensorConfig& cfg);

/// Frame t is the texture translated by (t*vx, t*vy) with bilinear sampling,
/// wrapping or clamping at the borders. The flow label is the constant
/// (vx, vy) field; in clamp mode, pixels whose source fell outside the
/// texture get a NaN label.
LuminanceSequence translating_scene(const Grid<float>& texture, double vx, double vy,
                                    std::int64_t n_frames, bool wrap, double dt_us);

/// Band-limited smooth random luminance field with values spanning exactly
/// [contrast_lo, contrast_hi]; deterministic in the seed.
Grid<float> random_texture(std::uint64_t seed, int height, int width, double contrast_lo,
                           double contrast_hi);

Grid<float> random_texture(std::uint64_t seed, const SensorConfig& cfg, double contrast_lo,
                           double contrast_hi);

}  // namespace spikecam

#endif  // SPIKECAM_SCENEGEN_HPP
