#include "spikecam/scenegen.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spikecam/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spikecam {

LuminanceSequence uniform_scene(double gray, double l_monitor, std::int64_t n_frames,
                                const SensorConfig& cfg) {
  cfg.validate();
  if (gray < 0.0) throw std::invalid_argument("uniform_scene: gray must be >= 0");
  if (!(l_monitor > 0.0)) throw std::invalid_argument("uniform_scene: l_monitor must be > 0");
  if (n_frames < 1) throw std::invalid_argument("uniform_scene: n_frames must be >= 1");

  LuminanceSequence lum;
  lum.height = cfg.height;
  lum.width = cfg.width;
  lum.n_frames = n_frames;
  lum.dt_us = cfg.dt_us;
  const auto value = static_cast<float>(gray * l_monitor);
  lum.values.assign(static_cast<std::size_t>(n_frames * cfg.pixel_count()), value);
  lum.flow.assign(static_cast<std::size_t>(n_frames * cfg.pixel_count() * 2), 0.0f);
  return lum;
}

namespace {

inline int wrap_index(std::int64_t i, int n) {
  std::int64_t m = i % n;
  if (m < 0) m += n;
  return static_cast<int>(m);
}

}  // namespace

LuminanceSequence translating_scene(const Grid<float>& texture, double vx, double vy,
                                    std::int64_t n_frames, bool wrap, double dt_us) {
  if (n_frames < 1) throw std::invalid_argument("translating_scene: n_frames must be >= 1");
  if (!(dt_us > 0.0)) throw std::invalid_argument("translating_scene: dt_us must be > 0");
  if (!std::isfinite(vx) || !std::isfinite(vy))
    throw std::invalid_argument("translating_scene: velocity must be finite");
  const int h = texture.height(), w = texture.width();

  LuminanceSequence lum;
  lum.height = h;
  lum.width = w;
  lum.n_frames = n_frames;
  lum.dt_us = dt_us;
  lum.values.resize(static_cast<std::size_t>(n_frames) * h * w);
  lum.flow.resize(static_cast<std::size_t>(n_frames) * h * w * 2);
  const float nan = std::numeric_limits<float>::quiet_NaN();

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t t = 0; t < n_frames; ++t) {
    float* frame = lum.values.data() + t * h * w;
    float* flow = lum.flow.data() + t * static_cast<std::int64_t>(h) * w * 2;
    const double ox = static_cast<double>(t) * vx;
    const double oy = static_cast<double>(t) * vy;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Pull-back sampling: content moves by +v per frame.
        const double sx = static_cast<double>(x) - ox;
        const double sy = static_cast<double>(y) - oy;
        const double fxf = std::floor(sx);
        const double fyf = std::floor(sy);
        const double ax = sx - fxf;
        const double ay = sy - fyf;
        const auto ix = static_cast<std::int64_t>(fxf);
        const auto iy = static_cast<std::int64_t>(fyf);

        int x0, x1, y0, y1;
        bool valid = true;
        if (wrap) {
          x0 = wrap_index(ix, w);
          x1 = wrap_index(ix + 1, w);
          y0 = wrap_index(iy, h);
          y1 = wrap_index(iy + 1, h);
        } else {
          valid = sx >= 0.0 && sx <= static_cast<double>(w - 1) && sy >= 0.0 &&
                  sy <= static_cast<double>(h - 1);
          auto clamp_i = [](std::int64_t i, int n) {
            return static_cast<int>(std::clamp<std::int64_t>(i, 0, n - 1));
          };
          x0 = clamp_i(ix, w);
          x1 = clamp_i(ix + 1, w);
          y0 = clamp_i(iy, h);
          y1 = clamp_i(iy + 1, h);
        }

        const double v00 = texture.at(x0, y0);
        const double v10 = texture.at(x1, y0);
        const double v01 = texture.at(x0, y1);
        const double v11 = texture.at(x1, y1);
        const double value = (1.0 - ax) * (1.0 - ay) * v00 + ax * (1.0 - ay) * v10 +
                             (1.0 - ax) * ay * v01 + ax * ay * v11;
        const std::int64_t p = static_cast<std::int64_t>(y) * w + x;
        frame[p] = static_cast<float>(value);
        if (valid) {
          flow[2 * p] = static_cast<float>(vx);
          flow[2 * p + 1] = static_cast<float>(vy);
        } else {
          flow[2 * p] = nan;
          flow[2 * p + 1] = nan;
        }
      }
    }
  }
  return lum;
}

Grid<float> random_texture(std::uint64_t seed, int height, int width, double contrast_lo,
                           double contrast_hi) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("random_texture: dimensions must be >= 1");
  if (contrast_lo < 0.0 || contrast_hi < contrast_lo)
    throw std::invalid_argument("random_texture: contrast range must satisfy 0 <= lo <= hi");

  Grid<float> img(height, width);
  if (contrast_lo == contrast_hi) {
    for (std::int64_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(contrast_lo);
    return img;
  }

  // Value noise: normals on a coarse lattice, smoothstep-interpolated.
  constexpr int kCell = 16;
  const int gw = width / kCell + 2;
  const int gh = height / kCell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (int cy = 0; cy < gh; ++cy) {
    for (int cx = 0; cx < gw; ++cx) {
      rng::Stream s(seed, static_cast<std::uint32_t>(cy) * gw + cx, 0, rng::Channel::texture);
      lattice[static_cast<std::size_t>(cy) * gw + cx] = s.next_normal();
    }
  }

  double raw_min = std::numeric_limits<double>::infinity();
  double raw_max = -std::numeric_limits<double>::infinity();
  std::vector<double> raw(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int cx = x / kCell, cy = y / kCell;
      const double fx = static_cast<double>(x % kCell) / kCell;
      const double fy = static_cast<double>(y % kCell) / kCell;
      const double ux = fx * fx * (3.0 - 2.0 * fx);
      const double uy = fy * fy * (3.0 - 2.0 * fy);
      const double v00 = lattice[static_cast<std::size_t>(cy) * gw + cx];
      const double v10 = lattice[static_cast<std::size_t>(cy) * gw + cx + 1];
      const double v01 = lattice[static_cast<std::size_t>(cy + 1) * gw + cx];
      const double v11 = lattice[static_cast<std::size_t>(cy + 1) * gw + cx + 1];
      const double v = (1.0 - ux) * (1.0 - uy) * v00 + ux * (1.0 - uy) * v10 +
                       (1.0 - ux) * uy * v01 + ux * uy * v11;
      raw[static_cast<std::size_t>(y) * width + x] = v;
      raw_min = std::min(raw_min, v);
      raw_max = std::max(raw_max, v);
    }
  }

  const double range = raw_max - raw_min;
  for (std::int64_t i = 0; i < img.size(); ++i) {
    const double unit = range > 0.0 ? (raw[static_cast<std::size_t>(i)] - raw_min) / range : 0.5;
    img[i] = static_cast<float>(contrast_lo + unit * (contrast_hi - contrast_lo));
  }
  return img;
}

Grid<float> random_texture(std::uint64_t seed, const SensorConfig& cfg, double contrast_lo,
                           double contrast_hi) {
  return random_texture(seed, cfg.height, cfg.width, contrast_lo, contrast_hi);
}

}  // namespace spikecam
