#include "spikecam/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace spikecam {

double spikes_per_sampling(const SpikeStream& stream) {
  if (stream.n_frames() < 1)
    throw std::invalid_argument("spikes_per_sampling: stream has no frames");
  return static_cast<double>(stream.total_spikes()) / static_cast<double>(stream.n_frames());
}

ISIHistogram isi_histogram(const SpikeStream& stream) {
  ISIHistogram h;
  const std::int64_t n_pixels = stream.pixel_count();
  std::vector<std::int64_t> prev(static_cast<std::size_t>(n_pixels), -1);
  std::vector<std::int32_t> spikes(static_cast<std::size_t>(n_pixels), 0);

  const std::size_t frame_bytes = stream.frame_bytes();
  for (std::int64_t n = 0; n < stream.n_frames(); ++n) {
    const std::uint8_t* frame = stream.frame_data(n);
    for (std::size_t byte = 0; byte < frame_bytes; ++byte) {
      std::uint8_t bits = frame[byte];
      while (bits) {
        const int bit = std::countr_zero(bits);
        bits &= static_cast<std::uint8_t>(bits - 1);
        const std::int64_t p = static_cast<std::int64_t>(byte) * 8 + bit;
        if (prev[p] >= 0) {
          ++h.bins[n - prev[p]];
          ++h.n_intervals;
        }
        prev[p] = n;
        ++spikes[p];
      }
    }
  }
  for (std::int64_t p = 0; p < n_pixels; ++p)
    if (spikes[p] >= 2) ++h.pixels_contributing;
  return h;
}

double histogram_distance(const ISIHistogram& a, const ISIHistogram& b) {
  if (a.n_intervals == 0 || b.n_intervals == 0)
    throw std::invalid_argument("histogram_distance: empty histogram");
  const double na = static_cast<double>(a.n_intervals);
  const double nb = static_cast<double>(b.n_intervals);
  double tv = 0.0;
  auto ia = a.bins.begin();
  auto ib = b.bins.begin();
  while (ia != a.bins.end() || ib != b.bins.end()) {
    if (ib == b.bins.end() || (ia != a.bins.end() && ia->first < ib->first)) {
      tv += static_cast<double>(ia->second) / na;
      ++ia;
    } else if (ia == a.bins.end() || ib->first < ia->first) {
      tv += static_cast<double>(ib->second) / nb;
      ++ib;
    } else {
      tv += std::fabs(static_cast<double>(ia->second) / na -
                      static_cast<double>(ib->second) / nb);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * tv;
}

double histogram_quantile(const ISIHistogram& h, double p) {
  if (h.n_intervals == 0) throw std::invalid_argument("histogram_quantile: empty histogram");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("histogram_quantile: p must be in [0, 1]");
  // Linear interpolation between order statistics of the pooled multiset.
  const double pos = p * static_cast<double>(h.n_intervals - 1);
  const auto lo_idx = static_cast<std::int64_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo_idx);

  auto value_at = [&h](std::int64_t idx) {
    std::int64_t cum = 0;
    for (const auto& [value, count] : h.bins) {
      cum += count;
      if (idx < cum) return static_cast<double>(value);
    }
    return static_cast<double>(h.bins.rbegin()->first);
  };

  const double lo = value_at(lo_idx);
  if (frac == 0.0) return lo;
  const double hi = value_at(lo_idx + 1);
  return lo + frac * (hi - lo);
}

double histogram_iqr(const ISIHistogram& h) {
  return histogram_quantile(h, 0.75) - histogram_quantile(h, 0.25);
}

Grid<float> tfp_reconstruct(const SpikeStream& stream, std::int64_t window, std::int64_t center,
                            bool normalize) {
  if (window < 1) throw std::invalid_argument("tfp_reconstruct: window must be >= 1");
  const std::int64_t start = center - window / 2;
  if (start < 0 || start + window > stream.n_frames())
    throw std::out_of_range("tfp_reconstruct: window does not fit inside the stream");

  const std::int64_t n_pixels = stream.pixel_count();
  std::vector<std::int32_t> counts(static_cast<std::size_t>(n_pixels), 0);
  for (std::int64_t n = start; n < start + window; ++n) {
    const std::uint8_t* frame = stream.frame_data(n);
    for (std::size_t byte = 0; byte < stream.frame_bytes(); ++byte) {
      std::uint8_t bits = frame[byte];
      while (bits) {
        const int bit = std::countr_zero(bits);
        bits &= static_cast<std::uint8_t>(bits - 1);
        ++counts[static_cast<std::size_t>(byte) * 8 + bit];
      }
    }
  }

  Grid<float> img(stream.height(), stream.width());
  float maxv = 0.0f;
  for (std::int64_t p = 0; p < n_pixels; ++p) {
    img[p] = static_cast<float>(counts[p]) / static_cast<float>(window);
    maxv = std::max(maxv, img[p]);
  }
  if (normalize && maxv > 0.0f)
    for (std::int64_t p = 0; p < n_pixels; ++p) img[p] /= maxv;
  return img;
}

Grid<float> tfi_reconstruct(const SpikeStream& stream, std::int64_t at, bool normalize) {
  if (at < 0 || at >= stream.n_frames())
    throw std::out_of_range("tfi_reconstruct: frame index outside the stream");

  const std::int64_t n_pixels = stream.pixel_count();
  std::vector<std::int64_t> prev(static_cast<std::size_t>(n_pixels), -1);
  std::vector<std::int64_t> next(static_cast<std::size_t>(n_pixels), -1);

  for (std::int64_t n = 0; n <= at; ++n) {
    const std::uint8_t* frame = stream.frame_data(n);
    for (std::size_t byte = 0; byte < stream.frame_bytes(); ++byte) {
      std::uint8_t bits = frame[byte];
      while (bits) {
        const int bit = std::countr_zero(bits);
        bits &= static_cast<std::uint8_t>(bits - 1);
        prev[static_cast<std::size_t>(byte) * 8 + bit] = n;
      }
    }
  }
  for (std::int64_t n = at + 1; n < stream.n_frames(); ++n) {
    const std::uint8_t* frame = stream.frame_data(n);
    for (std::size_t byte = 0; byte < stream.frame_bytes(); ++byte) {
      std::uint8_t bits = frame[byte];
      while (bits) {
        const int bit = std::countr_zero(bits);
        bits &= static_cast<std::uint8_t>(bits - 1);
        const std::int64_t p = static_cast<std::int64_t>(byte) * 8 + bit;
        if (next[p] < 0) next[p] = n;
      }
    }
  }

  Grid<float> img(stream.height(), stream.width());
  float maxv = 0.0f;
  for (std::int64_t p = 0; p < n_pixels; ++p) {
    if (prev[p] >= 0 && next[p] >= 0)
      img[p] = 1.0f / static_cast<float>(next[p] - prev[p]);
    else
      img[p] = 0.0f;
    maxv = std::max(maxv, img[p]);
  }
  if (normalize && maxv > 0.0f)
    for (std::int64_t p = 0; p < n_pixels; ++p) img[p] /= maxv;
  return img;
}

}  // namespace spikecam
