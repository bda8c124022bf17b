#ifndef SPIKECAM_ANALYSIS_HPP
#define SPIKECAM_ANALYSIS_HPP

#include <cstdint>
#include <map>

#include "spikecam/types.hpp"

namespace spikecam {

/// Pooled inter-spike-interval histogram. Intervals are gaps in frames
/// between consecutive spikes of one pixel; the censored gaps before the
/// first and after the last spike are excluded, and pixels with fewer than
/// two spikes contribute nothing.
struct ISIHistogram {
  std::map<std::int64_t, std::int64_t> bins;
  std::int64_t n_intervals = 0;
  std::int64_t pixels_contributing = 0;
};

/// Mean spikes per readout frame over the whole sensor. Errors on N == 0.
double spikes_per_sampling(const SpikeStream& stream);

ISIHistogram isi_histogram(const SpikeStream& stream);

/// Total-variation distance between the normalized histograms, in [0, 1].
/// Errors if either histogram is empty.
double histogram_distance(const ISIHistogram& a, const ISIHistogram& b);

/// Interpolated quantile (linear between order statistics) of the pooled
/// interval multiset; p in [0, 1]. Errors on an empty histogram.
double histogram_quantile(const ISIHistogram& h, double p);

/// Q3 - Q1 of the pooled interval multiset.
double histogram_iqr(const ISIHistogram& h);

/// Windowed firing-rate image: spike count over `window` frames centred on
/// `center`, divided by the window length, then rescaled so the brightest
/// pixel is 1 (`normalize = false` keeps the raw rates). The window must
/// fit inside the stream.
Grid<float> tfp_reconstruct(const SpikeStream& stream, std::int64_t window, std::int64_t center,
                            bool normalize = true);

/// Reciprocal-interval image at frame `at`: per pixel 1 / ISI of the spike
/// pair enclosing `at` (last spike at or before, first spike after), 0 when
/// no such pair exists, rescaled so the brightest pixel is 1.
Grid<float> tfi_reconstruct(const SpikeStream& stream, std::int64_t at, bool normalize = true);

}  // namespace spikecam

#endif  // SPIKECAM_ANALYSIS_HPP
