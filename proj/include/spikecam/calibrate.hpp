#ifndef SPIKECAM_CALIBRATE_HPP
#define SPIKECAM_CALIBRATE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spikecam/types.hpp"

namespace spikecam {

/// Total threshold mass released by `count` fires of one pixel:
/// count * (C + c_s) * (V_d + v_s). For long static captures the thermal
/// term averages out, so this balances the integrated input. Errors when
/// the effective threshold is not positive.
double fired_threshold_mass(std::int64_t count, double capacitance, double c_s,
                            double drive_voltage, double v_s);

/// Integrated input over a static capture: (alpha * mu + i_dark) * n_frames,
/// with alpha and i_dark expressed per readout interval. dt_us only
/// validates the timebase; the per-dt convention already absorbs it.
double expected_accumulation(double mu, double alpha, double i_dark, std::int64_t n_frames,
                             double dt_us);

struct L1FitOptions {
  double epsilon = 1e-9;       // smoothing floor for the IRLS weights
  int max_iterations = 500;
  double rel_tolerance = 1e-8; // stop when the objective decrease falls below this
};

struct L1Fit {
  double slope = 0.0;
  double intercept = 0.0;
  double objective = 0.0;  // sum of weighted absolute residuals at the solution
  int iterations = 0;
  std::vector<double> objective_trace;  // smoothed objective per iteration, non-increasing
};

/// Least-absolute-deviations fit of y ~ slope * x + intercept by iteratively
/// reweighted least squares with epsilon smoothing. Weights scale each
/// residual's contribution. Requires at least two distinct x values.
L1Fit l1_linear_fit(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w, const L1FitOptions& opt = {});

/// Convention for splitting the identifiable (slope, intercept) pair into
/// circuit quantities. Only alpha/threshold and dark/threshold ratios are
/// observable per pixel; the split fixes alpha globally and attributes all
/// threshold deviation to the capacitance term with v_s = 0.
struct DecompositionPriors {
  double alpha_global = 0.0;          // <= 0: derive from this pixel's own slope and the nominal threshold
  double min_full_weight_count = 200; // bright scenes below this count are down-weighted
};

struct PixelCalibration {
  double slope_a = 0.0;      // spikes per luminance unit per frame
  double intercept_b = 0.0;  // spikes per frame at zero luminance
  double alpha_hat = 0.0;
  double i_dark_hat = 0.0;
  double c_s_hat = 0.0;
  double v_s_hat = 0.0;
  double residual = 0.0;     // objective of the fit at the solution
  bool dead = false;         // no spikes in any scene
  int iterations = 0;
};

/// Fit one pixel's per-scene spike counts against scene intensities and
/// decompose under the priors convention. Requires counts aligned with mu
/// and at least two distinct mu values; all counts zero flags a dead pixel.
PixelCalibration calibrate_pixel(std::span<const std::int64_t> counts,
                                 std::span<const double> mu, std::int64_t n_frames,
                                 const SensorConfig& cfg,
                                 const DecompositionPriors& priors = {});

/// One static capture used for calibration.
struct CalibrationScene {
  double gray = 0.0;       // monitor grayscale level
  double l_monitor = 1.0;  // monitor luminance at level 1
  SpikeStream stream;

  double mu() const { return gray * l_monitor; }
};

struct CalibrationReport {
  int height = 0, width = 0;
  std::int64_t n_scenes = 0;
  std::int64_t n_frames = 0;
  std::int64_t dead_pixels = 0;
  bool all_dead = false;
  double alpha_global = 0.0;
  double quantization_step = 0.0;  // nominal threshold / frames: one-count resolution
  double residual_p50 = 0.0, residual_p90 = 0.0, residual_p99 = 0.0, residual_max = 0.0;
  std::vector<std::pair<int, int>> dead_list;  // (x, y), truncated for huge sensors
};

struct SensorCalibration {
  NoiseParams params;        // aggregate estimates; NaN when every pixel is dead
  SpatialNoiseMaps maps;     // per-pixel decomposed estimates under the priors convention
  std::vector<PixelCalibration> pixels;  // row-major, one per pixel
  CalibrationReport report;
};

/// Run the per-pixel fits over every pixel (data-parallel), derive the
/// global alpha from the mean slope, decompose, and aggregate sample
/// statistics over live pixels into a NoiseParams estimate.
SensorCalibration calibrate_sensor(const std::vector<CalibrationScene>& scenes,
                                   const SensorConfig& cfg,
                                   const DecompositionPriors& priors = {});

/// Plain-text calibration report.
std::string format_report(const SensorCalibration& cal);

}  // namespace spikecam

#endif  // SPIKECAM_CALIBRATE_HPP
