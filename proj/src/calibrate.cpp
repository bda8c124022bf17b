#include "spikecam/calibrate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spikecam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return v.empty() ? kNaN : 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double fired_threshold_mass(std::int64_t count, double capacitance, double c_s,
                            double drive_voltage, double v_s) {
  if (count < 0) throw std::domain_error("fired_threshold_mass: count must be >= 0");
  const double threshold = (capacitance + c_s) * (drive_voltage + v_s);
  if (!(threshold > 0.0))
    throw std::domain_error("fired_threshold_mass: effective threshold must be positive");
  return static_cast<double>(count) * threshold;
}

double expected_accumulation(double mu, double alpha, double i_dark, std::int64_t n_frames,
                             double dt_us) {
  if (mu < 0.0 || alpha < 0.0 || i_dark < 0.0 || n_frames < 0)
    throw std::domain_error("expected_accumulation: arguments must be >= 0");
  if (!(dt_us > 0.0)) throw std::domain_error("expected_accumulation: dt_us must be > 0");
  // alpha and i_dark are per readout interval, so the integral over
  // n_frames * dt is just the per-frame rate times the frame count.
  return (alpha * mu + i_dark) * static_cast<double>(n_frames);
}

L1Fit l1_linear_fit(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w, const L1FitOptions& opt) {
  const std::size_t n = x.size();
  if (y.size() != n || w.size() != n)
    throw std::invalid_argument("l1_linear_fit: input spans must have equal length");
  if (n < 2) throw std::invalid_argument("l1_linear_fit: need at least two points");
  {
    bool distinct = false;
    for (std::size_t i = 1; i < n && !distinct; ++i) distinct = x[i] != x[0];
    if (!distinct) throw std::invalid_argument("l1_linear_fit: need two distinct x values");
  }

  const double eps2 = opt.epsilon * opt.epsilon;
  double slope = 0.0, intercept = 0.0;

  auto solve_weighted = [&](const std::vector<double>& u) {
    double su = 0, sux = 0, suxx = 0, suy = 0, suxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      su += u[i];
      sux += u[i] * x[i];
      suxx += u[i] * x[i] * x[i];
      suy += u[i] * y[i];
      suxy += u[i] * x[i] * y[i];
    }
    const double det = su * suxx - sux * sux;
    if (!(std::fabs(det) > 0.0)) return false;
    slope = (su * suxy - sux * suy) / det;
    intercept = (suy - slope * sux) / su;
    return true;
  };

  auto smoothed_objective = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - slope * x[i] - intercept;
      s += w[i] * std::sqrt(r * r + eps2);
    }
    return s;
  };

  L1Fit fit;
  std::vector<double> u(w.begin(), w.end());
  if (!solve_weighted(u)) throw std::invalid_argument("l1_linear_fit: degenerate system");
  double obj = smoothed_objective();
  fit.objective_trace.push_back(obj);

  for (int it = 0; it < opt.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - slope * x[i] - intercept;
      u[i] = w[i] / std::sqrt(r * r + eps2);
    }
    const double prev_slope = slope, prev_intercept = intercept;
    if (!solve_weighted(u)) {
      slope = prev_slope;
      intercept = prev_intercept;
      break;
    }
    const double next_obj = smoothed_objective();
    fit.iterations = it + 1;
    if (next_obj > obj) {
      // The majorizer guarantees non-increase; any uptick is numerical noise
      // at convergence. Keep the better iterate and stop.
      slope = prev_slope;
      intercept = prev_intercept;
      break;
    }
    fit.objective_trace.push_back(next_obj);
    const double decrease = obj - next_obj;
    obj = next_obj;
    if (decrease <= opt.rel_tolerance * std::max(obj, 1e-300)) break;
  }

  fit.slope = slope;
  fit.intercept = intercept;
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) l1 += w[i] * std::fabs(y[i] - slope * x[i] - intercept);
  fit.objective = l1;
  return fit;
}

namespace {

// Split the identifiable (slope, intercept) pair into circuit estimates.
// alpha is pinned globally, the effective threshold absorbs the slope
// deviation, and its split puts everything in the capacitance term.
void decompose(PixelCalibration& pc, double alpha_global, const SensorConfig& cfg) {
  if (pc.dead) return;
  if (pc.slope_a > 0.0) {
    const double alpha_used = alpha_global > 0.0 ? alpha_global : cfg.threshold() * pc.slope_a;
    const double phi_eff = alpha_used / pc.slope_a;
    pc.alpha_hat = alpha_used;
    pc.c_s_hat = phi_eff / cfg.drive_voltage() - cfg.capacitance;
    pc.v_s_hat = 0.0;
    pc.i_dark_hat = pc.intercept_b * phi_eff;
  } else {
    // No measurable light response: dark rate decomposed against the
    // nominal threshold.
    pc.alpha_hat = 0.0;
    pc.c_s_hat = 0.0;
    pc.v_s_hat = 0.0;
    pc.i_dark_hat = pc.intercept_b * cfg.threshold();
  }
}

PixelCalibration fit_pixel(std::span<const std::int64_t> counts, std::span<const double> mu,
                           std::int64_t n_frames, const DecompositionPriors& priors) {
  const std::size_t n = counts.size();
  if (mu.size() != n)
    throw std::invalid_argument("calibrate_pixel: counts and scene intensities differ in length");
  if (n < 2) throw std::invalid_argument("calibrate_pixel: underdetermined, need >= 2 scenes");
  {
    bool distinct = false;
    for (std::size_t i = 1; i < n && !distinct; ++i) distinct = mu[i] != mu[0];
    if (!distinct)
      throw std::invalid_argument("calibrate_pixel: underdetermined, need two distinct scene "
                                  "intensities");
  }
  if (n_frames < 1) throw std::invalid_argument("calibrate_pixel: n_frames must be >= 1");

  PixelCalibration pc;
  bool any = false;
  for (std::int64_t c : counts) {
    if (c < 0) throw std::invalid_argument("calibrate_pixel: negative spike count");
    any = any || c > 0;
  }
  if (!any) {
    pc.dead = true;
    return pc;
  }

  std::vector<double> x(mu.begin(), mu.end());
  std::vector<double> y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<double>(counts[i]) / static_cast<double>(n_frames);
    // Bright scenes with too few spikes keep a thermal residue; down-weight
    // them instead of letting them steer the fit.
    if (mu[i] > 0.0 && static_cast<double>(counts[i]) < priors.min_full_weight_count)
      w[i] = std::max<double>(static_cast<double>(counts[i]), 1.0) / priors.min_full_weight_count;
    else
      w[i] = 1.0;
  }

  const L1Fit fit = l1_linear_fit(x, y, w);
  pc.slope_a = std::max(fit.slope, 0.0);
  pc.intercept_b = std::max(fit.intercept, 0.0);
  pc.residual = fit.objective;
  pc.iterations = fit.iterations;
  return pc;
}

}  // namespace

PixelCalibration calibrate_pixel(std::span<const std::int64_t> counts, std::span<const double> mu,
                                 std::int64_t n_frames, const SensorConfig& cfg,
                                 const DecompositionPriors& priors) {
  PixelCalibration pc = fit_pixel(counts, mu, n_frames, priors);
  decompose(pc, priors.alpha_global, cfg);
  return pc;
}

SensorCalibration calibrate_sensor(const std::vector<CalibrationScene>& scenes,
                                   const SensorConfig& cfg, const DecompositionPriors& priors) {
  cfg.validate();
  if (scenes.size() < 2)
    throw std::invalid_argument("calibrate_sensor: underdetermined, need >= 2 scenes");
  const std::int64_t n_frames = scenes[0].stream.n_frames();
  for (const auto& s : scenes) {
    if (s.stream.height() != cfg.height || s.stream.width() != cfg.width)
      throw std::invalid_argument("calibrate_sensor: scene geometry does not match the sensor");
    if (s.stream.n_frames() != n_frames)
      throw std::invalid_argument("calibrate_sensor: scenes must share one frame count");
    if (s.gray < 0.0 || !(s.l_monitor > 0.0))
      throw std::invalid_argument("calibrate_sensor: invalid scene intensity");
  }
  if (n_frames < 1) throw std::invalid_argument("calibrate_sensor: scenes have no frames");

  const std::int64_t n_pixels = cfg.pixel_count();
  const std::size_t n_scenes = scenes.size();
  std::vector<double> mu(n_scenes);
  for (std::size_t k = 0; k < n_scenes; ++k) mu[k] = scenes[k].mu();
  {
    bool distinct = false;
    for (std::size_t k = 1; k < n_scenes && !distinct; ++k) distinct = mu[k] != mu[0];
    if (!distinct)
      throw std::invalid_argument("calibrate_sensor: underdetermined, need two distinct scene "
                                  "intensities");
  }

  // Per-scene, per-pixel spike counts (scene-major).
  std::vector<std::int64_t> counts(n_scenes * static_cast<std::size_t>(n_pixels), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(n_scenes); ++k) {
    const SpikeStream& st = scenes[static_cast<std::size_t>(k)].stream;
    std::int64_t* row = counts.data() + k * n_pixels;
    for (std::int64_t n = 0; n < n_frames; ++n) {
      const std::uint8_t* frame = st.frame_data(n);
      for (std::size_t byte = 0; byte < st.frame_bytes(); ++byte) {
        std::uint8_t bits = frame[byte];
        while (bits) {
          const int bit = std::countr_zero(bits);
          bits &= static_cast<std::uint8_t>(bits - 1);
          ++row[static_cast<std::int64_t>(byte) * 8 + bit];
        }
      }
    }
  }

  SensorCalibration cal;
  cal.pixels.resize(static_cast<std::size_t>(n_pixels));

  // Stage 1: per-pixel robust fits.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 256)
#endif
  for (std::int64_t p = 0; p < n_pixels; ++p) {
    std::vector<std::int64_t> pixel_counts(n_scenes);
    for (std::size_t k = 0; k < n_scenes; ++k) pixel_counts[k] = counts[k * n_pixels + p];
    cal.pixels[static_cast<std::size_t>(p)] = fit_pixel(pixel_counts, mu, n_frames, priors);
  }

  // Stage 2: pin alpha from the mean slope, then decompose every pixel.
  double slope_sum = 0.0;
  std::int64_t live = 0;
  for (const auto& pc : cal.pixels) {
    if (!pc.dead) {
      slope_sum += pc.slope_a;
      ++live;
    }
  }
  const double alpha_global =
      priors.alpha_global > 0.0
          ? priors.alpha_global
          : (live > 0 ? cfg.threshold() * (slope_sum / static_cast<double>(live)) : 0.0);
  for (auto& pc : cal.pixels) decompose(pc, alpha_global, cfg);

  // Aggregate sample statistics over live pixels.
  std::vector<double> dark_hats, c_hats, v_hats, alpha_hats, residuals;
  dark_hats.reserve(static_cast<std::size_t>(live));
  cal.maps.c_s = Grid<double>(cfg.height, cfg.width);
  cal.maps.v_s = Grid<double>(cfg.height, cfg.width);
  cal.maps.alpha = Grid<double>(cfg.height, cfg.width, alpha_global);
  cal.maps.i_dark = Grid<double>(cfg.height, cfg.width);
  cal.maps.seed = 0;

  CalibrationReport& rep = cal.report;
  rep.height = cfg.height;
  rep.width = cfg.width;
  rep.n_scenes = static_cast<std::int64_t>(n_scenes);
  rep.n_frames = n_frames;
  rep.alpha_global = alpha_global;
  rep.quantization_step = cfg.threshold() / static_cast<double>(n_frames);

  for (std::int64_t p = 0; p < n_pixels; ++p) {
    const auto& pc = cal.pixels[static_cast<std::size_t>(p)];
    if (pc.dead) {
      ++rep.dead_pixels;
      if (rep.dead_list.size() < 64)
        rep.dead_list.emplace_back(static_cast<int>(p % cfg.width),
                                   static_cast<int>(p / cfg.width));
      continue;
    }
    dark_hats.push_back(pc.i_dark_hat);
    c_hats.push_back(pc.c_s_hat);
    v_hats.push_back(pc.v_s_hat);
    alpha_hats.push_back(pc.alpha_hat);
    residuals.push_back(pc.residual);
    cal.maps.c_s[p] = pc.c_s_hat;
    cal.maps.v_s[p] = pc.v_s_hat;
    cal.maps.alpha[p] = pc.alpha_hat;
    cal.maps.i_dark[p] = pc.i_dark_hat;
  }
  rep.all_dead = live == 0;

  NoiseParams est = NoiseParams::zero();
  est.mu_dark = mean_of(dark_hats);
  est.sigma_dark_s = sample_std(dark_hats, est.mu_dark);
  est.sigma_c_s = sample_std(c_hats, mean_of(c_hats));
  est.sigma_v_s = sample_std(v_hats, mean_of(v_hats));
  est.mu_alpha = mean_of(alpha_hats);
  est.sigma_alpha_s = sample_std(alpha_hats, est.mu_alpha);
  est.sigma_t0 = 0.0;  // cancelled by the long-capture protocol; not estimable here
  cal.params = est;

  std::sort(residuals.begin(), residuals.end());
  rep.residual_p50 = quantile_sorted(residuals, 0.5);
  rep.residual_p90 = quantile_sorted(residuals, 0.9);
  rep.residual_p99 = quantile_sorted(residuals, 0.99);
  rep.residual_max = residuals.empty() ? kNaN : residuals.back();
  return cal;
}

std::string format_report(const SensorCalibration& cal) {
  const CalibrationReport& r = cal.report;
  std::ostringstream out;
  out.precision(9);
  out << "spikecam calibration report\n";
  out << "geometry: " << r.width << "x" << r.height << "\n";
  out << "scenes: " << r.n_scenes << "  frames_per_scene: " << r.n_frames << "\n";
  out << "pixels: " << static_cast<std::int64_t>(r.height) * r.width
      << "  dead: " << r.dead_pixels << "\n";
  if (r.all_dead) {
    out << "WARNING: every pixel is dead; aggregate estimates are null\n";
  }
  out << "alpha_global: " << r.alpha_global << "\n";
  out << "quantization_step: " << r.quantization_step << "\n";
  out << "estimates:\n";
  out << "  mu_dark       = " << cal.params.mu_dark << "\n";
  out << "  sigma_dark_s  = " << cal.params.sigma_dark_s << "\n";
  out << "  sigma_c_s     = " << cal.params.sigma_c_s << "\n";
  out << "  sigma_v_s     = " << cal.params.sigma_v_s << "\n";
  out << "  mu_alpha      = " << cal.params.mu_alpha << "\n";
  out << "  sigma_alpha_s = " << cal.params.sigma_alpha_s << "\n";
  out << "residual quantiles (p50 p90 p99 max): " << r.residual_p50 << " " << r.residual_p90
      << " " << r.residual_p99 << " " << r.residual_max << "\n";
  out << "dead pixels:";
  if (r.dead_pixels == 0) {
    out << " none\n";
  } else {
    for (const auto& [x, y] : r.dead_list) out << " (" << x << "," << y << ")";
    if (r.dead_pixels > static_cast<std::int64_t>(r.dead_list.size())) out << " ...";
    out << "\n";
  }
  return out.str();
}

}  // namespace spikecam
