#include "spikecam/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace spikecam::rng {

namespace {

// Wichura's AS 241 PPND16 rational approximations.
double ppnd16(double p) {
  constexpr double a[8] = {3.3871328727963666080e0,  1.3314166789178437745e2,
                           1.9715909503065514427e3,  1.3731693765509461125e4,
                           4.5921953931549871457e4,  6.7265770927008700853e4,
                           3.3430575583588128105e4,  2.5090809287301226727e3};
  constexpr double b[8] = {1.0,
                           4.2313330701600911252e1,  6.8718700749205790830e2,
                           5.3941960214247511077e3,  2.1213794301586595867e4,
                           3.9307895800092710610e4,  2.8729085735721942674e4,
                           5.2264952788528545610e3};
  constexpr double c[8] = {1.42343711074968357734e0,  4.63033784615654529590e0,
                           5.76949722146069140550e0,  3.64784832476320460504e0,
                           1.27045825245236838258e0,  2.41780725177450611770e-1,
                           2.27238449892691845833e-2, 7.74545014278341407640e-4};
  constexpr double d[8] = {1.0,
                           2.05319162663775882187e0,  1.67638483018380384940e0,
                           6.89767334985100004550e-1, 1.48103976427480074590e-1,
                           1.51986665636164571966e-2, 5.47593808499534494600e-4,
                           1.05075007164441684324e-9};
  constexpr double e[8] = {6.65790464350110377720e0,  5.46378491116411436990e0,
                           1.78482653991729133580e0,  2.96560571828504891230e-1,
                           2.65321895265761230930e-2, 1.24266094738807843860e-3,
                           2.71155556874348757815e-5, 2.01033439929228813265e-7};
  constexpr double f[8] = {1.0,
                           5.99832206555887937690e-1, 1.36929880922735805310e-1,
                           1.48753612908506148525e-2, 7.86869131145613259100e-4,
                           1.84631831751005468180e-6, 1.42151175831644588870e-15,
                           0.0};

  auto poly7 = [](const double (&k)[8], double r) {
    return ((((((k[7] * r + k[6]) * r + k[5]) * r + k[4]) * r + k[3]) * r + k[2]) * r + k[1]) * r +
           k[0];
  };

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly7(a, r) / poly7(b, r);
  }
  const double tail_p = q < 0.0 ? p : 1.0 - p;
  if (!(tail_p > 0.0)) throw std::domain_error("normal_quantile: p must lie strictly in (0, 1)");
  double r = std::sqrt(-std::log(tail_p));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = poly7(c, r) / poly7(d, r);
  } else {
    r -= 5.0;
    x = poly7(e, r) / poly7(f, r);
    // One Newton step against the exact tail CDF polishes the far branch
    // to full double precision.
    const double cdf_tail = 0.5 * std::erfc(x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf > 0.0) x += (cdf_tail - tail_p) / pdf;
  }
  return q < 0.0 ? -x : x;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile: p must lie strictly in (0, 1)");
  return ppnd16(p);
}

double Stream::next_normal() { return ppnd16(next_unit()); }

double log_factorial(std::int64_t k) {
  if (k < 0) throw std::domain_error("log_factorial: negative argument");
  static const std::vector<double> table = [] {
    std::vector<double> t(1024);
    long double acc = 0.0L;
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      acc += std::log(static_cast<long double>(i));
      t[i] = static_cast<double>(acc);
    }
    return t;
  }();
  if (k < static_cast<std::int64_t>(table.size())) return table[static_cast<std::size_t>(k)];
  const double n = static_cast<double>(k);
  const double inv = 1.0 / n;
  const double inv2 = inv * inv;
  return 0.5 * std::log(2.0 * M_PI * n) + n * (std::log(n) - 1.0) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

void PoissonSampler::prepare(double mean) {
  mean_ = mean;
  if (mean < 10.0) {
    exp_neg_mean_ = std::exp(-mean);
    return;
  }
  const double smu = std::sqrt(mean);
  b_ = 0.931 + 2.53 * smu;
  a_ = -0.059 + 0.02483 * b_;
  inv_alpha_ = 1.1239 + 1.1328 / (b_ - 3.4);
  vr_ = 0.9277 - 3.6224 / (b_ - 2.0);
  log_mean_ = std::log(mean);
}

std::int64_t PoissonSampler::operator()(double mean, Stream& stream) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw std::domain_error("PoissonSampler: mean must be finite and nonnegative");
  if (mean == 0.0) return 0;
  if (mean != mean_) prepare(mean);

  if (mean < 10.0) {
    // Knuth's product method.
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= stream.next_unit();
    } while (p > exp_neg_mean_);
    return k - 1;
  }

  if (mean > 1e8) {
    // Gaussian regime; the skew correction is far below sampling noise here.
    const double z = stream.next_normal();
    const double v = mean + std::sqrt(mean) * z;
    return v <= 0.0 ? 0 : static_cast<std::int64_t>(std::llround(v));
  }

  // Hormann's transformed rejection (PTRS).
  for (;;) {
    const double u = stream.next_unit() - 0.5;
    const double v = stream.next_unit();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a_ / us + b_) * u + mean_ + 0.43));
    if (us >= 0.07 && v <= vr_) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha_ / (a_ / (us * us) + b_)) <=
        k * log_mean_ - mean_ - log_factorial(k))
      return k;
  }
}

}  // namespace spikecam::rng
