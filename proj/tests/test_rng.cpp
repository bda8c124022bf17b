#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "spikecam/rng.hpp"

using namespace spikecam;

TEST_CASE("philox4x32-10 matches the published test vectors") {
  // Vectors from the Random123 known-answer set.
  auto out = rng::philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  out = rng::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu});
  CHECK(out == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  out = rng::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u});
  CHECK(out == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("substreams produce the frozen word sequences") {
  // Frozen from an independent implementation of the same substream layout:
  // key = seed words, counter = (block, pixel, frame, channel).
  {
    rng::Stream s(0, 0, 0, rng::Channel::shot);
    const std::uint32_t expect[6] = {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu,
                                     0x9b00dbd8u, 0xf8e4cca4u, 0x5cb200dbu};
    for (std::uint32_t e : expect) CHECK(s.next_u32() == e);
  }
  {
    rng::Stream s(0xDEADBEEFCAFEF00Dull, 123, 456, rng::Channel::thermal);
    const std::uint32_t expect[6] = {0x14834a7du, 0x2b54cf7du, 0x5c65658fu,
                                     0x3ad66cbdu, 0xad06d909u, 0xf16eb7d5u};
    for (std::uint32_t e : expect) CHECK(s.next_u32() == e);
  }
  {
    rng::Stream s(1, 0, 0, rng::Channel::map_dark);
    const std::uint32_t expect[6] = {0x3321c3d5u, 0x2057f548u, 0xcb402fddu,
                                     0x756e84fdu, 0x64737089u, 0x96365015u};
    for (std::uint32_t e : expect) CHECK(s.next_u32() == e);
  }
}

TEST_CASE("substreams with distinct coordinates are distinct, equal ones identical") {
  rng::Stream a(42, 7, 9, rng::Channel::shot);
  rng::Stream b(42, 7, 9, rng::Channel::shot);
  rng::Stream c(42, 7, 9, rng::Channel::thermal);
  rng::Stream d(42, 8, 9, rng::Channel::shot);
  rng::Stream e(43, 7, 9, rng::Channel::shot);
  bool all_equal_c = true, all_equal_d = true, all_equal_e = true;
  for (int i = 0; i < 16; ++i) {
    const std::uint32_t va = a.next_u32();
    CHECK(va == b.next_u32());
    all_equal_c = all_equal_c && va == c.next_u32();
    all_equal_d = all_equal_d && va == d.next_u32();
    all_equal_e = all_equal_e && va == e.next_u32();
  }
  CHECK_FALSE(all_equal_c);
  CHECK_FALSE(all_equal_d);
  CHECK_FALSE(all_equal_e);
}

TEST_CASE("unit draws live strictly inside (0,1) with uniform moments") {
  rng::Stream s(2024, 0, 0, rng::Channel::shot);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.next_unit();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal quantile matches reference values") {
  // Reference values computed with an independent implementation of the
  // normal inverse CDF at double precision.
  const struct { double p, x; } cases[] = {
      {1e-12, -7.034483825301131},
      {1e-06, -4.753424308822899},
      {0.001, -3.090232306167813},
      {0.025, -1.9599639845400545},
      {0.25, -0.6744897501960817},
      {0.5, 0.0},
      {0.6, 0.2533471031357997},
      {0.975, 1.959963984540054},
      {0.999, 3.090232306167813},
      {0.999999, 4.753424308817087},
      {0.999999999999, 7.0344869100478356},
  };
  for (const auto& c : cases)
    CHECK(rng::normal_quantile(c.p) == doctest::Approx(c.x).epsilon(1e-12));
  CHECK_THROWS_AS(rng::normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(rng::normal_quantile(1.0), std::domain_error);
}

TEST_CASE("normal draws have standard moments") {
  rng::Stream s(7, 1, 2, rng::Channel::thermal);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next_normal();
    sum += z;
    sum2 += z * z;
    sum3 += z * z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::fabs(sum3 / n) < 0.05);
}

TEST_CASE("log_factorial is exact small and Stirling-accurate large") {
  CHECK(rng::log_factorial(0) == 0.0);
  CHECK(rng::log_factorial(1) == 0.0);
  CHECK(rng::log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-15));
  CHECK(rng::log_factorial(10) == doctest::Approx(std::log(3628800.0)).epsilon(1e-15));
  // Continuity across the table/Stirling boundary.
  const double below = rng::log_factorial(1023);
  const double above = rng::log_factorial(1024);
  CHECK(above - below == doctest::Approx(std::log(1024.0)).epsilon(1e-12));
  CHECK_THROWS_AS(rng::log_factorial(-1), std::domain_error);
}

namespace {

void check_poisson_moments(double mean, int n, double mean_tol, double var_tol) {
  rng::Stream s(99, 3, 4, rng::Channel::shot);
  rng::PoissonSampler sampler;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(sampler(mean, s));
    REQUIRE(k >= 0.0);
    sum += k;
    sum2 += k * k;
  }
  const double m = sum / n;
  const double v = sum2 / n - m * m;
  CHECK(m == doctest::Approx(mean).epsilon(mean_tol));
  CHECK(v == doctest::Approx(mean).epsilon(var_tol));
}

}  // namespace

TEST_CASE("poisson moments across the sampler regimes") {
  check_poisson_moments(0.5, 200000, 0.02, 0.03);   // product method
  check_poisson_moments(4.0, 200000, 0.01, 0.02);   // product method
  check_poisson_moments(50.0, 200000, 0.005, 0.02); // transformed rejection
  check_poisson_moments(5000.0, 50000, 0.002, 0.03);
}

TEST_CASE("poisson zero-probability mass matches exp(-mean) at small mean") {
  rng::Stream s(5, 0, 0, rng::Channel::shot);
  rng::PoissonSampler sampler;
  const double mean = 1.5;
  const int n = 200000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += sampler(mean, s) == 0;
  CHECK(static_cast<double>(zeros) / n == doctest::Approx(std::exp(-mean)).epsilon(0.02));
}

TEST_CASE("poisson edge cases") {
  rng::Stream s(1, 1, 1, rng::Channel::shot);
  rng::PoissonSampler sampler;
  CHECK(sampler(0.0, s) == 0);
  CHECK_THROWS_AS(sampler(-1.0, s), std::domain_error);
  // Gaussian regime stays near its mean in relative terms.
  const double huge = 2e8;
  for (int i = 0; i < 10; ++i) {
    const double k = static_cast<double>(sampler(huge, s));
    CHECK(std::fabs(k - huge) / huge < 1e-3);
  }
}

TEST_CASE("poisson draws are reproducible per substream") {
  rng::PoissonSampler s1, s2;
  for (double mean : {0.25, 3.0, 42.0, 900.0}) {
    rng::Stream a(11, 22, 33, rng::Channel::shot);
    rng::Stream b(11, 22, 33, rng::Channel::shot);
    for (int i = 0; i < 100; ++i) CHECK(s1(mean, a) == s2(mean, b));
  }
}
