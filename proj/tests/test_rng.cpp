#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "maxmart/rng.hpp"

using namespace maxmart;

namespace {

// Independent oracle: invert the normal CDF by bisection on erfc.
double quantile_by_bisection(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("counter rng is a pure function of key and counter") {
  CounterRng a(42, 7, rng_stream::increments);
  CounterRng b(42, 7, rng_stream::increments);
  for (std::uint64_t i = 0; i < 100; ++i) CHECK(a.uniform_at(i) == b.uniform_at(i));

  CounterRng other_path(42, 8, rng_stream::increments);
  CounterRng other_stream(42, 7, rng_stream::bridge_upper);
  CounterRng other_seed(43, 7, rng_stream::increments);
  int coincidences = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    if (a.uniform_at(i) == other_path.uniform_at(i)) ++coincidences;
    if (a.uniform_at(i) == other_stream.uniform_at(i)) ++coincidences;
    if (a.uniform_at(i) == other_seed.uniform_at(i)) ++coincidences;
  }
  CHECK(coincidences == 0);
}

TEST_CASE("sequential interface walks the same stream") {
  CounterRng a(1, 2, 3);
  CounterRng b(1, 2, 3);
  for (int i = 0; i < 10; ++i) CHECK(a.next_uniform() == b.uniform_at(i));
}

TEST_CASE("uniforms live strictly inside (0,1) with the right moments") {
  CounterRng rng(987, 0, rng_stream::aux);
  const std::size_t n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform_at(i);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::fabs(var - 1.0 / 12.0) < 0.001);
}

TEST_CASE("normal quantile inverts the normal cdf") {
  for (double p : {1e-10, 1e-6, 1e-3, 0.01, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75,
                   0.9, 0.99, 0.999, 1.0 - 1e-6}) {
    const double q = normal_quantile(p);
    CHECK(std::fabs(normal_cdf(q) - p) <= 1e-11);
    CHECK(std::fabs(q - quantile_by_bisection(p)) <= 2e-9 * (1.0 + std::fabs(q)));
  }
  CHECK(normal_quantile(0.5) == 0.0);
  // frozen reference value of the upper quartile
  CHECK(std::fabs(normal_quantile(0.75) - 0.674489750196082) < 1e-12);
  CHECK(std::fabs(normal_quantile(0.25) + normal_quantile(0.75)) < 1e-12);
  CHECK_THROWS_AS((void)normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS((void)normal_quantile(1.0), std::domain_error);
}

TEST_CASE("normal draws have standard moments and tails") {
  CounterRng rng(2024, 1, rng_stream::increments);
  const std::size_t n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  std::size_t beyond196 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.normal_at(i);
    sum += z;
    sum2 += z * z;
    if (std::fabs(z) > 1.96) ++beyond196;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(var - 1.0) < 0.01);
  const double tail = static_cast<double>(beyond196) / n;
  CHECK(std::fabs(tail - 0.05) < 4.0 * std::sqrt(0.05 * 0.95 / n));
}

TEST_CASE("derive_seed separates labels") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(5, k));
  CHECK(seen.size() == 1000);
}

TEST_CASE("half normal cdf") {
  CHECK(half_normal_cdf(-1.0) == 0.0);
  CHECK(half_normal_cdf(0.0) == 0.0);
  CHECK(std::fabs(half_normal_cdf(1.0) - (2.0 * normal_cdf(1.0) - 1.0)) < 1e-15);
}
