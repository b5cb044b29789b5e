#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "maxmart/batch.hpp"
#include "maxmart/characterize.hpp"
#include "maxmart/path.hpp"
#include "maxmart/stattests.hpp"

using namespace maxmart;

// The OpenMP kernels must reproduce the serial reference exactly: per-path
// work is a pure function of (seed, path index) and folds run in index order.

TEST_CASE("for_each_path fills identical slots under both policies") {
  const std::size_t n = 5000;
  auto kernel = [](std::int64_t i) {
    BrownianWalker w(13, static_cast<std::uint64_t>(i), 1e-3);
    for (int s = 0; s < 200; ++s) w.advance();
    return w.value() + w.local_time();
  };
  std::vector<double> serial(n), parallel(n);
  for_each_path(static_cast<std::int64_t>(n), Exec::serial, [&](std::int64_t i) {
    serial[static_cast<std::size_t>(i)] = kernel(i);
  });
  for_each_path(static_cast<std::int64_t>(n), Exec::parallel,
                [&](std::int64_t i) {
                  parallel[static_cast<std::size_t>(i)] = kernel(i);
                });
  CHECK(serial == parallel);
}

TEST_CASE("map_paths_fold folds in index order") {
  std::vector<double> order;
  map_paths_fold<double>(
      100, Exec::parallel, [](std::int64_t i) { return static_cast<double>(i); },
      [&](double v) { order.push_back(v); });
  REQUIRE(order.size() == 100);
  for (std::size_t i = 0; i < order.size(); ++i)
    CHECK(order[i] == static_cast<double>(i));
}

TEST_CASE("drift test is scheduling independent") {
  const MaxMartingaleSpec spec{Variant::max, RealFunction::exp_decay(1.0), 0.0};
  StatConfig serial_cfg;
  serial_cfg.dt = 1e-3;
  serial_cfg.exec = Exec::serial;
  StatConfig parallel_cfg = serial_cfg;
  parallel_cfg.exec = Exec::parallel;
  const TestReport a =
      drift_test(spec, StoppingRule::exit(-1.0, 2.0), 4000, 3, serial_cfg);
  const TestReport b =
      drift_test(spec, StoppingRule::exit(-1.0, 2.0), 4000, 3, parallel_cfg);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.statistic == b.statistic);
}

TEST_CASE("levy batch statistics are scheduling independent") {
  StatConfig s;
  s.dt = 1e-3;
  s.exec = Exec::serial;
  StatConfig p = s;
  p.exec = Exec::parallel;
  const TestReport a = levy_equivalence_test(0.5, 1500, 5, s);
  const TestReport b = levy_equivalence_test(0.5, 1500, 5, p);
  REQUIRE(a.parts.size() == b.parts.size());
  for (std::size_t i = 0; i < a.parts.size(); ++i)
    CHECK(a.parts[i].statistic == b.parts[i].statistic);
}

TEST_CASE("recovery sums are scheduling independent") {
  const MaxMartingaleSpec spec{Variant::max, RealFunction::exp_decay(1.0), 0.0};
  SimConfig sim;
  sim.dt = 1e-3;
  sim.horizon = 1.0;
  const auto a =
      recover_f_batch(spec, 300, 17, sim, {0.2, 0.5}, 0.1, Exec::serial);
  const auto b =
      recover_f_batch(spec, 300, 17, sim, {0.2, 0.5}, 0.1, Exec::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].estimate == b[i].estimate);
    CHECK(a[i].occupancy == b[i].occupancy);
  }
}

TEST_CASE("excursion counts are scheduling independent") {
  StatConfig s;
  s.dt = 5e-4;
  s.exec = Exec::serial;
  StatConfig p = s;
  p.exec = Exec::parallel;
  const TestReport a = excursion_intensity_test(0.5, 1.5, 300, 23, s);
  const TestReport b = excursion_intensity_test(0.5, 1.5, 300, 23, p);
  CHECK(a.parts[0].estimate == b.parts[0].estimate);
  CHECK(a.parts[1].estimate == b.parts[1].estimate);
}
