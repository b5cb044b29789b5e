// Serial vs OpenMP throughput for the path-batch kernels. The parallel
// kernels must reproduce the serial reference bit for bit (counter-based
// streams + index-ordered folds), so each row also cross-checks the fold.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "maxmart/batch.hpp"
#include "maxmart/maxmart.hpp"
#include "maxmart/path.hpp"
#include "maxmart/stats.hpp"
#include "maxmart/stattests.hpp"

using namespace maxmart;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct RowResult {
  double seconds = 0.0;
  double checksum = 0.0;
};

template <class Kernel>
RowResult timed(Exec exec, std::size_t n, Kernel&& kernel) {
  std::vector<double> slots(n);
  const double t0 = now_seconds();
  for_each_path(static_cast<std::int64_t>(n), exec, [&](std::int64_t i) {
    slots[static_cast<std::size_t>(i)] = kernel(static_cast<std::uint64_t>(i));
  });
  double sum = 0.0;
  for (double v : slots) sum += v;  // index-ordered fold
  return {now_seconds() - t0, sum};
}

template <class Kernel>
void report(const char* name, std::size_t n, double work_per_path,
            Kernel&& kernel) {
  const RowResult serial = timed(Exec::serial, n, kernel);
  const RowResult parallel = timed(Exec::parallel, n, kernel);
  const bool same = serial.checksum == parallel.checksum;
  const double steps = static_cast<double>(n) * work_per_path;
  std::printf("%-28s n=%-7zu serial %7.3fs (%6.1f Msteps/s)  omp %7.3fs "
              "(%6.1f Msteps/s)  speedup %4.2fx  fold %s\n",
              name, n, serial.seconds, steps / serial.seconds / 1e6,
              parallel.seconds, steps / parallel.seconds / 1e6,
              serial.seconds / parallel.seconds, same ? "identical" : "DIFFERS");
}

}  // namespace

int main() {
  std::printf("OpenMP: %s, max threads %d\n",
              openmp_enabled() ? "enabled" : "disabled", max_threads());
  const std::uint64_t seed = 12345;

  {
    const double dt = 1e-4;
    const std::size_t steps = 10000;
    report("terminal value B_1", 20000, static_cast<double>(steps),
           [&](std::uint64_t i) {
             BrownianWalker w(seed, i, dt);
             for (std::size_t s = 0; s < steps; ++s) w.advance();
             return w.value();
           });
  }
  {
    const double dt = 1e-4;
    const std::size_t steps = 10000;
    const MaxMartingaleSpec spec{Variant::max, RealFunction::exp_decay(1.0),
                                 0.0};
    report("direct form H_1", 10000, static_cast<double>(steps),
           [&](std::uint64_t i) {
             BrownianWalker w(seed, i, dt);
             DirectEvaluator eval(spec);
             double h = eval.at(0.0, 0.0);
             for (std::size_t s = 0; s < steps; ++s) {
               w.advance();
               h = eval.at(w.value(), w.run_max());
             }
             return h;
           });
  }
  {
    const double dt = 1e-4;
    report("exit time of [-1,2]", 2000, 20000.0 /* mean steps */,
           [&](std::uint64_t i) {
             BrownianWalker w(seed, i, dt);
             const StoppingOutcome out =
                 walk_exit_interval(w, -1.0, 2.0, true, 500000);
             return out.value_at_stop;
           });
  }
  {
    const double dt = 1e-4;
    const std::size_t steps = 10000;
    report("local time L_1", 10000, static_cast<double>(steps),
           [&](std::uint64_t i) {
             BrownianWalker w(seed, i, dt);
             for (std::size_t s = 0; s < steps; ++s) w.advance();
             return w.local_time();
           });
  }
  return 0;
}
