#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "maxmart/rng.hpp"

namespace maxmart {

// Default local-time occupation bandwidth: eps = sqrt(dt)/2.
double default_lt_epsilon(double dt) noexcept;

struct SimConfig {
  double dt = 1e-4;
  double horizon = 1.0;
  double lt_epsilon = -1.0;              // < 0 means sqrt(dt)/2
  std::size_t max_nodes = (std::size_t{1} << 24);
};

// A discretized Brownian path with its running statistics. Immutable after
// construction apart from local_time_zero(), which re-estimates the
// occupation local time at a caller-chosen bandwidth.
struct Path {
  double dt = 0.0;
  std::uint64_t seed = 0;        // root seed of the batch
  std::uint64_t path_index = 0;  // index within the batch
  std::vector<double> values;       // B at grid nodes, values[0] = 0
  std::vector<double> running_max;  // sup_{s<=t} B_s
  std::vector<double> running_min;  // -inf_{s<=t} B_s  (>= 0)
  std::vector<double> local_time;   // occupation estimate of L at 0

  std::size_t nodes() const noexcept { return values.size(); }
  double horizon() const noexcept {
    return values.empty() ? 0.0 : dt * static_cast<double>(values.size() - 1);
  }

  // Builds a synthetic path from explicit node values (tests, time changes).
  static Path from_values(double dt, std::vector<double> values,
                          double lt_epsilon = -1.0);
};

Path simulate_bm(std::uint64_t seed, double horizon, double dt);
Path simulate_bm(std::uint64_t seed, std::uint64_t path_index,
                 const SimConfig& config);

// Occupation-density estimate (1/2eps) * sum over steps of
// 1{|B| <= eps} * dt, left endpoints. Overwrites path.local_time.
std::vector<double>& local_time_zero(Path& path, double epsilon);

enum class StopKind { hit, exit_lower, exit_upper, censored };

struct StoppingOutcome {
  StopKind kind = StopKind::censored;
  double time = 0.0;
  std::size_t index = 0;
  double value_at_stop = 0.0;
  double max_at_stop = 0.0;
};

// First passage to `level`. With bridge_correction, crossings between grid
// nodes fire with the Brownian-bridge probability exp(-2(a-x1)(a-x2)/dt);
// the reported value is then the level itself.
StoppingOutcome first_hitting(const Path& path, double level,
                              bool bridge_correction);

// First exit from [lower, upper], lower < 0 < upper.
StoppingOutcome exit_interval(const Path& path, double lower, double upper,
                              bool bridge_correction);

// Exact draw of T_level = inf{t : B_t = level} via level^2 / Z^2.
double sample_hitting_time_exact(double level, std::uint64_t seed);
double sample_hitting_time_exact(double level, std::uint64_t seed,
                                 std::uint64_t draw_index);

// Dambis-Dubins-Schwarz style deterministic time change: output node i takes
// the input value at clock(i*dt) (nearest node). Running max/min are
// recomputed from the output values; the local time is re-accumulated with
// d<N> = clock increments, which is the occupation formula for the
// time-changed process.
Path dds_time_change(const Path& path,
                     const std::function<double(double)>& clock);

// P(bridge from x1 to x2 over dt touches `level`), given no grid crossing.
double bridge_crossing_prob(double x1, double x2, double level,
                            double dt) noexcept;

// Incremental single-path simulator; the batch kernels use this instead of
// storing full paths. Consumes the same random stream as simulate_bm, so a
// walker and a stored path with equal (seed, path_index, dt) agree node by
// node, bit for bit.
class BrownianWalker {
 public:
  BrownianWalker(std::uint64_t seed, std::uint64_t path_index, double dt,
                 double lt_epsilon = -1.0);

  void advance();

  // Jumps the current value (level-traversal kernels use this to cut capped
  // drawdowns); running statistics are left as they are.
  void teleport_to(double v) noexcept {
    value_ = v;
    prev_ = v;
  }

  double dt() const noexcept { return dt_; }
  std::size_t index() const noexcept { return index_; }
  double time() const noexcept { return dt_ * static_cast<double>(index_); }
  double value() const noexcept { return value_; }
  double prev_value() const noexcept { return prev_; }
  double run_max() const noexcept { return run_max_; }
  double run_min() const noexcept { return run_min_; }
  double local_time() const noexcept { return local_time_; }
  double lt_epsilon() const noexcept { return eps_; }

  // Bridge uniforms of the step that ended at the current node.
  double bridge_upper_u() const noexcept {
    return bridge_up_.uniform_at(index_ - 1);
  }
  double bridge_lower_u() const noexcept {
    return bridge_lo_.uniform_at(index_ - 1);
  }

 private:
  double dt_, sqrt_dt_, eps_, dlt_;
  double value_ = 0.0, prev_ = 0.0;
  double run_max_ = 0.0, run_min_ = 0.0, local_time_ = 0.0;
  std::size_t index_ = 0;
  CounterRng increments_, bridge_up_, bridge_lo_;
};

// Streaming stopping rules over a fresh walker (same semantics as the
// Path-based operations).
StoppingOutcome walk_first_hitting(BrownianWalker& w, double level,
                                   bool bridge_correction,
                                   std::size_t max_steps);
StoppingOutcome walk_exit_interval(BrownianWalker& w, double lower,
                                   double upper, bool bridge_correction,
                                   std::size_t max_steps);

// CSV export: header "t,B,max,min,L", one row per node.
void export_path_csv(const Path& path, std::ostream& out);

}  // namespace maxmart
