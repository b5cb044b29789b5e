#include "maxmart/path.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace maxmart {

namespace {

// exp(-2 d / dt) is below the smallest uniform the generator can emit once
// 2 d / dt >= 38, so the bridge can never fire there and the exp is skipped.
constexpr double kBridgeLogCutoff = 38.0;

void append_csv_row(std::string& buf, double t, double b, double mx, double mn,
                    double lt) {
  char line[192];
  std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", t, b, mx,
                mn, lt);
  buf += line;
}

}  // namespace

double default_lt_epsilon(double dt) noexcept { return 0.5 * std::sqrt(dt); }

double bridge_crossing_prob(double x1, double x2, double level,
                            double dt) noexcept {
  const double d = (level - x1) * (level - x2);
  if (d <= 0.0) return 1.0;  // grid crossing
  const double e = 2.0 * d / dt;
  if (e >= kBridgeLogCutoff) return 0.0;
  return std::exp(-e);
}

BrownianWalker::BrownianWalker(std::uint64_t seed, std::uint64_t path_index,
                               double dt, double lt_epsilon)
    : dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      eps_(lt_epsilon > 0.0 ? lt_epsilon : default_lt_epsilon(dt)),
      dlt_(0.0),
      increments_(seed, path_index, rng_stream::increments),
      bridge_up_(seed, path_index, rng_stream::bridge_upper),
      bridge_lo_(seed, path_index, rng_stream::bridge_lower) {
  if (!(dt > 0.0)) throw std::invalid_argument("BrownianWalker: dt must be > 0");
  dlt_ = dt_ / (2.0 * eps_);
}

void BrownianWalker::advance() {
  prev_ = value_;
  value_ += sqrt_dt_ * increments_.normal_at(index_);
  ++index_;
  if (value_ > run_max_) run_max_ = value_;
  if (-value_ > run_min_) run_min_ = -value_;
  if (std::fabs(prev_) <= eps_) local_time_ += dlt_;
}

Path simulate_bm(std::uint64_t seed, double horizon, double dt) {
  SimConfig config;
  config.dt = dt;
  config.horizon = horizon;
  return simulate_bm(seed, 0, config);
}

Path simulate_bm(std::uint64_t seed, std::uint64_t path_index,
                 const SimConfig& config) {
  if (!(config.dt > 0.0)) throw std::invalid_argument("simulate_bm: dt must be > 0");
  if (!(config.horizon > 0.0))
    throw std::invalid_argument("simulate_bm: horizon must be > 0");
  const double steps_real = config.horizon / config.dt;
  if (steps_real > static_cast<double>(config.max_nodes))
    throw std::length_error("simulate_bm: step count exceeds configured maximum");
  const std::size_t steps = static_cast<std::size_t>(std::llround(steps_real));
  if (steps + 1 > config.max_nodes)
    throw std::length_error("simulate_bm: step count exceeds configured maximum");

  Path p;
  p.dt = config.dt;
  p.seed = seed;
  p.path_index = path_index;
  p.values.reserve(steps + 1);
  p.running_max.reserve(steps + 1);
  p.running_min.reserve(steps + 1);
  p.local_time.reserve(steps + 1);

  BrownianWalker w(seed, path_index, config.dt, config.lt_epsilon);
  p.values.push_back(0.0);
  p.running_max.push_back(0.0);
  p.running_min.push_back(0.0);
  p.local_time.push_back(0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    w.advance();
    p.values.push_back(w.value());
    p.running_max.push_back(w.run_max());
    p.running_min.push_back(w.run_min());
    p.local_time.push_back(w.local_time());
  }
  return p;
}

Path Path::from_values(double dt, std::vector<double> values,
                       double lt_epsilon) {
  if (!(dt > 0.0)) throw std::invalid_argument("from_values: dt must be > 0");
  if (values.empty() || values.front() != 0.0)
    throw std::invalid_argument("from_values: values must start at 0");
  Path p;
  p.dt = dt;
  p.values = std::move(values);
  const std::size_t n = p.values.size();
  p.running_max.resize(n);
  p.running_min.resize(n);
  p.running_max[0] = 0.0;
  p.running_min[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    p.running_max[i] = std::max(p.running_max[i - 1], p.values[i]);
    p.running_min[i] = std::max(p.running_min[i - 1], -p.values[i]);
  }
  const double eps = lt_epsilon > 0.0 ? lt_epsilon : default_lt_epsilon(dt);
  local_time_zero(p, eps);
  return p;
}

std::vector<double>& local_time_zero(Path& path, double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("local_time_zero: epsilon must be > 0");
  const std::size_t n = path.values.size();
  path.local_time.assign(n, 0.0);
  const double dlt = path.dt / (2.0 * epsilon);
  double acc = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::fabs(path.values[i - 1]) <= epsilon) acc += dlt;
    path.local_time[i] = acc;
  }
  return path.local_time;
}

StoppingOutcome first_hitting(const Path& path, double level,
                              bool bridge_correction) {
  StoppingOutcome out;
  if (path.values.empty()) throw std::invalid_argument("first_hitting: empty path");
  if (level == 0.0) {
    out.kind = StopKind::hit;
    out.index = 0;
    out.time = 0.0;
    out.value_at_stop = 0.0;
    out.max_at_stop = 0.0;
    return out;
  }
  const CounterRng bridge(path.seed, path.path_index,
                          level > 0.0 ? rng_stream::bridge_upper
                                      : rng_stream::bridge_lower);
  const double sign = level > 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    const double v1 = path.values[i];
    if (sign * (v1 - level) >= 0.0) {
      out.kind = StopKind::hit;
      out.index = i;
      out.time = path.dt * static_cast<double>(i);
      out.value_at_stop = v1;
      out.max_at_stop = path.running_max[i];
      return out;
    }
    if (bridge_correction) {
      const double p =
          bridge_crossing_prob(path.values[i - 1], v1, level, path.dt);
      if (p > 0.0 && bridge.uniform_at(i - 1) < p) {
        out.kind = StopKind::hit;
        out.index = i;
        out.time = path.dt * static_cast<double>(i);
        out.value_at_stop = level;
        out.max_at_stop = std::max(path.running_max[i - 1], level);
        return out;
      }
    }
  }
  const std::size_t last = path.values.size() - 1;
  out.kind = StopKind::censored;
  out.index = last;
  out.time = path.dt * static_cast<double>(last);
  out.value_at_stop = path.values[last];
  out.max_at_stop = path.running_max[last];
  return out;
}

StoppingOutcome exit_interval(const Path& path, double lower, double upper,
                              bool bridge_correction) {
  if (!(lower < 0.0 && upper > 0.0))
    throw std::invalid_argument("exit_interval: need lower < 0 < upper");
  const CounterRng up_rng(path.seed, path.path_index, rng_stream::bridge_upper);
  const CounterRng lo_rng(path.seed, path.path_index, rng_stream::bridge_lower);
  StoppingOutcome out;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    const double v0 = path.values[i - 1];
    const double v1 = path.values[i];
    if (v1 >= upper) {
      out.kind = StopKind::exit_upper;
      out.index = i;
      out.time = path.dt * static_cast<double>(i);
      out.value_at_stop = v1;
      out.max_at_stop = path.running_max[i];
      return out;
    }
    if (v1 <= lower) {
      out.kind = StopKind::exit_lower;
      out.index = i;
      out.time = path.dt * static_cast<double>(i);
      out.value_at_stop = v1;
      out.max_at_stop = path.running_max[i];
      return out;
    }
    if (bridge_correction) {
      const double p_up = bridge_crossing_prob(v0, v1, upper, path.dt);
      if (p_up > 0.0 && up_rng.uniform_at(i - 1) < p_up) {
        out.kind = StopKind::exit_upper;
        out.index = i;
        out.time = path.dt * static_cast<double>(i);
        out.value_at_stop = upper;
        out.max_at_stop = upper;
        return out;
      }
      const double p_lo = bridge_crossing_prob(v0, v1, lower, path.dt);
      if (p_lo > 0.0 && lo_rng.uniform_at(i - 1) < p_lo) {
        out.kind = StopKind::exit_lower;
        out.index = i;
        out.time = path.dt * static_cast<double>(i);
        out.value_at_stop = lower;
        out.max_at_stop = path.running_max[i - 1];
        return out;
      }
    }
  }
  const std::size_t last = path.values.size() - 1;
  out.kind = StopKind::censored;
  out.index = last;
  out.time = path.dt * static_cast<double>(last);
  out.value_at_stop = path.values[last];
  out.max_at_stop = path.running_max[last];
  return out;
}

StoppingOutcome walk_first_hitting(BrownianWalker& w, double level,
                                   bool bridge_correction,
                                   std::size_t max_steps) {
  StoppingOutcome out;
  if (level == 0.0) {
    out.kind = StopKind::hit;
    return out;
  }
  const double sign = level > 0.0 ? 1.0 : -1.0;
  for (std::size_t s = 0; s < max_steps; ++s) {
    const double prev_max = w.run_max();
    w.advance();
    const double v1 = w.value();
    if (sign * (v1 - level) >= 0.0) {
      out.kind = StopKind::hit;
      out.index = w.index();
      out.time = w.time();
      out.value_at_stop = v1;
      out.max_at_stop = w.run_max();
      return out;
    }
    if (bridge_correction) {
      const double p = bridge_crossing_prob(w.prev_value(), v1, level, w.dt());
      const double u = level > 0.0 ? w.bridge_upper_u() : w.bridge_lower_u();
      if (p > 0.0 && u < p) {
        out.kind = StopKind::hit;
        out.index = w.index();
        out.time = w.time();
        out.value_at_stop = level;
        out.max_at_stop = std::max(prev_max, level);
        return out;
      }
    }
  }
  out.kind = StopKind::censored;
  out.index = w.index();
  out.time = w.time();
  out.value_at_stop = w.value();
  out.max_at_stop = w.run_max();
  return out;
}

StoppingOutcome walk_exit_interval(BrownianWalker& w, double lower,
                                   double upper, bool bridge_correction,
                                   std::size_t max_steps) {
  if (!(lower < 0.0 && upper > 0.0))
    throw std::invalid_argument("walk_exit_interval: need lower < 0 < upper");
  StoppingOutcome out;
  for (std::size_t s = 0; s < max_steps; ++s) {
    const double prev_max = w.run_max();
    w.advance();
    const double v0 = w.prev_value();
    const double v1 = w.value();
    if (v1 >= upper) {
      out.kind = StopKind::exit_upper;
      out.index = w.index();
      out.time = w.time();
      out.value_at_stop = v1;
      out.max_at_stop = w.run_max();
      return out;
    }
    if (v1 <= lower) {
      out.kind = StopKind::exit_lower;
      out.index = w.index();
      out.time = w.time();
      out.value_at_stop = v1;
      out.max_at_stop = w.run_max();
      return out;
    }
    if (bridge_correction) {
      const double p_up = bridge_crossing_prob(v0, v1, upper, w.dt());
      if (p_up > 0.0 && w.bridge_upper_u() < p_up) {
        out.kind = StopKind::exit_upper;
        out.index = w.index();
        out.time = w.time();
        out.value_at_stop = upper;
        out.max_at_stop = upper;
        return out;
      }
      const double p_lo = bridge_crossing_prob(v0, v1, lower, w.dt());
      if (p_lo > 0.0 && w.bridge_lower_u() < p_lo) {
        out.kind = StopKind::exit_lower;
        out.index = w.index();
        out.time = w.time();
        out.value_at_stop = lower;
        out.max_at_stop = prev_max;
        return out;
      }
    }
  }
  out.kind = StopKind::censored;
  out.index = w.index();
  out.time = w.time();
  out.value_at_stop = w.value();
  out.max_at_stop = w.run_max();
  return out;
}

double sample_hitting_time_exact(double level, std::uint64_t seed) {
  return sample_hitting_time_exact(level, seed, 0);
}

double sample_hitting_time_exact(double level, std::uint64_t seed,
                                 std::uint64_t draw_index) {
  if (level < 0.0)
    throw std::invalid_argument("sample_hitting_time_exact: level must be >= 0");
  if (level == 0.0) return 0.0;
  const CounterRng rng(seed, draw_index, rng_stream::aux);
  double z = rng.normal_at(0);
  if (z == 0.0) z = rng.normal_at(1);
  const double ratio = level / z;
  return ratio * ratio;
}

Path dds_time_change(const Path& path,
                     const std::function<double(double)>& clock) {
  if (path.values.size() < 2)
    throw std::invalid_argument("dds_time_change: input path too short");
  const double horizon = path.horizon();
  const double c0 = clock(0.0);
  if (std::fabs(c0) > 1e-12)
    throw std::domain_error("dds_time_change: clock(0) must be 0");

  const double dt = path.dt;
  const std::size_t max_nodes = SimConfig{}.max_nodes;
  std::vector<double> clocks;
  clocks.push_back(0.0);
  for (std::size_t i = 1;; ++i) {
    const double c = clock(dt * static_cast<double>(i));
    if (c < clocks.back() - 1e-12)
      throw std::domain_error("dds_time_change: clock must be nondecreasing");
    if (c > horizon * (1.0 + 1e-12)) break;
    clocks.push_back(c);
    if (clocks.size() > max_nodes)
      throw std::length_error(
          "dds_time_change: output node count exceeds the configured maximum");
  }
  if (clocks.size() < 2)
    throw std::domain_error("dds_time_change: clock exceeds input horizon");

  Path out;
  out.dt = dt;
  out.seed = path.seed;
  out.path_index = path.path_index;
  const std::size_t n = clocks.size();
  out.values.resize(n);
  out.running_max.resize(n);
  out.running_min.resize(n);
  out.local_time.resize(n);
  const std::size_t last_in = path.values.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = static_cast<std::size_t>(std::llround(clocks[i] / dt));
    if (idx > last_in) idx = last_in;
    out.values[i] = path.values[idx];
  }
  out.running_max[0] = 0.0;
  out.running_min[0] = 0.0;
  out.local_time[0] = 0.0;
  const double eps = default_lt_epsilon(dt);
  for (std::size_t i = 1; i < n; ++i) {
    out.running_max[i] = std::max(out.running_max[i - 1], out.values[i]);
    out.running_min[i] = std::max(out.running_min[i - 1], -out.values[i]);
    const double dclock = clocks[i] - clocks[i - 1];
    out.local_time[i] =
        out.local_time[i - 1] +
        (std::fabs(out.values[i - 1]) <= eps ? dclock / (2.0 * eps) : 0.0);
  }
  return out;
}

void export_path_csv(const Path& path, std::ostream& out) {
  std::string buf;
  buf.reserve(64 * path.values.size() + 16);
  buf += "t,B,max,min,L\n";
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    append_csv_row(buf, path.dt * static_cast<double>(i), path.values[i],
                   path.running_max[i], path.running_min[i],
                   path.local_time[i]);
  }
  out << buf;
}

}  // namespace maxmart
