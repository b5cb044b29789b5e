#include "maxmart/stattests.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace maxmart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t fnv1a(const std::string& s) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

TestReport z_report(std::string name, double estimate, double reference,
                    double std_error, double threshold, std::size_t n,
                    std::uint64_t seed) {
  TestReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.reference = reference;
  r.std_error = std_error;
  r.threshold = threshold;
  r.n = n;
  r.seed = seed;
  if (std_error > 0.0)
    r.statistic = (estimate - reference) / std_error;
  else
    r.statistic = (estimate == reference) ? 0.0 : kInf;
  r.verdict = std::fabs(r.statistic) <= threshold ? Verdict::pass : Verdict::fail;
  return r;
}

TestReport ks_report(std::string name, double d, double threshold,
                     std::size_t n, std::uint64_t seed) {
  TestReport r;
  r.name = std::move(name);
  r.estimate = d;
  r.reference = 0.0;
  r.statistic = d;
  r.threshold = threshold;
  r.n = n;
  r.seed = seed;
  r.verdict = d <= threshold ? Verdict::pass : Verdict::fail;
  return r;
}

// Normalized badness of a part: <= 1 iff the part passes.
double part_ratio(const TestReport& p) {
  const double s = std::fabs(p.statistic);
  if (p.rejection) {
    if (s == 0.0) return kInf;
    return p.threshold / s;
  }
  if (p.threshold > 0.0) return s / p.threshold;
  return s == 0.0 ? 0.0 : kInf;
}

TestReport compose(std::string name, std::vector<TestReport> parts,
                   std::uint64_t seed) {
  TestReport r;
  r.name = std::move(name);
  r.seed = seed;
  r.threshold = 1.0;
  r.statistic = 0.0;
  r.verdict = Verdict::pass;
  for (const auto& p : parts) {
    r.statistic = std::max(r.statistic, part_ratio(p));
    r.n = std::max(r.n, p.n);
    if (p.verdict == Verdict::fail) r.verdict = Verdict::fail;
    if (p.verdict == Verdict::inconclusive && r.verdict != Verdict::fail)
      r.verdict = Verdict::inconclusive;
  }
  if (!parts.empty()) {
    r.estimate = parts.front().estimate;
    r.reference = parts.front().reference;
    r.std_error = parts.front().std_error;
  }
  r.parts = std::move(parts);
  return r;
}

TestReport inconclusive_report(std::string name, std::string why,
                               std::uint64_t seed) {
  TestReport r;
  r.name = std::move(name) + " (" + std::move(why) + ")";
  r.seed = seed;
  r.verdict = Verdict::inconclusive;
  return r;
}

double h_at_walker(DirectEvaluator& eval, Variant variant,
                   const BrownianWalker& w) {
  switch (variant) {
    case Variant::max:
      return eval.at(w.value(), w.run_max());
    case Variant::min:
      return eval.at(-w.value(), w.run_min());
    case Variant::local_time:
      return eval.at(w.local_time() - std::fabs(w.value()), w.local_time());
  }
  return 0.0;
}

std::size_t steps_for(double t, double dt) {
  return static_cast<std::size_t>(std::llround(t / dt));
}

}  // namespace

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

StoppingRule StoppingRule::exit(double lower, double upper, bool bridge) {
  StoppingRule r;
  r.kind = Kind::exit_interval;
  r.lower = lower;
  r.upper = upper;
  r.bridge = bridge;
  return r;
}

StoppingRule StoppingRule::fixed(double t) {
  StoppingRule r;
  r.kind = Kind::fixed_time;
  r.t = t;
  return r;
}

std::string StoppingRule::label() const {
  std::ostringstream os;
  if (kind == Kind::exit_interval)
    os << "exit[" << lower << "," << upper << "]";
  else
    os << "T=" << t;
  return os.str();
}

MaxMartingaleSpec step5_spec(const RealFunction& f) {
  const double norm = total_integral(f);
  if (!std::isfinite(norm))
    throw std::invalid_argument("step5_spec: total integral of f diverges");
  return MaxMartingaleSpec{Variant::max, f.scaled(-1.0), norm};
}

nlohmann::json TestReport::to_json() const {
  nlohmann::json j{{"name", name},
                   {"estimate", estimate},
                   {"reference", reference},
                   {"std_error", std_error},
                   {"statistic", statistic},
                   {"threshold", threshold},
                   {"n", n},
                   {"seed", seed},
                   {"verdict", to_string(verdict)}};
  if (rejection) j["rejection"] = true;
  // wall time varies run to run; it belongs to the summary table, not to the
  // reproducible report artifact
  if (!parts.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : parts) arr.push_back(p.to_json());
    j["parts"] = arr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// drift_test
// ---------------------------------------------------------------------------

TestReport drift_test(const MaxMartingaleSpec& spec, const StoppingRule& stop,
                      std::size_t n, std::uint64_t seed,
                      const StatConfig& cfg) {
  Timer timer;
  struct Slot {
    double h = 0.0;
    unsigned char censored = 0;
  };
  std::vector<Slot> slots(n);
  const std::size_t max_steps =
      std::min(steps_for(cfg.horizon, cfg.dt), cfg.max_steps_per_path);
  const std::size_t fixed_steps =
      stop.kind == StoppingRule::Kind::fixed_time ? steps_for(stop.t, cfg.dt)
                                                  : 0;

  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    BrownianWalker w(seed, static_cast<std::uint64_t>(i), cfg.dt);
    DirectEvaluator eval(spec);
    Slot s;
    if (stop.kind == StoppingRule::Kind::fixed_time) {
      for (std::size_t k = 0; k < fixed_steps; ++k) w.advance();
      s.h = h_at_walker(eval, spec.variant, w);
    } else {
      const StoppingOutcome out =
          walk_exit_interval(w, stop.lower, stop.upper, stop.bridge, max_steps);
      if (out.kind == StopKind::censored) {
        s.censored = 1;
      } else if (spec.variant == Variant::max) {
        // Boundary-exact stop values from the bridge-corrected detector.
        s.h = eval.at(out.value_at_stop, out.max_at_stop);
      } else {
        s.h = h_at_walker(eval, spec.variant, w);
      }
    }
    slots[static_cast<std::size_t>(i)] = s;
  });

  MeanAccumulator acc;
  std::size_t censored = 0;
  for (const Slot& s : slots) {
    if (s.censored)
      ++censored;
    else
      acc.add(s.h);
  }
  const std::string name = "drift[" + spec.label() + "," + stop.label() + "]";
  const double cens_frac =
      static_cast<double>(censored) / static_cast<double>(n);
  if (cens_frac > cfg.censored_cap) {
    TestReport r = inconclusive_report(name, "censored fraction too high", seed);
    r.estimate = cens_frac;
    r.wall_seconds = timer.seconds();
    return r;
  }
  TestReport r = z_report(name, acc.mean(), spec.c, acc.std_error(),
                          cfg.z_threshold, acc.count(), seed);
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// exit_max_law_test
// ---------------------------------------------------------------------------

std::pair<std::vector<ExitLawSample>, TestReport> exit_max_law_run(
    double x, double y, std::size_t n, std::uint64_t seed,
    const StatConfig& cfg) {
  if (!(x > 0.0 && y > 0.0))
    throw std::invalid_argument("exit_max_law: need x, y > 0");
  Timer timer;
  struct Slot {
    unsigned char kind = 2;  // 0 lower, 1 upper, 2 censored
    double maxv = 0.0;
  };
  std::vector<Slot> slots(n);
  const std::size_t max_steps =
      std::min(steps_for(cfg.horizon, cfg.dt), cfg.max_steps_per_path);

  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    BrownianWalker w(seed, static_cast<std::uint64_t>(i), cfg.dt);
    const StoppingOutcome out = walk_exit_interval(w, -x, y, true, max_steps);
    Slot s;
    if (out.kind == StopKind::exit_upper) {
      s.kind = 1;
      s.maxv = y;  // the continuous path's max at the stop is exactly y
    } else if (out.kind == StopKind::exit_lower) {
      s.kind = 0;
      s.maxv = std::min(out.max_at_stop, y);
    }
    slots[static_cast<std::size_t>(i)] = s;
  });

  std::vector<ExitLawSample> samples;
  samples.reserve(n);
  std::vector<double> lower_max;
  std::size_t n_up = 0, n_lo = 0, censored = 0;
  for (const Slot& s : slots) {
    if (s.kind == 2) {
      ++censored;
      continue;
    }
    ExitLawSample smp;
    smp.side = s.kind == 1 ? StopKind::exit_upper : StopKind::exit_lower;
    smp.max_value = s.maxv;
    samples.push_back(smp);
    if (s.kind == 1)
      ++n_up;
    else {
      ++n_lo;
      lower_max.push_back(s.maxv);
    }
  }

  const std::string name = "exit_max_law[x=" + std::to_string(x) +
                           ",y=" + std::to_string(y) + "]";
  const double cens_frac =
      static_cast<double>(censored) / static_cast<double>(n);
  if (cens_frac > cfg.censored_cap || n_lo < 100) {
    TestReport r = inconclusive_report(name, "insufficient exits", seed);
    r.wall_seconds = timer.seconds();
    return {std::move(samples), std::move(r)};
  }

  const double p_ref = x / (x + y);
  const std::size_t n_eff = n_up + n_lo;
  const double p_hat = static_cast<double>(n_up) / static_cast<double>(n_eff);
  const double se =
      std::sqrt(p_ref * (1.0 - p_ref) / static_cast<double>(n_eff));
  TestReport freq = z_report("upper_exit_frequency", p_hat, p_ref, se,
                             cfg.z_threshold, n_eff, seed);

  const auto cdf = [x, y](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= y) return 1.0;
    return s * (x + y) / (y * (s + x));
  };
  const double d = ks_statistic(lower_max, cdf);
  TestReport ks = ks_report("lower_exit_max_ks", d,
                            ks_threshold(n_lo, cfg.ks_const), n_lo, seed);

  TestReport r = compose(name, {std::move(freq), std::move(ks)}, seed);
  r.wall_seconds = timer.seconds();
  return {std::move(samples), std::move(r)};
}

TestReport exit_max_law_test(double x, double y, std::size_t n,
                             std::uint64_t seed, const StatConfig& cfg) {
  return exit_max_law_run(x, y, n, seed, cfg).second;
}

// ---------------------------------------------------------------------------
// levy_equivalence_test
// ---------------------------------------------------------------------------

TestReport levy_equivalence_test(double t, std::size_t n, std::uint64_t seed,
                                 const StatConfig& cfg) {
  Timer timer;
  const std::string name = "levy_equivalence[t=" + std::to_string(t) + "]";
  if (t < 10.0 * cfg.dt)
    return inconclusive_report(name, "t below 10*dt, all samples degenerate",
                               seed);
  const std::size_t steps = steps_for(t, cfg.dt);
  const std::uint64_t seed_a = derive_seed(seed, 1);
  const std::uint64_t seed_b = derive_seed(seed, 2);

  struct SlotA {
    double mx = 0.0, gap = 0.0;
  };
  struct SlotB {
    double lt = 0.0, ab = 0.0;
  };
  std::vector<SlotA> slots_a(n);
  std::vector<SlotB> slots_b(n);

  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    BrownianWalker w(seed_a, static_cast<std::uint64_t>(i), cfg.dt);
    for (std::size_t k = 0; k < steps; ++k) w.advance();
    slots_a[static_cast<std::size_t>(i)] = {w.run_max(),
                                            w.run_max() - w.value()};
  });
  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    BrownianWalker w(seed_b, static_cast<std::uint64_t>(i), cfg.dt);
    for (std::size_t k = 0; k < steps; ++k) w.advance();
    slots_b[static_cast<std::size_t>(i)] = {w.local_time(),
                                            std::fabs(w.value())};
  });

  std::vector<double> max_a(n), gap_a(n), lt_b(n), abs_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    max_a[i] = slots_a[i].mx;
    gap_a[i] = slots_a[i].gap;
    lt_b[i] = slots_b[i].lt;
    abs_b[i] = slots_b[i].ab;
  }

  const double thr2 = ks_threshold(n, n, cfg.ks_const);
  TestReport p1 = ks_report("ks2[max_t vs L_t]", ks_statistic(max_a, lt_b),
                            thr2, n, seed);
  TestReport p2 = ks_report("ks2[(max-B)_t vs |B|_t]",
                            ks_statistic(gap_a, abs_b), thr2, n, seed);
  const double sqrt_t = std::sqrt(t);
  TestReport p3 = ks_report(
      "ks1[max_t vs half-normal]",
      ks_statistic(max_a, [sqrt_t](double s) {
        return half_normal_cdf(s / sqrt_t);
      }),
      ks_threshold(n, cfg.ks_const), n, seed);

  TestReport r =
      compose(name, {std::move(p1), std::move(p2), std::move(p3)}, seed);
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// subordinator_laplace_test
// ---------------------------------------------------------------------------

TestReport subordinator_laplace_test(const RealFunction& f, double x,
                                     std::size_t n, std::uint64_t seed,
                                     const StatConfig& cfg) {
  if (!(x > 0.0))
    throw std::invalid_argument("subordinator_laplace_test: x must be > 0");
  if (f.singular_at_zero())
    throw std::invalid_argument(
        "subordinator_laplace_test: f must be bounded on [0, x]");
  Timer timer;
  const std::size_t m = cfg.subordinator_grid;
  const double du = x / static_cast<double>(m);
  std::vector<double> f2(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double v = evaluate(f, du * static_cast<double>(k));
    f2[k] = v * v;
  }
  const double total_abs =
      f.nonnegative() ? antiderivative_at(f, x)
                      : adaptive_simpson(
                            [&f](double u) { return std::fabs(evaluate(f, u)); },
                            0.0, x, 1e-10);
  const double reference = std::exp(-std::fabs(total_abs));

  std::vector<double> slots(n);
  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    const CounterRng rng(seed, static_cast<std::uint64_t>(i),
                         rng_stream::subordinator);
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (f2[k] == 0.0) continue;  // skip 0 * (possibly huge) increments
      double z = rng.normal_at(k);
      if (z == 0.0) z = rng.normal_at(m + k);
      const double r = du / z;
      sum += f2[k] * (r * r);
    }
    slots[static_cast<std::size_t>(i)] = std::exp(-0.5 * sum);
  });

  MeanAccumulator acc;
  for (double v : slots) acc.add(v);
  TestReport r = z_report("subordinator_laplace[" + f.label() +
                              ",x=" + std::to_string(x) + "]",
                          acc.mean(), reference, acc.std_error(),
                          cfg.z_threshold, n, seed);
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// excursion_intensity_test
// ---------------------------------------------------------------------------

namespace {

struct ExcursionBatch {
  MeanAccumulator counts;
  std::size_t unreached = 0;
};

// Counts excursions of (max - B) deeper than v0 until the running max
// reaches y_max. Once an excursion is counted its remainder cannot change
// the count or the max, so the walker teleports back to the max level; by
// the strong Markov property the counted point process is unchanged while
// the heavy-tailed excursion tails never get simulated.
ExcursionBatch run_excursion_batch(double v0, double y_max, std::size_t n,
                                   std::uint64_t seed, const StatConfig& cfg) {
  struct Slot {
    double count = 0.0;
    unsigned char unreached = 0;
  };
  std::vector<Slot> slots(n);
  const double time_cap = 400.0 * (v0 + 1.0) * y_max;
  const std::size_t max_steps =
      std::min(steps_for(time_cap, cfg.dt), cfg.max_steps_per_path);

  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    BrownianWalker w(seed, static_cast<std::uint64_t>(i), cfg.dt);
    double m = 0.0;
    bool counted = false;
    long count = 0;
    bool reached = false;
    for (std::size_t s = 0; s < max_steps; ++s) {
      w.advance();
      const double v = w.value();
      if (v > m) {
        m = v;  // strict increase of the max ends the excursion
        counted = false;
        if (m >= y_max) {
          reached = true;
          break;
        }
      } else if (m - v > v0) {
        if (!counted) {
          ++count;
          counted = true;
        }
        w.teleport_to(m);
      }
    }
    slots[static_cast<std::size_t>(i)] = {static_cast<double>(count),
                                          reached ? static_cast<unsigned char>(0)
                                                  : static_cast<unsigned char>(1)};
  });

  ExcursionBatch out;
  for (const Slot& s : slots) {
    if (s.unreached)
      ++out.unreached;
    else
      out.counts.add(s.count);
  }
  return out;
}

}  // namespace

TestReport excursion_intensity_test(double v0, double y_max, std::size_t n,
                                    std::uint64_t seed,
                                    const StatConfig& cfg) {
  if (!(v0 > 0.0 && y_max > 0.0))
    throw std::invalid_argument("excursion_intensity_test: need v0, y_max > 0");
  Timer timer;
  const std::string name = "excursion_intensity[v0=" + std::to_string(v0) +
                           ",y_max=" + std::to_string(y_max) + "]";
  const ExcursionBatch batch = run_excursion_batch(v0, y_max, n, seed, cfg);
  if (static_cast<double>(batch.unreached) / static_cast<double>(n) >
      cfg.censored_cap)
    return inconclusive_report(name, "max failed to reach y_max", seed);

  const double reference = y_max / v0;
  TestReport mean_part =
      z_report("mean_count", batch.counts.mean(), reference,
               batch.counts.std_error(), cfg.z_threshold, batch.counts.count(),
               seed);

  const double dispersion =
      batch.counts.mean() > 0.0 ? batch.counts.variance() / batch.counts.mean()
                                : 1.0;
  TestReport disp;
  disp.name = "poisson_dispersion";
  disp.estimate = dispersion;
  disp.reference = 1.0;
  disp.statistic = dispersion - 1.0;
  disp.threshold = 0.5 * (cfg.dispersion_hi - cfg.dispersion_lo);
  disp.n = batch.counts.count();
  disp.seed = seed;
  disp.verdict = (dispersion >= cfg.dispersion_lo &&
                  dispersion <= cfg.dispersion_hi)
                     ? Verdict::pass
                     : Verdict::fail;

  TestReport r = compose(name, {std::move(mean_part), std::move(disp)}, seed);
  r.wall_seconds = timer.seconds();
  return r;
}

TestReport excursion_halving_test(double v0, double y_max, std::size_t n,
                                  std::uint64_t seed, const StatConfig& cfg) {
  Timer timer;
  const std::string name = "excursion_halving[v0=" + std::to_string(v0) + "]";
  const ExcursionBatch b1 =
      run_excursion_batch(v0, y_max, n, derive_seed(seed, 1), cfg);
  const ExcursionBatch b2 =
      run_excursion_batch(2.0 * v0, y_max, n, derive_seed(seed, 2), cfg);
  if (static_cast<double>(b1.unreached + b2.unreached) /
          static_cast<double>(2 * n) >
      cfg.censored_cap)
    return inconclusive_report(name, "max failed to reach y_max", seed);
  const double se = std::sqrt(b2.counts.std_error() * b2.counts.std_error() +
                              0.25 * b1.counts.std_error() *
                                  b1.counts.std_error());
  TestReport r = z_report(name, b2.counts.mean(), 0.5 * b1.counts.mean(), se,
                          cfg.z_threshold, b2.counts.count(), seed);
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// bplus_constancy_test
// ---------------------------------------------------------------------------

const std::function<double(double, double)>& builtin_h(
    const std::string& name) {
  static const std::map<std::string, std::function<double(double, double)>>
      registry = {
          {"x", [](double x, double) { return x; }},
          {"y", [](double, double y) { return y; }},
          {"x2", [](double x, double) { return x * x; }},
          {"const", [](double, double) { return 7.0; }},
      };
  const auto it = registry.find(name);
  if (it == registry.end())
    throw std::invalid_argument("builtin_h: unknown surface '" + name + "'");
  return it->second;
}

TestReport bplus_constancy_test(
    const std::function<double(double, double)>& h, const std::string& h_label,
    std::size_t n, std::uint64_t seed, const StatConfig& cfg) {
  // Probe for constancy on a handful of points of R+ x R+.
  {
    const double probes[][2] = {{0.0, 0.0}, {0.3, 0.5}, {0.0, 1.0},
                                {0.8, 1.2}, {0.1, 0.4}, {1.5, 2.0}};
    double lo = kInf, hi = -kInf;
    for (const auto& p : probes) {
      const double v = h(p[0], p[1]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::fabs(hi)))
      throw std::domain_error(
          "bplus_constancy_test: h is constant, nothing to reject");
  }

  Timer timer;
  const double h00 = h(0.0, 0.0);
  const double t = 1.0;
  const std::size_t fixed_steps = steps_for(t, cfg.dt);
  const std::size_t max_steps =
      std::min(steps_for(cfg.horizon, cfg.dt), cfg.max_steps_per_path);

  // Slot: h on the three reflected triples at fixed t, plus h(B+, max) at an
  // exit time.
  struct Slot {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    unsigned char censored = 0;
  };
  std::vector<Slot> slots(n);
  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    Slot s;
    {
      BrownianWalker w(seed, static_cast<std::uint64_t>(i), cfg.dt);
      for (std::size_t k = 0; k < fixed_steps; ++k) w.advance();
      const double v = w.value();
      s.a = h(std::max(v, 0.0), w.run_max());
      s.b = h(std::max(-v, 0.0), w.run_min());
      s.c = h(std::fabs(v), std::max(w.run_max(), w.run_min()));
    }
    {
      BrownianWalker w(derive_seed(seed, 7), static_cast<std::uint64_t>(i),
                       cfg.dt);
      const StoppingOutcome out = walk_exit_interval(w, -1.0, 2.0, true,
                                                     max_steps);
      if (out.kind == StopKind::censored)
        s.censored = 1;
      else
        s.d = h(std::max(out.value_at_stop, 0.0), out.max_at_stop);
    }
    slots[static_cast<std::size_t>(i)] = s;
  });

  MeanAccumulator aa, ab, ac, ad;
  std::size_t censored = 0;
  for (const Slot& s : slots) {
    aa.add(s.a);
    ab.add(s.b);
    ac.add(s.c);
    if (s.censored)
      ++censored;
    else
      ad.add(s.d);
  }
  const std::string name = "reflected_constancy[h=" + h_label + "]";
  if (static_cast<double>(censored) / static_cast<double>(n) >
      cfg.censored_cap)
    return inconclusive_report(name, "censored fraction too high", seed);

  auto rejection_part = [&](const char* label, const MeanAccumulator& acc) {
    TestReport p = z_report(label, acc.mean(), h00, acc.std_error(),
                            cfg.rejection_threshold, acc.count(), seed);
    p.rejection = true;
    p.verdict = std::fabs(p.statistic) > p.threshold ? Verdict::pass
                                                     : Verdict::fail;
    return p;
  };
  TestReport p1 = rejection_part("h(B+,max) at t=1", aa);
  TestReport p2 = rejection_part("h(B-,min) at t=1", ab);
  TestReport p3 = rejection_part("h(|B|,B*) at t=1", ac);
  TestReport p4 = rejection_part("h(B+,max) at exit[-1,2]", ad);

  TestReport r = compose(name, {std::move(p1), std::move(p2), std::move(p3),
                                std::move(p4)},
                         seed);
  r.rejection = true;
  // Composite statistic for a rejection battery: the weakest |z|.
  double min_z = kInf;
  for (const auto& p : r.parts) min_z = std::min(min_z, std::fabs(p.statistic));
  r.statistic = min_z;
  r.threshold = cfg.rejection_threshold;
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// convergence_test
// ---------------------------------------------------------------------------

TestReport convergence_test(const MaxMartingaleSpec& spec,
                            const std::vector<double>& horizons, std::size_t n,
                            std::uint64_t seed, const StatConfig& cfg) {
  if (horizons.size() < 2)
    throw std::invalid_argument("convergence_test: need at least two horizons");
  for (std::size_t k = 1; k < horizons.size(); ++k)
    if (!(horizons[k] > horizons[k - 1]))
      throw std::invalid_argument("convergence_test: horizons must increase");
  const double limit = terminal_limit(spec);  // throws if hypotheses fail

  Timer timer;
  const std::size_t nh = horizons.size();
  std::vector<std::size_t> node(nh);
  for (std::size_t k = 0; k < nh; ++k) node[k] = steps_for(horizons[k], cfg.dt);

  std::vector<double> errs(n * nh, 0.0);
  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    BrownianWalker w(seed, static_cast<std::uint64_t>(i), cfg.dt);
    DirectEvaluator eval(spec);
    std::size_t next = 0;
    if (node[0] == 0) {
      errs[static_cast<std::size_t>(i) * nh] =
          std::fabs(eval.at(0.0, 0.0) - limit);
      ++next;
    }
    const std::size_t last = node.back();
    for (std::size_t s = 1; s <= last; ++s) {
      w.advance();
      while (next < nh && node[next] == s) {
        errs[static_cast<std::size_t>(i) * nh + next] =
            std::fabs(h_at_walker(eval, spec.variant, w) - limit);
        ++next;
      }
    }
  });

  std::vector<MeanAccumulator> acc(nh);
  std::vector<double> medians(nh);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < nh; ++k) acc[k].add(errs[i * nh + k]);
  for (std::size_t k = 0; k < nh; ++k) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = errs[i * nh + k];
    medians[k] = sample_median(std::move(col));
  }

  std::vector<TestReport> parts;
  const double initial = acc.front().mean();
  for (std::size_t k = 0; k < nh; ++k) {
    TestReport p;
    p.name = "E|H_T - limit| at T=" + std::to_string(horizons[k]);
    p.estimate = acc[k].mean();
    p.reference = 0.0;
    p.std_error = acc[k].std_error();
    p.n = n;
    p.seed = seed;
    if (k == 0) {
      p.statistic = 0.0;
      p.threshold = 0.0;
      p.verdict = Verdict::pass;
    } else {
      // KS-styled signed check: the error sequence must not increase.
      const double scale = initial > 0.0 ? initial : 1.0;
      p.statistic = (acc[k].mean() - acc[k - 1].mean()) / scale;
      p.threshold = 0.0;
      p.verdict = p.statistic <= 0.0 ? Verdict::pass : Verdict::fail;
    }
    parts.push_back(std::move(p));
  }
  {
    TestReport p;
    p.name = "final_vs_initial_fraction";
    p.estimate = acc.back().mean();
    p.reference = 0.0;
    p.statistic = initial > 0.0 ? acc.back().mean() / initial : 0.0;
    p.threshold = cfg.convergence_final_fraction;
    p.n = n;
    p.seed = seed;
    p.verdict = p.statistic <= p.threshold ? Verdict::pass : Verdict::fail;
    parts.push_back(std::move(p));
  }
  // Informational rows: the pathwise (a.s.) convergence shows up in the
  // medians even when the means stay put, since these local martingales
  // need not converge in L1.
  for (std::size_t k = 0; k < nh; ++k) {
    TestReport p;
    p.name = "diagnostic: median |H_T - limit| at T=" +
             std::to_string(horizons[k]);
    p.estimate = medians[k];
    p.reference = 0.0;
    p.statistic = 0.0;
    p.threshold = 0.0;
    p.n = n;
    p.seed = seed;
    p.verdict = Verdict::pass;
    parts.push_back(std::move(p));
  }

  TestReport r =
      compose("convergence[" + spec.label() + "]", std::move(parts), seed);
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// two-form tests
// ---------------------------------------------------------------------------

namespace {

// Max node gap between the direct and integral forms along one path.
double max_two_form_gap(const MaxMartingaleSpec& spec, std::uint64_t seed,
                        std::uint64_t path, double dt, std::size_t steps) {
  BrownianWalker w(seed, path, dt);
  DirectEvaluator eval(spec);
  double acc = spec.c;
  double direct = eval.at(0.0, 0.0);
  double worst = std::fabs(direct - acc);
  for (std::size_t s = 0; s < steps; ++s) {
    const double stat0 = w.run_max();
    const double v0 = w.value();
    const double slope = eval.slope_at(stat0);
    w.advance();
    acc += slope * (w.value() - v0);
    direct = eval.at(w.value(), w.run_max());
    worst = std::max(worst, std::fabs(direct - acc));
  }
  return worst;
}

}  // namespace

TestReport two_form_rate_test(const RealFunction& f, double dt_coarse,
                              std::size_t n, std::uint64_t seed,
                              const StatConfig& cfg) {
  Timer timer;
  const MaxMartingaleSpec spec{Variant::max, f, 0.0};
  const double horizon = 1.0;
  auto median_gap = [&](double dt) {
    std::vector<double> gaps(n);
    const std::size_t steps = steps_for(horizon, dt);
    for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
      gaps[static_cast<std::size_t>(i)] = max_two_form_gap(
          spec, seed, static_cast<std::uint64_t>(i), dt, steps);
    });
    return sample_median(std::move(gaps));
  };
  const double med_coarse = median_gap(dt_coarse);
  const double med_fine = median_gap(0.5 * dt_coarse);
  const double ratio = med_coarse / med_fine;

  TestReport r;
  r.name = "two_form_rate[" + f.label() + "]";
  r.estimate = ratio;
  r.reference = std::sqrt(2.0);
  r.statistic = ratio - 1.45;  // pass band [1.25, 1.65]
  r.threshold = 0.20;
  r.n = n;
  r.seed = seed;
  r.verdict =
      std::fabs(r.statistic) <= r.threshold ? Verdict::pass : Verdict::fail;
  r.wall_seconds = timer.seconds();
  return r;
}

TestReport f1_exactness_test(std::size_t n, std::uint64_t seed,
                             const StatConfig& cfg) {
  Timer timer;
  const MaxMartingaleSpec spec{Variant::max, RealFunction::constant(1.0), 0.0};
  std::vector<double> worst(n);
  for_each_path(static_cast<std::int64_t>(n), cfg.exec, [&](std::int64_t i) {
    SimConfig sim;
    sim.dt = cfg.dt;
    sim.horizon = 1.0;
    const Path p = simulate_bm(seed, static_cast<std::uint64_t>(i), sim);
    const MartingaleSeries dir = evaluate_direct(spec, p);
    const MartingaleSeries integ = evaluate_integral(spec, p);
    double bad = 0.0;
    for (std::size_t k = 0; k < p.values.size(); ++k) {
      bad = std::max(bad, std::fabs(dir.values[k] - p.values[k]));
      bad = std::max(bad, std::fabs(integ.values[k] - p.values[k]));
    }
    worst[static_cast<std::size_t>(i)] = bad;
  });
  double bad = 0.0;
  for (double v : worst) bad = std::max(bad, v);

  TestReport r;
  r.name = "f1_exactness";
  r.estimate = bad;
  r.reference = 0.0;
  r.statistic = bad;
  r.threshold = 1e-10;  // accumulated machine precision over ~1e4 steps
  r.n = n;
  r.seed = seed;
  r.verdict = r.statistic <= r.threshold ? Verdict::pass : Verdict::fail;
  r.wall_seconds = timer.seconds();
  return r;
}

TestReport running_max_identity_test(std::size_t n, std::uint64_t seed,
                                     const StatConfig& cfg) {
  Timer timer;
  std::vector<std::pair<std::string, RealFunction>> fs;
  fs.emplace_back("constant", RealFunction::constant(1.0));
  fs.emplace_back("indicator", RealFunction::indicator_below(1.0));
  fs.emplace_back("exp_decay", RealFunction::exp_decay(1.0));
  fs.emplace_back("power", RealFunction::power(-0.5));
  fs.emplace_back("piecewise",
                  RealFunction::piecewise_linear({0.0, 0.4, 1.0, 2.0},
                                                 {0.5, 1.0, 0.2, 0.2}));
  {
    std::vector<double> xs, vs;
    for (int k = 0; k <= 40; ++k) {
      xs.push_back(0.05 * k);
      vs.push_back(std::exp(-0.05 * k));
    }
    fs.emplace_back("tabulated", RealFunction::tabulated(xs, vs));
  }

  std::vector<TestReport> parts;
  for (const auto& [fname, f] : fs) {
    const MaxMartingaleSpec spec{Variant::max, f, 0.25};
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < n; ++i) {
      SimConfig sim;
      sim.dt = cfg.dt;
      sim.horizon = 1.0;
      const Path path = simulate_bm(seed, i, sim);
      const MartingaleSeries series = evaluate_direct(spec, path);
      double run_max_h = series.values[0];
      for (std::size_t k = 0; k < series.values.size(); ++k) {
        run_max_h = std::max(run_max_h, series.values[k]);
        const double cap =
            antiderivative_at(f, path.running_max[k]) + spec.c;
        if (run_max_h != cap) ++mismatches;
      }
    }
    TestReport p;
    p.name = "running_max_identity[" + fname + "]";
    p.estimate = static_cast<double>(mismatches);
    p.reference = 0.0;
    p.statistic = static_cast<double>(mismatches);
    p.threshold = 0.0;
    p.n = n;
    p.seed = seed;
    p.verdict = mismatches == 0 ? Verdict::pass : Verdict::fail;
    parts.push_back(std::move(p));
  }
  TestReport r = compose("running_max_identity", std::move(parts), seed);
  r.wall_seconds = timer.seconds();
  return r;
}

TestReport recovery_test(std::size_t n, std::uint64_t seed,
                         const StatConfig& cfg) {
  Timer timer;
  const MaxMartingaleSpec spec{Variant::max, RealFunction::exp_decay(1.0), 0.0};
  const double width = 0.05;
  const std::vector<double> centers = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<double> probes;
  for (double c : centers) probes.push_back(c - 0.5 * width);
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.horizon = 1.0;
  const std::vector<RecoveredPoint> pts =
      recover_f_batch(spec, n, seed, sim, probes, width, cfg.exec);

  std::vector<TestReport> parts;
  double worst = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double ref = std::exp(-centers[k]);
    const double err = std::fabs(pts[k].estimate - ref);
    worst = std::max(worst, err);
    TestReport p;
    p.name = "f_hat(" + std::to_string(centers[k]) + ")";
    p.estimate = pts[k].estimate;
    p.reference = ref;
    p.statistic = err;
    p.threshold = 0.05;
    p.n = pts[k].occupancy;
    p.seed = seed;
    p.verdict = err <= p.threshold ? Verdict::pass : Verdict::fail;
    parts.push_back(std::move(p));
  }
  TestReport r = compose("recovery[exp_decay(1)]", std::move(parts), seed);
  r.estimate = worst;
  r.wall_seconds = timer.seconds();
  return r;
}

TestReport detector_round_trip_test(const StatConfig& cfg) {
  (void)cfg;
  Timer timer;
  GridSpec gs;
  DetectConfig dc;
  std::vector<std::pair<std::string, RealFunction>> fs;
  fs.emplace_back("constant", RealFunction::constant(1.0));
  fs.emplace_back("indicator", RealFunction::indicator_below(1.0));
  fs.emplace_back("exp_decay", RealFunction::exp_decay(1.0));
  fs.emplace_back("power", RealFunction::power(-0.5));
  fs.emplace_back("piecewise",
                  RealFunction::piecewise_linear({0.0, 0.4, 1.0, 2.0},
                                                 {0.5, 1.0, 0.2, 0.2}));
  {
    std::vector<double> xs, vs;
    for (int k = 0; k <= 40; ++k) {
      xs.push_back(0.05 * k);
      vs.push_back(std::exp(-0.05 * k));
    }
    fs.emplace_back("tabulated", RealFunction::tabulated(xs, vs));
  }

  std::vector<TestReport> parts;
  for (const auto& [fname, f] : fs) {
    const RoundTripResult rt = round_trip(f, 0.5, gs, dc);
    TestReport p;
    p.name = "round_trip[" + fname + "]";
    p.estimate = rt.f_max_error;
    p.reference = 0.0;
    p.statistic = rt.report.is_ay
                      ? std::max(rt.report.residual_max / 1e-8,
                                 rt.f_max_error / 1e-8)
                      : kInf;
    p.threshold = 1.0;
    p.seed = 0;
    p.n = rt.report.columns_fitted;
    p.verdict = (rt.report.is_ay && p.statistic <= 1.0) ? Verdict::pass
                                                        : Verdict::fail;
    parts.push_back(std::move(p));
  }
  {
    const GridFunction quad = build_grid_from(
        [](double x, double) { return x * x; }, gs);
    const DetectionReport rep = detect_ay_form(quad, dc);
    TestReport p;
    p.name = "reject[x^2]";
    p.estimate = rep.is_ay ? 1.0 : 0.0;
    p.reference = 0.0;
    p.statistic = rep.is_ay ? kInf : 0.0;
    p.threshold = 1.0;
    p.verdict = rep.is_ay ? Verdict::fail : Verdict::pass;
    parts.push_back(std::move(p));
  }
  TestReport r = compose("detector_round_trip", std::move(parts), 0);
  r.wall_seconds = timer.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

namespace {

struct SuiteEntry {
  std::string name;
  std::function<TestReport(const SuiteConfig&, std::uint64_t)> run;
};

const std::vector<SuiteEntry>& suite_entries() {
  static const std::vector<SuiteEntry> entries = [] {
    std::vector<SuiteEntry> v;
    auto add = [&v](std::string name,
                    std::function<TestReport(const SuiteConfig&, std::uint64_t)>
                        fn) { v.push_back({std::move(name), std::move(fn)}); };

    auto drift_entry = [](RealFunction f) {
      return [f = std::move(f)](const SuiteConfig& sc, std::uint64_t seed) {
        StatConfig cfg;
        cfg.exec = sc.exec;
        cfg.dt = 1e-4;
        const MaxMartingaleSpec spec{Variant::max, f, 0.0};
        return drift_test(spec, StoppingRule::exit(-1.0, 2.0), 100000, seed,
                          cfg);
      };
    };
    add("drift_constant_exit", drift_entry(RealFunction::constant(1.0)));
    add("drift_exp_decay_exit", drift_entry(RealFunction::exp_decay(1.0)));
    add("drift_indicator_exit", drift_entry(RealFunction::indicator_below(1.0)));
    add("drift_step5_fixed", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-4;
      return drift_test(step5_spec(RealFunction::exp_decay(1.0)),
                        StoppingRule::fixed(1.0), 100000, seed, cfg);
    });
    add("exit_max_law", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-5;
      return exit_max_law_test(1.0, 2.0, 10000, seed, cfg);
    });
    add("levy_equivalence", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      // dt tighter than elsewhere: the occupation estimator's O(sqrt(dt))
      // shift must stay well under the two-sample KS threshold at n = 1e4.
      cfg.dt = 5e-5;
      return levy_equivalence_test(1.0, 10000, seed, cfg);
    });
    auto subord_entry = [](RealFunction f) {
      return [f = std::move(f)](const SuiteConfig& sc, std::uint64_t seed) {
        StatConfig cfg;
        cfg.exec = sc.exec;
        return subordinator_laplace_test(f, 1.0, 100000, seed, cfg);
      };
    };
    add("subordinator_constant", subord_entry(RealFunction::constant(1.0)));
    add("subordinator_indicator",
        subord_entry(RealFunction::indicator_below(0.5)));
    add("subordinator_exp_decay", subord_entry(RealFunction::exp_decay(1.0)));
    add("excursion_intensity", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 5e-5;  // depth resolution: grid max deficit ~0.6 sqrt(dt)
      return excursion_intensity_test(0.5, 5.0, 1000, seed, cfg);
    });
    add("excursion_halving", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 5e-5;
      return excursion_halving_test(0.5, 5.0, 1000, seed, cfg);
    });
    add("constancy_h_x", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-3;
      return bplus_constancy_test(builtin_h("x"), "x", 100000, seed, cfg);
    });
    add("constancy_h_y", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-3;
      return bplus_constancy_test(builtin_h("y"), "y", 100000, seed, cfg);
    });
    add("convergence_exp_decay", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-3;
      const MaxMartingaleSpec spec{Variant::max, RealFunction::exp_decay(1.0),
                                   0.0};
      return convergence_test(spec, {1.0, 4.0, 16.0}, 10000, seed, cfg);
    });
    add("convergence_indicator", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-3;
      const MaxMartingaleSpec spec{Variant::max,
                                   RealFunction::indicator_below(1.0), 0.0};
      return convergence_test(spec, {1.0, 4.0, 16.0}, 10000, seed, cfg);
    });
    add("two_form_rate", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      return two_form_rate_test(RealFunction::exp_decay(1.0), 2e-4, 1000, seed,
                                cfg);
    });
    add("f1_exactness", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-4;
      return f1_exactness_test(200, seed, cfg);
    });
    add("running_max_identity", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-3;
      return running_max_identity_test(50, seed, cfg);
    });
    add("recovery_exp_decay", [](const SuiteConfig& sc, std::uint64_t seed) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      cfg.dt = 1e-4;
      return recovery_test(20000, seed, cfg);
    });
    add("detector_round_trip", [](const SuiteConfig& sc, std::uint64_t) {
      StatConfig cfg;
      cfg.exec = sc.exec;
      return detector_round_trip_test(cfg);
    });
    return v;
  }();
  return entries;
}

}  // namespace

std::vector<std::string> suite_test_names() {
  std::vector<std::string> names;
  for (const auto& e : suite_entries()) names.push_back(e.name);
  return names;
}

std::vector<TestReport> run_suite(const SuiteConfig& cfg) {
  std::vector<TestReport> reports;
  for (const std::string& sel : cfg.only) {
    bool known = false;
    for (const auto& e : suite_entries())
      if (e.name == sel) known = true;
    if (!known)
      throw std::invalid_argument("run_suite: unknown test '" + sel + "'");
  }
  for (const auto& e : suite_entries()) {
    if (!cfg.only.empty() &&
        std::find(cfg.only.begin(), cfg.only.end(), e.name) == cfg.only.end())
      continue;
    const std::uint64_t seed = derive_seed(cfg.seed, fnv1a(e.name));
    TestReport r = e.run(cfg, seed);
    // Keep the registry name as the canonical label.
    r.name = e.name + ": " + r.name;
    reports.push_back(std::move(r));
  }
  return reports;
}

void write_suite_summary_csv(const std::vector<TestReport>& reports,
                             std::ostream& out) {
  std::string buf = "name,estimate,reference,statistic,threshold,verdict,wall_seconds\n";
  char line[512];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "\"%s\",%.17g,%.17g,%.17g,%.17g,%s,%.3f\n",
                  r.name.c_str(), r.estimate, r.reference, r.statistic,
                  r.threshold, to_string(r.verdict), r.wall_seconds);
    buf += line;
  }
  out << buf;
}

}  // namespace maxmart
