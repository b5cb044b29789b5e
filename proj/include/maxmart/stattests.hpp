#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxmart/batch.hpp"
#include "maxmart/characterize.hpp"
#include "maxmart/maxmart.hpp"
#include "maxmart/stats.hpp"

namespace maxmart {

enum class Verdict { pass, fail, inconclusive };

const char* to_string(Verdict v) noexcept;

// One statistical check. Composite tests carry their sub-checks in `parts`
// with a normalized top-level statistic (max over parts of |stat|/threshold,
// threshold 1), so "pass iff statistic <= threshold" holds at every level.
// Tests whose purpose is to REJECT a null hypothesis set `rejection` and
// pass when the statistic exceeds the threshold instead.
struct TestReport {
  std::string name;
  double estimate = 0.0;
  double reference = 0.0;
  double std_error = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::fail;
  bool rejection = false;
  double wall_seconds = 0.0;
  std::vector<TestReport> parts;

  nlohmann::json to_json() const;
};

struct ExitLawSample {
  StopKind side = StopKind::exit_lower;
  double max_value = 0.0;  // in [0, y]; equals y on upper exit
};

// Shared knobs; tests read only what they use. Thresholds are fixed policy:
// z at 4 standard errors, KS at alpha = 0.01 (c = 1.63).
struct StatConfig {
  double dt = 1e-4;
  double horizon = 50.0;  // cap for stopping rules
  Exec exec = Exec::parallel;
  double z_threshold = 4.0;
  double ks_const = 1.63;
  double rejection_threshold = 20.0;
  double censored_cap = 0.01;
  std::size_t subordinator_grid = 1000;
  double convergence_final_fraction = 0.35;
  double dispersion_lo = 0.9;
  double dispersion_hi = 1.1;
  std::size_t max_steps_per_path = 80'000'000;
};

struct StoppingRule {
  enum class Kind { exit_interval, fixed_time };
  Kind kind = Kind::fixed_time;
  double lower = -1.0;
  double upper = 2.0;
  double t = 1.0;
  bool bridge = true;

  static StoppingRule exit(double lower, double upper, bool bridge = true);
  static StoppingRule fixed(double t);
  std::string label() const;
};

// Optional-stopping z-test: mean of H at the stopping time against H(0,0).
TestReport drift_test(const MaxMartingaleSpec& spec, const StoppingRule& stop,
                      std::size_t n, std::uint64_t seed,
                      const StatConfig& cfg = {});

// Exit law of the maximum from [-x, y]: binomial test of the upper-exit
// frequency against x/(x+y), and one-sample KS of the lower-exit maxima
// against the conditional CDF s(x+y)/(y(s+x)) on [0, y].
TestReport exit_max_law_test(double x, double y, std::size_t n,
                             std::uint64_t seed, const StatConfig& cfg = {});
std::pair<std::vector<ExitLawSample>, TestReport> exit_max_law_run(
    double x, double y, std::size_t n, std::uint64_t seed,
    const StatConfig& cfg = {});

// Levy equivalence at time t: two-sample KS of max vs L and of (max - B) vs
// |B| across independently seeded batches, plus max against the half-normal.
TestReport levy_equivalence_test(double t, std::size_t n, std::uint64_t seed,
                                 const StatConfig& cfg = {});

// E[exp(-1/2 int_0^x f^2 dT)] = exp(-int_0^x |f|) with exact 1/2-stable
// subordinator increments du^2 / Z^2.
TestReport subordinator_laplace_test(const RealFunction& f, double x,
                                     std::size_t n, std::uint64_t seed,
                                     const StatConfig& cfg = {});

// Counts excursions of (max - B) deeper than v0 while the running max
// traverses [0, y_max]; mean against y_max/v0 and a Poisson dispersion check.
TestReport excursion_intensity_test(double v0, double y_max, std::size_t n,
                                    std::uint64_t seed,
                                    const StatConfig& cfg = {});

// Doubling v0 must halve the mean count.
TestReport excursion_halving_test(double v0, double y_max, std::size_t n,
                                  std::uint64_t seed,
                                  const StatConfig& cfg = {});

// Negative test: functions of the reflected triples (B+, max), (B-, min)
// and (|B|, B*) are local martingales only when constant, so the drift
// machinery at fixed time and at an exit time must REJECT the martingale
// hypothesis for every nonconstant h. Throws std::domain_error for
// constant h.
TestReport bplus_constancy_test(
    const std::function<double(double, double)>& h, const std::string& h_label,
    std::size_t n, std::uint64_t seed, const StatConfig& cfg = {});

// Named surfaces for the CLI: "x", "y", "x2".
const std::function<double(double, double)>& builtin_h(const std::string& name);

// E|H_T - F(inf) - c| across increasing horizons: strictly decreasing with
// the final value below a fixed fraction of the initial one.
TestReport convergence_test(const MaxMartingaleSpec& spec,
                            const std::vector<double>& horizons, std::size_t n,
                            std::uint64_t seed, const StatConfig& cfg = {});

// Discretization consistency of the closed form vs the integral form: the median of the
// per-path max node gap must shrink by ~sqrt(2) when dt halves.
TestReport two_form_rate_test(const RealFunction& f, double dt_coarse,
                              std::size_t n, std::uint64_t seed,
                              const StatConfig& cfg = {});

// f == 1 telescopes: both forms reproduce the driver B to accumulated
// machine precision.
TestReport f1_exactness_test(std::size_t n, std::uint64_t seed,
                             const StatConfig& cfg = {});

// Node-wise running-max identity max_{s<=t} H_s = F(max_t) + c, exact in
// the discrete model for every nonnegative built-in f.
TestReport running_max_identity_test(std::size_t n, std::uint64_t seed,
                                     const StatConfig& cfg = {});

// Covariation-density recovery of f = exp(-x) on a probe grid.
TestReport recovery_test(std::size_t n, std::uint64_t seed,
                         const StatConfig& cfg = {});

// Detector round-trip over the built-in kinds plus the x^2 rejection grid.
TestReport detector_round_trip_test(const StatConfig& cfg = {});

// The Step-5 positive supermartingale ||f|| - F(y) + f(y)(y - x) expressed
// as an ordinary spec (f -> -f, c = ||f||). Requires a finite total integral.
MaxMartingaleSpec step5_spec(const RealFunction& f);

struct SuiteConfig {
  std::uint64_t seed = 20240912;
  Exec exec = Exec::parallel;
  std::vector<std::string> only;  // empty = full battery
};

// The verification battery (~20 reports). Unknown names in `only` throw.
std::vector<TestReport> run_suite(const SuiteConfig& cfg);
std::vector<std::string> suite_test_names();

void write_suite_summary_csv(const std::vector<TestReport>& reports,
                             std::ostream& out);

}  // namespace maxmart
