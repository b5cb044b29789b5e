#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "maxmart/cli_run.hpp"
#include "maxmart/stattests.hpp"

using namespace maxmart;

namespace {

StatConfig fast(double dt) {
  StatConfig cfg;
  cfg.dt = dt;
  return cfg;
}

}  // namespace

TEST_CASE("drift test passes for bounded stopped martingales") {
  const MaxMartingaleSpec one{Variant::max, RealFunction::constant(1.0), 0.0};
  const TestReport r =
      drift_test(one, StoppingRule::exit(-1.0, 2.0), 20000, 5, fast(1e-3));
  CHECK(r.verdict == Verdict::pass);
  CHECK(std::fabs(r.statistic) <= 4.0);
  CHECK(r.reference == 0.0);
  CHECK(std::fabs(r.estimate) < 0.05);

  const MaxMartingaleSpec ed{Variant::max, RealFunction::exp_decay(1.0), 0.0};
  const TestReport r2 =
      drift_test(ed, StoppingRule::exit(-1.0, 2.0), 20000, 6, fast(1e-3));
  CHECK(r2.verdict == Verdict::pass);
}

TEST_CASE("drift test reports the Step-5 positive form against its norm") {
  const TestReport r = drift_test(step5_spec(RealFunction::exp_decay(1.0)),
                                  StoppingRule::fixed(1.0), 20000, 7,
                                  fast(1e-3));
  CHECK(r.reference == doctest::Approx(1.0));
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("heavily censored stopping rules come back inconclusive") {
  const MaxMartingaleSpec one{Variant::max, RealFunction::constant(1.0), 0.0};
  StatConfig cfg = fast(1e-3);
  cfg.horizon = 0.05;  // almost no path exits [-1, 2] this early
  const TestReport r =
      drift_test(one, StoppingRule::exit(-1.0, 2.0), 2000, 8, cfg);
  CHECK(r.verdict == Verdict::inconclusive);
}

TEST_CASE("step5 spec requires an integrable f") {
  CHECK_THROWS_AS((void)step5_spec(RealFunction::constant(1.0)),
                  std::invalid_argument);
}

TEST_CASE("exit law of the maximum") {
  const TestReport r = exit_max_law_test(1.0, 2.0, 4000, 11, fast(1e-4));
  CHECK(r.verdict == Verdict::pass);
  REQUIRE(r.parts.size() == 2);
  CHECK(r.parts[0].reference == doctest::Approx(1.0 / 3.0));
  CHECK(std::fabs(r.parts[0].estimate - 1.0 / 3.0) < 0.04);
  CHECK(r.parts[1].statistic <= r.parts[1].threshold);

  const TestReport sym = exit_max_law_test(1.0, 1.0, 2000, 12, fast(1e-4));
  CHECK(sym.parts[0].reference == doctest::Approx(0.5));
  CHECK(sym.verdict == Verdict::pass);
}

TEST_CASE("exit law with too few lower exits is inconclusive") {
  const TestReport r = exit_max_law_test(1.0, 2.0, 60, 14, fast(1e-4));
  CHECK(r.verdict == Verdict::inconclusive);
}

TEST_CASE("excursion traversal that cannot finish is inconclusive") {
  StatConfig cfg = fast(1e-3);
  cfg.max_steps_per_path = 50;  // far too few to push the max to 5
  const TestReport r = excursion_intensity_test(0.5, 5.0, 50, 15, cfg);
  CHECK(r.verdict == Verdict::inconclusive);
}

TEST_CASE("exit law samples satisfy the type invariants") {
  const auto [samples, report] = exit_max_law_run(1.0, 2.0, 500, 13, fast(1e-4));
  for (const auto& s : samples) {
    CHECK(s.max_value >= 0.0);
    CHECK(s.max_value <= 2.0);
    if (s.side == StopKind::exit_upper) CHECK(s.max_value == 2.0);
  }
}

TEST_CASE("levy equivalence holds at t = 1") {
  const TestReport r = levy_equivalence_test(1.0, 2000, 17, fast(1e-4));
  CHECK(r.verdict == Verdict::pass);
  REQUIRE(r.parts.size() == 3);
  for (const auto& p : r.parts) CHECK(p.statistic <= p.threshold);
}

TEST_CASE("levy equivalence is skipped near t = 0") {
  const TestReport r = levy_equivalence_test(5e-4, 100, 18, fast(1e-4));
  CHECK(r.verdict == Verdict::inconclusive);
}

TEST_CASE("subordinator laplace identity") {
  const TestReport c1 =
      subordinator_laplace_test(RealFunction::constant(1.0), 1.0, 20000, 19);
  CHECK(c1.verdict == Verdict::pass);
  CHECK(c1.reference == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  const TestReport c0 =
      subordinator_laplace_test(RealFunction::constant(0.0), 1.0, 1000, 20);
  CHECK(c0.verdict == Verdict::pass);
  CHECK(c0.estimate == 1.0);
  CHECK(c0.reference == 1.0);

  const TestReport ind = subordinator_laplace_test(
      RealFunction::indicator_below(0.5), 1.0, 20000, 21);
  CHECK(ind.verdict == Verdict::pass);
  CHECK(ind.reference == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  CHECK_THROWS_AS((void)subordinator_laplace_test(RealFunction::power(-0.5),
                                                  1.0, 10, 22),
                  std::invalid_argument);
}

TEST_CASE("excursion counts follow the 1/v0 intensity") {
  const TestReport r = excursion_intensity_test(0.5, 2.0, 600, 23, fast(2e-4));
  REQUIRE(r.parts.size() == 2);
  CHECK(r.parts[0].reference == doctest::Approx(4.0));
  CHECK(r.parts[0].verdict == Verdict::pass);
  // dispersion is asserted at acceptance scale; here just sanity-bound it
  CHECK(r.parts[1].estimate > 0.5);
  CHECK(r.parts[1].estimate < 1.5);
}

TEST_CASE("doubling v0 halves the mean excursion count") {
  const TestReport r = excursion_halving_test(0.5, 2.0, 600, 24, fast(2e-4));
  CHECK(r.verdict == Verdict::pass);
}

TEST_CASE("reflected-triple battery rejects nonconstant surfaces") {
  const TestReport r =
      bplus_constancy_test(builtin_h("x"), "x", 20000, 25, fast(1e-3));
  CHECK(r.rejection);
  CHECK(r.verdict == Verdict::pass);
  REQUIRE(r.parts.size() == 4);
  for (const auto& p : r.parts) CHECK(std::fabs(p.statistic) > 20.0);
  // the fixed-time (B+, max) drift sits at E B+_1 = 1/sqrt(2 pi)
  CHECK(r.parts[0].estimate ==
        doctest::Approx(std::sqrt(0.5 / std::acos(-1.0))).epsilon(0.05));

  CHECK_THROWS_AS((void)bplus_constancy_test(builtin_h("const"), "const", 100,
                                             26, fast(1e-3)),
                  std::domain_error);
}

TEST_CASE("convergence test measures the L1 obstruction honestly") {
  // H_T -> F(inf) + c almost surely, but E|H_T - F(inf) - c| is pinned at
  // ||f||: H never exceeds F(max) + c <= F(inf) + c, so the mean absolute
  // error equals F(inf) minus the (constant) martingale mean. The mean-based
  // verdict therefore fails while the median diagnostics do decay.
  const MaxMartingaleSpec ed{Variant::max, RealFunction::exp_decay(1.0), 0.0};
  const TestReport r = convergence_test(ed, {1.0, 4.0, 16.0}, 4000, 27,
                                        fast(5e-3));
  CHECK(r.verdict == Verdict::fail);
  REQUIRE(r.parts.size() == 7);  // three means, the fraction row, three medians
  for (int k = 0; k < 3; ++k)
    CHECK(std::fabs(r.parts[k].estimate - 1.0) <
          5.0 * r.parts[k].std_error + 0.05);
  CHECK(r.parts[4].estimate > r.parts[5].estimate);
  CHECK(r.parts[5].estimate > r.parts[6].estimate);
  CHECK(r.parts[6].estimate < 0.35 * r.parts[4].estimate);

  // degenerate zero function: the error is identically zero at all horizons
  const MaxMartingaleSpec zero{Variant::max, RealFunction::constant(0.0), 2.0};
  const TestReport rz = convergence_test(zero, {1.0, 2.0}, 100, 28, fast(1e-2));
  CHECK(rz.verdict == Verdict::pass);
  CHECK(rz.parts[0].estimate == 0.0);

  CHECK_THROWS_AS((void)convergence_test(ed, {1.0}, 10, 29, fast(1e-2)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)convergence_test(ed, {4.0, 1.0}, 10, 29, fast(1e-2)),
                  std::invalid_argument);
  const MaxMartingaleSpec bad{Variant::max, RealFunction::constant(1.0), 0.0};
  CHECK_THROWS_AS((void)convergence_test(bad, {1.0, 2.0}, 10, 30, fast(1e-2)),
                  std::domain_error);
}

TEST_CASE("two-form discrepancy shrinks like sqrt(dt)") {
  const TestReport r =
      two_form_rate_test(RealFunction::exp_decay(1.0), 4e-4, 300, 31, fast(1e-3));
  CHECK(r.estimate > 1.1);
  CHECK(r.estimate < 1.8);
}

TEST_CASE("acceptance helpers pass at reduced size") {
  CHECK(f1_exactness_test(50, 33, fast(1e-3)).verdict == Verdict::pass);
  CHECK(running_max_identity_test(10, 34, fast(1e-3)).verdict == Verdict::pass);
  const TestReport rec = recovery_test(3000, 35, fast(1e-3));
  CHECK(rec.verdict == Verdict::pass);
  CHECK(detector_round_trip_test(fast(1e-3)).verdict == Verdict::pass);
}

TEST_CASE("suite registry") {
  const auto names = suite_test_names();
  CHECK(names.size() == 20);
  SuiteConfig sc;
  sc.only = {"f1_exactness"};
  const auto reports = run_suite(sc);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].verdict == Verdict::pass);
  CHECK(reports[0].name.rfind("f1_exactness", 0) == 0);

  SuiteConfig bad;
  bad.only = {"not_a_test"};
  CHECK_THROWS_AS((void)run_suite(bad), std::invalid_argument);
}

TEST_CASE("verdict reproducibility: same seed, same bytes") {
  const TestReport a = exit_max_law_test(1.0, 2.0, 500, 99, fast(1e-4));
  const TestReport b = exit_max_law_test(1.0, 2.0, 500, 99, fast(1e-4));
  CHECK(a.estimate == b.estimate);
  CHECK(a.statistic == b.statistic);
  CHECK(a.verdict == b.verdict);
  const TestReport c = exit_max_law_test(1.0, 2.0, 500, 100, fast(1e-4));
  CHECK(a.estimate != c.estimate);
}

TEST_CASE("report serialization and the summary table") {
  const TestReport r = subordinator_laplace_test(RealFunction::constant(1.0),
                                                 1.0, 500, 41);
  const nlohmann::json j = r.to_json();
  CHECK(j.at("verdict").get<std::string>() == "pass");
  CHECK(j.at("n").get<std::size_t>() == 500);

  std::ostringstream os;
  write_suite_summary_csv({r}, os);
  const std::string text = os.str();
  CHECK(text.rfind("name,estimate,reference,statistic,threshold,verdict,"
                   "wall_seconds\n", 0) == 0);
  CHECK(text.find("pass") != std::string::npos);
}

TEST_CASE("exit codes aggregate verdicts") {
  TestReport pass;
  pass.verdict = Verdict::pass;
  TestReport fail;
  fail.verdict = Verdict::fail;
  TestReport inc;
  inc.verdict = Verdict::inconclusive;
  CHECK(exit_code_for({pass, pass}) == 0);
  CHECK(exit_code_for({pass, fail, inc}) == 1);
  CHECK(exit_code_for({pass, inc}) == 3);
  CHECK(exit_code_for({}) == 0);
}
