#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maxmart/characterize.hpp"
#include "maxmart/cli_run.hpp"

using namespace maxmart;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("maxmart_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig config_from(const nlohmann::json& doc) {
  return parse_config(doc, fs::path{});
}

}  // namespace

TEST_CASE("git blob hash matches the reference value") {
  // sha1("blob 12\0hello world\n") -- the well-known git hash of that blob
  CHECK(git_blob_sha1("hello world\n") ==
        "3b18e512dba79e4c8300dd08aeb37f8e728b8dad");
}

TEST_CASE("validation rejects bad configs") {
  RunConfig cfg = config_from({{"command", "simulate"}});
  cfg.output_dir = fresh_dir("val");
  CHECK_NOTHROW(validate(cfg));

  RunConfig unknown = cfg;
  unknown.command = "frobnicate";
  CHECK_THROWS_AS(validate(unknown), UsageError);

  RunConfig bad_dt = cfg;
  bad_dt.dt = 2.0;
  bad_dt.horizon = 1.0;
  CHECK_THROWS_AS(validate(bad_dt), UsageError);

  RunConfig no_paths = cfg;
  no_paths.n_paths = 0;
  CHECK_THROWS_AS(validate(no_paths), UsageError);
}

TEST_CASE("simulate writes deterministic csv artifacts with sidecars") {
  nlohmann::json doc{{"command", "simulate"}, {"n_paths", 2},
                     {"dt", 1e-3},           {"horizon", 0.1},
                     {"seed", 42}};
  RunConfig a = config_from(doc);
  a.output_dir = fresh_dir("sim_a");
  CHECK(run(a) == 0);
  CHECK(fs::exists(a.output_dir / "path_00000.csv"));
  CHECK(fs::exists(a.output_dir / "path_00001.csv"));
  CHECK(fs::exists(a.output_dir / "path_00000.csv.meta.json"));

  RunConfig b = config_from(doc);
  b.output_dir = fresh_dir("sim_b");
  CHECK(run(b) == 0);
  CHECK(slurp(a.output_dir / "path_00000.csv") ==
        slurp(b.output_dir / "path_00000.csv"));

  const nlohmann::json meta = nlohmann::json::parse(
      slurp(a.output_dir / "path_00000.csv.meta.json"));
  CHECK(meta.at("command") == "simulate");
  CHECK(meta.at("seed").get<std::uint64_t>() == 42);
  CHECK(meta.contains("created_unix"));
}

TEST_CASE("evaluate with f == 1 reproduces the driver column") {
  nlohmann::json doc{{"command", "evaluate"},
                     {"n_paths", 1},
                     {"dt", 1e-3},
                     {"horizon", 0.05},
                     {"seed", 9},
                     {"spec",
                      {{"variant", "max"},
                       {"c", 0.0},
                       {"f", {{"kind", "constant"}, {"params", {{"value", 1.0}}}}}}}};
  RunConfig cfg = config_from(doc);
  cfg.output_dir = fresh_dir("eval");
  CHECK(run(cfg) == 0);
  std::ifstream in(cfg.output_dir / "series_00000.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,H_direct,H_integral,driver,running_max_of_H");
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t, hd, hi, driver, rmh;
    ls >> t >> hd >> hi >> driver >> rmh;
    CHECK(hd == doctest::Approx(driver).epsilon(1e-10));
    CHECK(hi == doctest::Approx(driver).epsilon(1e-10));
  }
}

TEST_CASE("detect on a generated grid reports the family membership") {
  nlohmann::json doc{{"command", "detect"},
                     {"spec",
                      {{"variant", "max"},
                       {"c", 0.0},
                       {"f", {{"kind", "exp_decay"}, {"params", {{"lambda", 1.0}}}}}}}};
  RunConfig cfg = config_from(doc);
  cfg.output_dir = fresh_dir("detect");
  CHECK(run(cfg) == 0);
  const nlohmann::json rep = nlohmann::json::parse(
      slurp(cfg.output_dir / "detection_report.json"));
  CHECK(rep.at("is_ay").get<bool>());
  CHECK(fs::exists(cfg.output_dir / "grid.csv"));
}

TEST_CASE("detect on an external non-member grid file") {
  const fs::path dir = fresh_dir("detect_ext");
  const fs::path grid_file = dir / "quad.csv";
  {
    const GridFunction quad =
        build_grid_from([](double x, double) { return x * x; }, GridSpec{});
    std::ofstream out(grid_file);
    write_grid_csv(quad, out);
  }
  nlohmann::json doc{{"command", "detect"}};
  RunConfig cfg = config_from(doc);
  cfg.grid_file = grid_file;
  cfg.output_dir = dir / "out";
  CHECK(run(cfg) == 0);
  const nlohmann::json rep =
      nlohmann::json::parse(slurp(cfg.output_dir / "detection_report.json"));
  CHECK_FALSE(rep.at("is_ay").get<bool>());
  // the input grid is hashed into the sidecar
  const nlohmann::json meta = nlohmann::json::parse(
      slurp(cfg.output_dir / "detection_report.json.meta.json"));
  CHECK(meta.at("inputs").size() == 1);
}

TEST_CASE("verify with a selection emits reports and a summary") {
  nlohmann::json doc{{"command", "verify"},
                     {"seed", 31337},
                     {"only", {"f1_exactness", "detector_round_trip"}}};
  RunConfig cfg = config_from(doc);
  cfg.output_dir = fresh_dir("verify");
  CHECK(run(cfg) == 0);
  CHECK(fs::exists(cfg.output_dir / "report_f1_exactness.json"));
  CHECK(fs::exists(cfg.output_dir / "report_detector_round_trip.json"));
  const std::string summary = slurp(cfg.output_dir / "summary.csv");
  CHECK(summary.find("f1_exactness") != std::string::npos);
  CHECK(summary.find("pass") != std::string::npos);
}

TEST_CASE("stop-law emits samples and a report") {
  nlohmann::json doc{{"command", "stop-law"}, {"n_paths", 800},
                     {"dt", 1e-4},            {"seed", 5},
                     {"x", 1.0},              {"y", 2.0}};
  RunConfig cfg = config_from(doc);
  cfg.output_dir = fresh_dir("stoplaw");
  CHECK(run(cfg) == 0);
  const std::string samples = slurp(cfg.output_dir / "exit_law_samples.csv");
  CHECK(samples.rfind("side,max_value\n", 0) == 0);
  CHECK(samples.find("exit_upper") != std::string::npos);
  CHECK(samples.find("exit_lower") != std::string::npos);
  const nlohmann::json rep =
      nlohmann::json::parse(slurp(cfg.output_dir / "stop_law_report.json"));
  CHECK(rep.at("verdict") == "pass");
}

TEST_CASE("report artifacts are byte-identical across runs") {
  nlohmann::json doc{{"command", "verify"},
                     {"seed", 2024},
                     {"only", {"f1_exactness"}}};
  RunConfig a = config_from(doc);
  a.output_dir = fresh_dir("det_a");
  RunConfig b = config_from(doc);
  b.output_dir = fresh_dir("det_b");
  CHECK(run(a) == 0);
  CHECK(run(b) == 0);
  CHECK(slurp(a.output_dir / "report_f1_exactness.json") ==
        slurp(b.output_dir / "report_f1_exactness.json"));
}

TEST_CASE("an unknown test selection is a usage error") {
  nlohmann::json doc{{"command", "verify"}, {"only", {"not_a_test"}}};
  RunConfig cfg = config_from(doc);
  cfg.output_dir = fresh_dir("badsel");
  CHECK_THROWS_AS((void)run(cfg), UsageError);
}

TEST_CASE("run rejects an unknown command with a usage error") {
  RunConfig cfg = config_from({{"command", "nonsense"}});
  cfg.output_dir = fresh_dir("bad");
  CHECK_THROWS_AS((void)run(cfg), UsageError);
}
