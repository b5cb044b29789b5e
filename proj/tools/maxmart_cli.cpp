// maxmart: simulation and verification front end.
//
//   maxmart verify --out out/ --seed 7
//   maxmart simulate --n 4 --dt 1e-4 --horizon 1 --out out/
//   maxmart evaluate --f '{"kind":"exp_decay","params":{"lambda":1}}' --out out/
//   maxmart recover --n 20000 --out out/
//   maxmart detect --grid grid.csv --out out/
//   maxmart stop-law --x 1 --y 2 --n 10000 --dt 1e-5 --out out/
//
// A JSON config can seed every option (--config); flags override it.
// MAXMART_OUT overrides the output directory. Exit codes: 0 pass, 1 failed
// verdict, 2 usage error, 3 inconclusive verdict.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maxmart/cli_run.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-martingale simulation and verification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_file, out_dir, only, f_json, variant, grid_file;
  std::uint64_t seed = 0;
  bool seed_set = false, serial = false;
  int jobs = 0;
  std::size_t n_paths = 0;
  double dt = 0.0, horizon = 0.0, c_init = 0.0, x = 0.0, y = 0.0,
         bin_width = 0.0;
  bool c_set = false;

  app.add_option("--config", config_file, "JSON config file");
  app.add_option("--seed", seed, "root seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads (0 = library default)");
  app.add_flag("--serial", serial, "disable the parallel kernels");
  app.add_option("--n", n_paths, "number of paths / samples");
  app.add_option("--dt", dt, "grid step");
  app.add_option("--horizon", horizon, "time horizon");
  app.add_option("--f", f_json, "function descriptor JSON");
  app.add_option("--variant", variant, "max | min | local_time");
  app.add_option("--c", c_init, "initial value H(0,0)")
      ->each([&](const std::string&) { c_set = true; });

  auto* sim = app.add_subcommand("simulate", "write path CSVs");
  auto* eval = app.add_subcommand("evaluate", "write martingale series CSVs");
  auto* rec = app.add_subcommand("recover", "estimate f from simulated paths");
  auto* det = app.add_subcommand("detect", "decide whether a grid H is of the family");
  auto* ver = app.add_subcommand("verify", "run the statistical battery");
  auto* stl = app.add_subcommand("stop-law", "exit law of the maximum");

  det->add_option("--grid", grid_file, "GridFunction CSV to analyze");
  ver->add_option("--only", only, "comma-separated test names");
  stl->add_option("--x", x, "lower boundary magnitude");
  stl->add_option("--y", y, "upper boundary");
  rec->add_option("--bin-width", bin_width, "recovery bin width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path base_dir;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) {
      std::fprintf(stderr, "error: cannot open config %s\n",
                   config_file.c_str());
      return 2;
    }
    try {
      in >> doc;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: bad config JSON: %s\n", e.what());
      return 2;
    }
    base_dir = std::filesystem::path(config_file).parent_path();
  }

  if (sim->parsed()) doc["command"] = "simulate";
  if (eval->parsed()) doc["command"] = "evaluate";
  if (rec->parsed()) doc["command"] = "recover";
  if (det->parsed()) doc["command"] = "detect";
  if (ver->parsed()) doc["command"] = "verify";
  if (stl->parsed()) doc["command"] = "stop-law";

  if (seed_set) doc["seed"] = seed;
  if (!out_dir.empty()) doc["out"] = out_dir;
  if (const char* env = std::getenv("MAXMART_OUT")) doc["out"] = env;
  if (jobs > 0) doc["jobs"] = jobs;
  if (serial) doc["serial"] = true;
  if (n_paths > 0) doc["n_paths"] = n_paths;
  if (dt > 0.0) doc["dt"] = dt;
  if (horizon > 0.0) doc["horizon"] = horizon;
  if (!only.empty()) doc["only"] = split_csv(only);
  if (!grid_file.empty()) doc["grid"] = grid_file;
  if (x > 0.0) doc["x"] = x;
  if (y > 0.0) doc["y"] = y;
  if (bin_width > 0.0) doc["bin_width"] = bin_width;
  if (!f_json.empty() || !variant.empty() || c_set) {
    nlohmann::json spec = doc.value("spec", nlohmann::json::object());
    if (!variant.empty()) spec["variant"] = variant;
    if (c_set) spec["c"] = c_init;
    if (!f_json.empty()) {
      try {
        spec["f"] = nlohmann::json::parse(f_json);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: bad --f JSON: %s\n", e.what());
        return 2;
      }
    }
    doc["spec"] = spec;
  }

  try {
    maxmart::RunConfig cfg = maxmart::parse_config(doc, base_dir);
    if (!config_file.empty())
      cfg.input_files.push_back(config_file);
    return maxmart::run(cfg);
  } catch (const maxmart::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
