#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxmart/maxmart.hpp"
#include "maxmart/stattests.hpp"

namespace maxmart {

// Invalid configuration; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;  // simulate | evaluate | recover | detect | verify | stop-law
  MaxMartingaleSpec spec{Variant::max, RealFunction::exp_decay(1.0), 0.0};
  std::size_t n_paths = 1;
  double dt = 1e-4;
  double horizon = 1.0;
  std::uint64_t seed = 20240912;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> test_selection;
  int jobs = 0;  // 0 = leave thread count alone
  bool serial = false;

  // command-specific knobs
  std::filesystem::path grid_file;      // detect
  double x = 1.0, y = 2.0;              // stop-law interval [-x, y]
  std::vector<double> probes;           // recover: bin left edges
  double bin_width = 0.05;

  nlohmann::json raw = nlohmann::json::object();  // echoed into sidecars
  std::vector<std::filesystem::path> input_files;
};

// Parses a config document; flags handled by the CLI overlay the document
// before this call. Throws UsageError on malformed input.
RunConfig parse_config(const nlohmann::json& doc,
                       const std::filesystem::path& base_dir);

void validate(const RunConfig& cfg);  // throws UsageError

// Executes the command and writes artifacts. Returns the exit status:
// 0 all selected verdicts pass, 1 failed verdict, 3 inconclusive verdict.
int run(const RunConfig& cfg);

int exit_code_for(const std::vector<TestReport>& reports);

// Git-style content hash (sha1 of "blob <len>\0" + bytes), hex-encoded.
std::string git_blob_sha1(const std::string& bytes);
std::string git_blob_sha1_file(const std::filesystem::path& file);

}  // namespace maxmart
