#include "maxmart/cli_run.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "maxmart/characterize.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace maxmart {

namespace {

// --- minimal SHA-1 (for the git-style content hashes in sidecars) ---------

struct Sha1 {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                        0xC3D2E1F0u};
  std::uint64_t total = 0;
  std::array<unsigned char, 64> block{};
  std::size_t fill = 0;

  static std::uint32_t rol(std::uint32_t v, int s) {
    return (v << s) | (v >> (32 - s));
  }

  void process(const unsigned char* p) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | ((~b) & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t t = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = t;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  void update(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    total += len;
    while (len > 0) {
      const std::size_t take = std::min(len, block.size() - fill);
      std::memcpy(block.data() + fill, p, take);
      fill += take;
      p += take;
      len -= take;
      if (fill == block.size()) {
        process(block.data());
        fill = 0;
      }
    }
  }

  std::string hex_digest() {
    const std::uint64_t bits = total * 8;
    const unsigned char one = 0x80;
    update(&one, 1);
    const unsigned char zero = 0x00;
    while (fill != 56) update(&zero, 1);
    unsigned char len_be[8];
    for (int i = 0; i < 8; ++i)
      len_be[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(len_be, 8);
    char out[41];
    for (int i = 0; i < 5; ++i)
      std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 40);
  }
};

std::string read_file_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& file, const std::string& s) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << s;
}

}  // namespace

std::string git_blob_sha1(const std::string& bytes) {
  Sha1 s;
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "blob %zu", bytes.size());
  s.update(header, static_cast<std::size_t>(n) + 1);  // includes the NUL
  s.update(bytes.data(), bytes.size());
  return s.hex_digest();
}

std::string git_blob_sha1_file(const std::filesystem::path& file) {
  return git_blob_sha1(read_file_bytes(file));
}

namespace {

// Sidecar with config echo, seed, and content hashes of the input files.
// Timestamps live here and only here.
void write_sidecar(const RunConfig& cfg, const std::filesystem::path& artifact) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& f : cfg.input_files)
    inputs[f.string()] = git_blob_sha1_file(f);
  const auto now = std::chrono::system_clock::now();
  nlohmann::json meta{
      {"command", cfg.command},
      {"seed", cfg.seed},
      {"config", cfg.raw},
      {"inputs", inputs},
      {"created_unix",
       std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
           .count()},
  };
  write_text_file(artifact.string() + ".meta.json", meta.dump(2) + "\n");
}

std::filesystem::path artifact_path(const RunConfig& cfg,
                                    const std::string& name) {
  return cfg.output_dir / name;
}

std::string indexed_name(const char* stem, std::size_t i, const char* ext) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.%s", stem, i, ext);
  return buf;
}

int cmd_simulate(const RunConfig& cfg) {
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.horizon = cfg.horizon;
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    const Path p = simulate_bm(cfg.seed, i, sim);
    const auto file = artifact_path(cfg, indexed_name("path", i, "csv"));
    std::ofstream out(file, std::ios::binary);
    export_path_csv(p, out);
    out.close();
    write_sidecar(cfg, file);
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.horizon = cfg.horizon;
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    const Path p = simulate_bm(cfg.seed, i, sim);
    const MartingaleSeries dir = evaluate_direct(cfg.spec, p);
    const MartingaleSeries integ = evaluate_integral(cfg.spec, p);
    const auto file = artifact_path(cfg, indexed_name("series", i, "csv"));
    std::ofstream out(file, std::ios::binary);
    export_series_csv(p, dir, integ, out);
    out.close();
    write_sidecar(cfg, file);
  }
  return 0;
}

int cmd_recover(const RunConfig& cfg) {
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.horizon = cfg.horizon;
  const Exec exec = cfg.serial ? Exec::serial : Exec::parallel;
  std::vector<double> probes = cfg.probes;
  if (probes.empty())
    for (double c : {0.25, 0.5, 0.75, 1.0, 1.25, 1.5})
      probes.push_back(c - 0.5 * cfg.bin_width);
  const auto pts = recover_f_batch(cfg.spec, cfg.n_paths, cfg.seed, sim, probes,
                                   cfg.bin_width, exec);
  std::string buf = "x,f_hat,occupancy\n";
  char line[160];
  for (const auto& pt : pts) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%zu\n", pt.x_probe,
                  pt.estimate, pt.occupancy);
    buf += line;
  }
  const auto file = artifact_path(cfg, "recovered_f.csv");
  write_text_file(file, buf);
  write_sidecar(cfg, file);
  return 0;
}

int cmd_detect(RunConfig cfg) {
  GridFunction grid;
  if (!cfg.grid_file.empty()) {
    std::ifstream in(cfg.grid_file);
    if (!in) throw UsageError("detect: cannot open grid file " +
                              cfg.grid_file.string());
    grid = read_grid_csv(in);
    cfg.input_files.push_back(cfg.grid_file);
  } else {
    // No grid supplied: tabulate the configured spec and detect that
    // (round-trip mode). The grid is itself an artifact.
    GridSpec gs;
    grid = build_grid(cfg.spec, gs);
    const auto gfile = artifact_path(cfg, "grid.csv");
    std::ofstream out(gfile, std::ios::binary);
    write_grid_csv(grid, out);
    out.close();
    write_sidecar(cfg, gfile);
  }
  const DetectionReport rep = detect_ay_form(grid, DetectConfig{});
  const auto file = artifact_path(cfg, "detection_report.json");
  write_text_file(file, rep.to_json().dump(2) + "\n");
  write_sidecar(cfg, file);
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  SuiteConfig sc;
  sc.seed = cfg.seed;
  sc.exec = cfg.serial ? Exec::serial : Exec::parallel;
  sc.only = cfg.test_selection;
  const std::vector<TestReport> reports = [&] {
    try {
      return run_suite(sc);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());  // an unknown selection is a config error
    }
  }();
  for (const auto& r : reports) {
    std::string stem = r.name.substr(0, r.name.find(':'));
    const auto file = artifact_path(cfg, "report_" + stem + ".json");
    write_text_file(file, r.to_json().dump(2) + "\n");
    write_sidecar(cfg, file);
  }
  {
    std::ostringstream os;
    write_suite_summary_csv(reports, os);
    const auto file = artifact_path(cfg, "summary.csv");
    write_text_file(file, os.str());
    write_sidecar(cfg, file);
  }
  for (const auto& r : reports)
    std::printf("%-60s %s\n", r.name.c_str(), to_string(r.verdict));
  return exit_code_for(reports);
}

int cmd_stop_law(const RunConfig& cfg) {
  StatConfig stat;
  stat.dt = cfg.dt;
  stat.exec = cfg.serial ? Exec::serial : Exec::parallel;
  auto [samples, report] =
      exit_max_law_run(cfg.x, cfg.y, cfg.n_paths, cfg.seed, stat);
  std::string buf = "side,max_value\n";
  char line[96];
  for (const auto& s : samples) {
    std::snprintf(line, sizeof(line), "%s,%.17g\n",
                  s.side == StopKind::exit_upper ? "exit_upper" : "exit_lower",
                  s.max_value);
    buf += line;
  }
  const auto sfile = artifact_path(cfg, "exit_law_samples.csv");
  write_text_file(sfile, buf);
  write_sidecar(cfg, sfile);
  const auto rfile = artifact_path(cfg, "stop_law_report.json");
  write_text_file(rfile, report.to_json().dump(2) + "\n");
  write_sidecar(cfg, rfile);
  std::printf("%-60s %s\n", report.name.c_str(), to_string(report.verdict));
  return exit_code_for({report});
}

}  // namespace

int exit_code_for(const std::vector<TestReport>& reports) {
  bool any_fail = false, any_inconclusive = false;
  for (const auto& r : reports) {
    if (r.verdict == Verdict::fail) any_fail = true;
    if (r.verdict == Verdict::inconclusive) any_inconclusive = true;
  }
  if (any_fail) return 1;
  if (any_inconclusive) return 3;
  return 0;
}

RunConfig parse_config(const nlohmann::json& doc,
                       const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.raw = doc;
  try {
    cfg.command = doc.value("command", std::string{});
    if (doc.contains("spec")) {
      const auto& s = doc.at("spec");
      const std::string variant = s.value("variant", std::string("max"));
      if (variant == "max")
        cfg.spec.variant = Variant::max;
      else if (variant == "min")
        cfg.spec.variant = Variant::min;
      else if (variant == "local_time")
        cfg.spec.variant = Variant::local_time;
      else
        throw UsageError("unknown variant: " + variant);
      if (s.contains("f")) cfg.spec.f = RealFunction::from_json(s.at("f"), base_dir);
      cfg.spec.c = s.value("c", 0.0);
    }
    cfg.n_paths = doc.value("n_paths", std::size_t{1});
    cfg.dt = doc.value("dt", 1e-4);
    cfg.horizon = doc.value("horizon", 1.0);
    cfg.seed = doc.value("seed", std::uint64_t{20240912});
    if (doc.contains("out"))
      cfg.output_dir = doc.at("out").get<std::string>();
    if (doc.contains("only"))
      cfg.test_selection = doc.at("only").get<std::vector<std::string>>();
    cfg.jobs = doc.value("jobs", 0);
    cfg.serial = doc.value("serial", false);
    if (doc.contains("grid")) {
      std::filesystem::path p = doc.at("grid").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.grid_file = p;
    }
    cfg.x = doc.value("x", 1.0);
    cfg.y = doc.value("y", 2.0);
    if (doc.contains("probes"))
      cfg.probes = doc.at("probes").get<std::vector<double>>();
    cfg.bin_width = doc.value("bin_width", 0.05);
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  static const char* commands[] = {"simulate", "evaluate", "recover",
                                   "detect",   "verify",   "stop-law"};
  bool known = false;
  for (const char* c : commands)
    if (cfg.command == c) known = true;
  if (!known) throw UsageError("unknown command: '" + cfg.command + "'");
  if (!(cfg.dt > 0.0)) throw UsageError("dt must be > 0");
  if (!(cfg.dt <= cfg.horizon)) throw UsageError("dt must be <= horizon");
  if (cfg.n_paths < 1) throw UsageError("n_paths must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw UsageError("cannot create output dir: " + ec.message());
  const auto probe = cfg.output_dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw UsageError("output dir not writable: " +
                               cfg.output_dir.string());
  }
  std::filesystem::remove(probe, ec);
}

int run(const RunConfig& cfg) {
  validate(cfg);
#ifdef _OPENMP
  if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#endif
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "evaluate") return cmd_evaluate(cfg);
  if (cfg.command == "recover") return cmd_recover(cfg);
  if (cfg.command == "detect") return cmd_detect(cfg);
  if (cfg.command == "verify") return cmd_verify(cfg);
  if (cfg.command == "stop-law") return cmd_stop_law(cfg);
  throw UsageError("unknown command: '" + cfg.command + "'");
}

}  // namespace maxmart
