#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxmart/batch.hpp"
#include "maxmart/maxmart.hpp"

namespace maxmart {

// H tabulated on the domain D = {(x, y): y >= max(x, 0)}; cells outside D
// (or otherwise unavailable) hold NaN. Rows are indexed by y, columns by x.
struct GridFunction {
  std::vector<double> x_grid;  // increasing
  std::vector<double> y_grid;  // increasing, nonnegative
  std::vector<double> cells;   // row-major: cells[j * x_grid.size() + i]

  double& at(std::size_t ix, std::size_t iy) {
    return cells[iy * x_grid.size() + ix];
  }
  double at(std::size_t ix, std::size_t iy) const {
    return cells[iy * x_grid.size() + ix];
  }
  bool defined(std::size_t ix, std::size_t iy) const;
};

// Aligned grid covering x in [x_min, y_max], y in [0, y_max] at a common
// step, so every y value also appears on the x axis (diagonal cells exist).
struct GridSpec {
  double x_min = -2.0;
  double y_max = 2.0;
  double step = 0.02;
};

// Tabulates the closed form of `spec` on the grid. For f singular at 0 the
// off-diagonal cells of the y = 0 column are left undefined.
GridFunction build_grid(const MaxMartingaleSpec& spec, const GridSpec& gs);

// Builds H(x, y) = g(x, y) on the same aligned grid (test surfaces).
template <class G>
GridFunction build_grid_from(const G& g, const GridSpec& gs);

struct DetectConfig {
  double tol = 1e-8;
  int max_bad_columns = 1;  // grid analogue of |Gamma_2| = 0
};

struct DetectionReport {
  bool is_ay = false;
  double c_hat = 0.0;
  double residual_max = 0.0;        // over good columns
  double bad_column_fraction = 0.0;
  bool diagonal_ok = false;
  std::vector<double> f_y;     // y values of recovered f (good columns)
  std::vector<double> f_hat;   // fitted slopes
  std::size_t columns_fitted = 0;
  std::size_t nonaffine_columns = 0;
  std::size_t jump_columns = 0;
  std::size_t chain_columns = 0;

  // Recovered f as a tabulated function (constant extension below the first
  // fitted column).
  RealFunction f_table() const;
  nlohmann::json to_json() const;
};

// Decides whether a tabulated H has the Azema-Yor form. Per y-column the
// defined cells are fitted with an affine function of x: the slope is f_hat,
// and the intercept pins F_hat(y) = intercept + slope*y - c_hat exactly.
// Checks: per-column affinity; an integral-consistency pass comparing
// F_hat differences with the trapezoid of f_hat (this is what ties levels to
// slopes); isolated slope jumps are admitted as bad columns up to the cap;
// and the diagonal identity H(y,y) = F_hat(y) + c_hat.
DetectionReport detect_ay_form(const GridFunction& h, double tol);
DetectionReport detect_ay_form(const GridFunction& h, const DetectConfig& cfg);

// Thrown by recover_f when a bin contains no increments.
class InsufficientDataError : public std::runtime_error {
 public:
  InsufficientDataError(const std::string& msg, std::size_t occupancy)
      : std::runtime_error(msg), occupancy_(occupancy) {}
  std::size_t occupancy() const noexcept { return occupancy_; }

 private:
  std::size_t occupancy_;
};

// Covariation-density estimator of f at x_probe: sum of dH*dB over sum of
// dB^2, over all steps of all paths whose running max sits in
// [x_probe, x_probe + bin_width).
double recover_f(const std::vector<Path>& paths,
                 const std::vector<MartingaleSeries>& series, double x_probe,
                 double bin_width);

// Sign-flipped analogue for the local-time variant: recovers g from
// dH = -g(L) sgn(B) dB, binning on L.
double recover_g(const std::vector<Path>& paths,
                 const std::vector<MartingaleSeries>& series, double l_probe,
                 double bin_width);

struct RecoveredPoint {
  double x_probe = 0.0;
  double estimate = 0.0;
  std::size_t occupancy = 0;
};

// Streaming batch recovery (no stored paths): simulates n paths of the spec,
// evaluates the direct form on the fly and accumulates the per-bin sums.
std::vector<RecoveredPoint> recover_f_batch(const MaxMartingaleSpec& spec,
                                            std::size_t n_paths,
                                            std::uint64_t seed,
                                            const SimConfig& sim,
                                            const std::vector<double>& probes,
                                            double bin_width, Exec exec);

struct RoundTripResult {
  DetectionReport report;
  double f_max_error = 0.0;  // over good columns, off discontinuities
};

RoundTripResult round_trip(const RealFunction& f, double c, const GridSpec& gs,
                           const DetectConfig& cfg = {});

// CSV layout: first row "y\x" then the x grid; one row per y with empty
// cells outside D.
void write_grid_csv(const GridFunction& g, std::ostream& out);
GridFunction read_grid_csv(std::istream& in);

template <class G>
GridFunction build_grid_from(const G& g, const GridSpec& gs) {
  GridFunction out;
  const double h = gs.step;
  const long k_min = std::lround(gs.x_min / h);
  const long k_max = std::lround(gs.y_max / h);
  if (k_min > 0 || k_max < 1)
    throw std::invalid_argument("build_grid_from: grid must span x <= 0 < y_max");
  for (long k = k_min; k <= k_max; ++k)
    out.x_grid.push_back(static_cast<double>(k) * h);
  for (long j = 0; j <= k_max; ++j)
    out.y_grid.push_back(static_cast<double>(j) * h);
  out.cells.assign(out.x_grid.size() * out.y_grid.size(),
                   std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < out.y_grid.size(); ++j) {
    for (std::size_t i = 0; i < out.x_grid.size(); ++i) {
      const long k = k_min + static_cast<long>(i);
      if (k > static_cast<long>(j)) continue;  // x > y: outside D
      out.at(i, j) = g(out.x_grid[i], out.y_grid[j]);
    }
  }
  return out;
}

}  // namespace maxmart
