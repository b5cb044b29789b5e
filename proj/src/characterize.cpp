#include "maxmart/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace maxmart {

bool GridFunction::defined(std::size_t ix, std::size_t iy) const {
  return !std::isnan(at(ix, iy));
}

GridFunction build_grid(const MaxMartingaleSpec& spec, const GridSpec& gs) {
  if (spec.variant != Variant::max)
    throw std::invalid_argument("build_grid: max variant only");
  DirectEvaluator eval(spec);
  const bool singular = spec.f.singular_at_zero();
  return build_grid_from(
      [&](double x, double y) {
        if (singular && y == 0.0 && x < 0.0)
          return std::numeric_limits<double>::quiet_NaN();
        return eval.at(x, y);
      },
      gs);
}

namespace {

struct ColumnFit {
  std::size_t j = 0;       // index into y_grid
  double y = 0.0;
  double slope = 0.0;      // f_hat(y)
  double intercept = 0.0;
  double residual = 0.0;   // max |H - fit| over the column
  double span = 0.0;       // max H - min H over the column
  bool nonaffine = false;
  bool jump = false;
  bool chain_bad = false;
};

ColumnFit fit_column(const GridFunction& g, std::size_t j) {
  ColumnFit fit;
  fit.j = j;
  fit.y = g.y_grid[j];
  double sx = 0.0, sh = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.x_grid.size(); ++i) {
    if (!g.defined(i, j)) continue;
    sx += g.x_grid[i];
    sh += g.at(i, j);
    ++n;
  }
  const double mx = sx / static_cast<double>(n);
  const double mh = sh / static_cast<double>(n);
  double sxx = 0.0, sxh = 0.0;
  double h_min = std::numeric_limits<double>::infinity();
  double h_max = -h_min;
  for (std::size_t i = 0; i < g.x_grid.size(); ++i) {
    if (!g.defined(i, j)) continue;
    const double dx = g.x_grid[i] - mx;
    const double h = g.at(i, j);
    sxx += dx * dx;
    sxh += dx * (h - mh);
    h_min = std::min(h_min, h);
    h_max = std::max(h_max, h);
  }
  fit.slope = sxh / sxx;
  fit.intercept = mh - fit.slope * mx;
  fit.span = h_max - h_min;
  for (std::size_t i = 0; i < g.x_grid.size(); ++i) {
    if (!g.defined(i, j)) continue;
    const double r =
        std::fabs(g.at(i, j) - (fit.intercept + fit.slope * g.x_grid[i]));
    fit.residual = std::max(fit.residual, r);
  }
  return fit;
}

std::size_t count_defined(const GridFunction& g, std::size_t j) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.x_grid.size(); ++i)
    if (g.defined(i, j)) ++n;
  return n;
}

}  // namespace

DetectionReport detect_ay_form(const GridFunction& h, double tol) {
  DetectConfig cfg;
  cfg.tol = tol;
  return detect_ay_form(h, cfg);
}

DetectionReport detect_ay_form(const GridFunction& g, const DetectConfig& cfg) {
  if (g.x_grid.empty() || g.y_grid.empty() ||
      g.cells.size() != g.x_grid.size() * g.y_grid.size())
    throw std::domain_error("detect_ay_form: degenerate grid");
  const double x_step =
      g.x_grid.size() > 1 ? g.x_grid[1] - g.x_grid[0] : 1.0;
  const double near = 1e-9 * std::max(1.0, x_step);

  // c_hat is read off the (0, 0) cell, which the closed form pins exactly.
  std::size_t ix0 = g.x_grid.size(), iy0 = g.y_grid.size();
  for (std::size_t i = 0; i < g.x_grid.size(); ++i)
    if (std::fabs(g.x_grid[i]) <= near) ix0 = i;
  for (std::size_t j = 0; j < g.y_grid.size(); ++j)
    if (std::fabs(g.y_grid[j]) <= near) iy0 = j;
  if (ix0 == g.x_grid.size() || iy0 == g.y_grid.size() ||
      !g.defined(ix0, iy0))
    throw std::domain_error("detect_ay_form: grid lacks the (0,0) cell");

  DetectionReport rep;
  rep.c_hat = g.at(ix0, iy0);

  std::vector<ColumnFit> fits;
  for (std::size_t j = 0; j < g.y_grid.size(); ++j) {
    if (count_defined(g, j) < 3) continue;  // too thin to fit
    fits.push_back(fit_column(g, j));
  }
  if (fits.size() < 3)
    throw std::domain_error("detect_ay_form: fewer than 3 fittable columns");
  rep.columns_fitted = fits.size();

  double h_scale = 1.0;
  for (const double c : g.cells)
    if (!std::isnan(c)) h_scale = std::max(h_scale, std::fabs(c));

  for (auto& fit : fits)
    fit.nonaffine = fit.residual > cfg.tol * std::max(1.0, fit.span);

  // F_hat comes out of the intercepts: intercept = F(y) - f(y) y + c.
  std::vector<double> f_hat(fits.size()), cap(fits.size());
  for (std::size_t k = 0; k < fits.size(); ++k) {
    f_hat[k] = fits[k].slope;
    cap[k] = fits[k].intercept + fits[k].slope * fits[k].y;  // F_hat + c_hat
  }

  // Isolated slope jumps mark discontinuity columns (the grid Gamma).
  double f_scale = 1.0;
  for (double v : f_hat) f_scale = std::max(f_scale, std::fabs(v));
  const double jump_floor = 1e-6 * f_scale;
  std::vector<double> df(fits.size(), 0.0);
  for (std::size_t k = 1; k < fits.size(); ++k)
    df[k] = f_hat[k] - f_hat[k - 1];
  for (std::size_t k = 1; k < fits.size(); ++k) {
    if (fits[k].nonaffine || fits[k - 1].nonaffine) continue;
    double neighbor = 0.0;
    if (k >= 2) neighbor = std::max(neighbor, std::fabs(df[k - 1]));
    if (k + 1 < fits.size()) neighbor = std::max(neighbor, std::fabs(df[k + 1]));
    if (std::fabs(df[k]) > 10.0 * neighbor + jump_floor) fits[k].jump = true;
  }

  // Integral consistency: differences of F_hat must match the trapezoid of
  // f_hat, panel by panel, up to a curvature allowance. This is the check
  // that ties the intercept levels to the slopes.
  for (std::size_t k = 1; k < fits.size(); ++k) {
    if (fits[k].nonaffine || fits[k - 1].nonaffine) continue;
    if (fits[k].jump || fits[k - 1].jump) continue;
    const double dy = fits[k].y - fits[k - 1].y;
    const double mismatch =
        std::fabs((cap[k] - cap[k - 1]) - 0.5 * (f_hat[k] + f_hat[k - 1]) * dy);
    double curv = 0.0;
    if (k + 1 < fits.size() && !fits[k + 1].jump && !fits[k + 1].nonaffine)
      curv = std::max(curv, std::fabs(f_hat[k + 1] - 2.0 * f_hat[k] + f_hat[k - 1]));
    if (k >= 2 && !fits[k - 2].jump && !fits[k - 2].nonaffine)
      curv = std::max(curv, std::fabs(f_hat[k] - 2.0 * f_hat[k - 1] + f_hat[k - 2]));
    const double allowance =
        cfg.tol * std::max(1.0, h_scale) + 2.0 * std::fabs(dy) * curv;
    if (mismatch > allowance) fits[k].chain_bad = true;
  }

  std::size_t n_bad = 0;
  for (const auto& fit : fits) {
    if (fit.nonaffine) ++rep.nonaffine_columns;
    if (fit.jump) ++rep.jump_columns;
    if (fit.chain_bad) ++rep.chain_columns;
    if (fit.nonaffine || fit.jump || fit.chain_bad) ++n_bad;
  }
  rep.bad_column_fraction =
      static_cast<double>(n_bad) / static_cast<double>(fits.size());

  // Diagonal identity H(y, y) = F_hat(y) + c_hat; Gamma may not touch the
  // diagonal, so every good column with a diagonal cell must satisfy it.
  bool diag_seen = false;
  bool diag_ok = true;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const double y = fits[k].y;
    // locate y on the x axis
    const auto it = std::lower_bound(g.x_grid.begin(), g.x_grid.end(), y - near);
    if (it == g.x_grid.end() || std::fabs(*it - y) > near) continue;
    const std::size_t i = static_cast<std::size_t>(it - g.x_grid.begin());
    if (!g.defined(i, fits[k].j)) continue;
    diag_seen = true;
    if (fits[k].nonaffine || fits[k].jump || fits[k].chain_bad) continue;
    const double diff = std::fabs(g.at(i, fits[k].j) - cap[k]);
    if (diff > cfg.tol * std::max(1.0, std::fabs(cap[k]))) diag_ok = false;
  }
  if (!diag_seen)
    throw std::domain_error("detect_ay_form: grid has no diagonal cells");
  rep.diagonal_ok = diag_ok;

  double residual_good = 0.0;
  for (const auto& fit : fits) {
    if (fit.nonaffine || fit.jump || fit.chain_bad) continue;
    residual_good = std::max(residual_good, fit.residual);
    rep.f_y.push_back(fit.y);
    rep.f_hat.push_back(fit.slope);
  }
  rep.residual_max = residual_good;

  rep.is_ay = rep.nonaffine_columns == 0 &&
              n_bad <= static_cast<std::size_t>(cfg.max_bad_columns) &&
              rep.residual_max <= cfg.tol * std::max(1.0, h_scale) &&
              rep.diagonal_ok;
  return rep;
}

RealFunction DetectionReport::f_table() const {
  if (f_y.empty()) throw std::runtime_error("f_table: no recovered columns");
  std::vector<double> xs, fs;
  if (f_y.front() > 0.0) {
    xs.push_back(0.0);
    fs.push_back(f_hat.front());  // constant extension below the first column
  }
  xs.insert(xs.end(), f_y.begin(), f_y.end());
  fs.insert(fs.end(), f_hat.begin(), f_hat.end());
  return RealFunction::tabulated(std::move(xs), std::move(fs));
}

nlohmann::json DetectionReport::to_json() const {
  return nlohmann::json{{"is_ay", is_ay},
                        {"c_hat", c_hat},
                        {"residual_max", residual_max},
                        {"bad_column_fraction", bad_column_fraction},
                        {"diagonal_ok", diagonal_ok},
                        {"columns_fitted", columns_fitted},
                        {"nonaffine_columns", nonaffine_columns},
                        {"jump_columns", jump_columns},
                        {"chain_columns", chain_columns},
                        {"f_table", {{"y", f_y}, {"f_hat", f_hat}}}};
}

namespace {

double recover_impl(const std::vector<Path>& paths,
                    const std::vector<MartingaleSeries>& series, double probe,
                    double bin_width, bool local_time_mode) {
  if (paths.size() != series.size())
    throw std::invalid_argument("recover: paths/series size mismatch");
  if (!(bin_width > 0.0))
    throw std::invalid_argument("recover: bin_width must be > 0");
  double num = 0.0, den = 0.0;
  std::size_t occupancy = 0;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const Path& path = paths[p];
    const MartingaleSeries& s = series[p];
    if (s.values.size() != path.values.size())
      throw std::invalid_argument("recover: series does not match its path");
    for (std::size_t i = 0; i + 1 < path.values.size(); ++i) {
      const double stat =
          local_time_mode ? path.local_time[i] : path.running_max[i];
      if (stat < probe || stat >= probe + bin_width) continue;
      const double db = path.values[i + 1] - path.values[i];
      const double dh = s.values[i + 1] - s.values[i];
      if (local_time_mode) {
        const double v = path.values[i];
        const double sgn = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        num -= dh * sgn * db;
      } else {
        num += dh * db;
      }
      den += db * db;
      ++occupancy;
    }
  }
  if (den == 0.0) {
    std::ostringstream os;
    os << "recover: empty bin [" << probe << ", " << probe + bin_width
       << "): occupancy " << occupancy;
    throw InsufficientDataError(os.str(), occupancy);
  }
  return num / den;
}

}  // namespace

double recover_f(const std::vector<Path>& paths,
                 const std::vector<MartingaleSeries>& series, double x_probe,
                 double bin_width) {
  return recover_impl(paths, series, x_probe, bin_width, false);
}

double recover_g(const std::vector<Path>& paths,
                 const std::vector<MartingaleSeries>& series, double l_probe,
                 double bin_width) {
  return recover_impl(paths, series, l_probe, bin_width, true);
}

std::vector<RecoveredPoint> recover_f_batch(const MaxMartingaleSpec& spec,
                                            std::size_t n_paths,
                                            std::uint64_t seed,
                                            const SimConfig& sim,
                                            const std::vector<double>& probes,
                                            double bin_width, Exec exec) {
  if (spec.variant != Variant::max)
    throw std::invalid_argument("recover_f_batch: max variant only");
  if (!(bin_width > 0.0))
    throw std::invalid_argument("recover_f_batch: bin_width must be > 0");
  const std::size_t nb = probes.size();
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(sim.horizon / sim.dt));

  struct PartialSums {
    std::vector<double> num, den;
    std::vector<std::size_t> cnt;
  };
  std::vector<PartialSums> slots(n_paths);

  for_each_path(static_cast<std::int64_t>(n_paths), exec, [&](std::int64_t p) {
    PartialSums part;
    part.num.assign(nb, 0.0);
    part.den.assign(nb, 0.0);
    part.cnt.assign(nb, 0);
    BrownianWalker w(seed, static_cast<std::uint64_t>(p), sim.dt,
                     sim.lt_epsilon);
    DirectEvaluator eval(spec);
    double prev_h = eval.at(0.0, 0.0);
    for (std::size_t s = 0; s < steps; ++s) {
      const double stat0 = w.run_max();
      const double v0 = w.value();
      w.advance();
      const double h1 = eval.at(w.value(), w.run_max());
      for (std::size_t b = 0; b < nb; ++b) {
        if (stat0 >= probes[b] && stat0 < probes[b] + bin_width) {
          const double db = w.value() - v0;
          part.num[b] += (h1 - prev_h) * db;
          part.den[b] += db * db;
          ++part.cnt[b];
          break;  // probes are disjoint in practice
        }
      }
      prev_h = h1;
    }
    slots[static_cast<std::size_t>(p)] = std::move(part);
  });

  std::vector<double> num(nb, 0.0), den(nb, 0.0);
  std::vector<std::size_t> cnt(nb, 0);
  for (const auto& part : slots)
    for (std::size_t b = 0; b < nb; ++b) {
      num[b] += part.num[b];
      den[b] += part.den[b];
      cnt[b] += part.cnt[b];
    }

  std::vector<RecoveredPoint> out(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    if (den[b] == 0.0) {
      std::ostringstream os;
      os << "recover_f_batch: empty bin [" << probes[b] << ", "
         << probes[b] + bin_width << "): occupancy " << cnt[b];
      throw InsufficientDataError(os.str(), cnt[b]);
    }
    out[b] = RecoveredPoint{probes[b], num[b] / den[b], cnt[b]};
  }
  return out;
}

RoundTripResult round_trip(const RealFunction& f, double c, const GridSpec& gs,
                           const DetectConfig& cfg) {
  MaxMartingaleSpec spec{Variant::max, f, c};
  const GridFunction grid = build_grid(spec, gs);
  RoundTripResult out;
  out.report = detect_ay_form(grid, cfg);
  const bool singular = f.singular_at_zero();
  for (std::size_t k = 0; k < out.report.f_y.size(); ++k) {
    const double y = out.report.f_y[k];
    if (singular && y == 0.0) continue;
    const double err = std::fabs(out.report.f_hat[k] - evaluate(f, y));
    out.f_max_error = std::max(out.f_max_error, err);
  }
  return out;
}

void write_grid_csv(const GridFunction& g, std::ostream& out) {
  std::string buf;
  char num[64];
  buf += "y\\x";
  for (const double x : g.x_grid) {
    std::snprintf(num, sizeof(num), ",%.17g", x);
    buf += num;
  }
  buf += "\n";
  for (std::size_t j = 0; j < g.y_grid.size(); ++j) {
    std::snprintf(num, sizeof(num), "%.17g", g.y_grid[j]);
    buf += num;
    for (std::size_t i = 0; i < g.x_grid.size(); ++i) {
      if (g.defined(i, j)) {
        std::snprintf(num, sizeof(num), ",%.17g", g.at(i, j));
        buf += num;
      } else {
        buf += ",";
      }
    }
    buf += "\n";
  }
  out << buf;
}

GridFunction read_grid_csv(std::istream& in) {
  GridFunction g;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_grid_csv: empty input");
  {
    std::istringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
      if (first) {
        first = false;
        continue;  // "y\x" corner label
      }
      g.x_grid.push_back(std::stod(cell));
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    bool first = true;
    while (std::getline(row, cell, ',')) {
      if (first) {
        g.y_grid.push_back(std::stod(cell));
        first = false;
        continue;
      }
      vals.push_back(cell.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : std::stod(cell));
    }
    vals.resize(g.x_grid.size(), std::numeric_limits<double>::quiet_NaN());
    rows.push_back(std::move(vals));
  }
  g.cells.reserve(g.x_grid.size() * g.y_grid.size());
  for (const auto& row : rows)
    g.cells.insert(g.cells.end(), row.begin(), row.end());
  if (g.cells.size() != g.x_grid.size() * g.y_grid.size())
    throw std::runtime_error("read_grid_csv: ragged grid");
  return g;
}

}  // namespace maxmart
