#include "maxmart/maxmart.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace maxmart {

std::string MaxMartingaleSpec::label() const {
  std::ostringstream os;
  switch (variant) {
    case Variant::max: os << "max"; break;
    case Variant::min: os << "min"; break;
    case Variant::local_time: os << "local_time"; break;
  }
  os << "[" << f.label() << ",c=" << c << "]";
  return os.str();
}

DirectEvaluator::DirectEvaluator(const MaxMartingaleSpec& spec)
    : spec_(spec), singular_(spec.f.singular_at_zero()) {
  refresh(0.0);
}

void DirectEvaluator::refresh(double stat) {
  cached_stat_ = stat;
  cached_cap_ = antiderivative_at(spec_.f, stat) + spec_.c;
  cached_f_ = (singular_ && stat == 0.0) ? 0.0 : evaluate(spec_.f, stat);
}

double DirectEvaluator::at(double value, double stat) {
  if (stat != cached_stat_) refresh(stat);
  const double gap = stat - value;
  if (gap == 0.0) return cached_cap_;
  if (singular_ && stat == 0.0) {
    // f blows up at 0; in continuous time the statistic is positive for all
    // t > 0, so these grid nodes get the diagonal limit F(0) + c.
    saw_singular_ = true;
    return cached_cap_;
  }
  return cached_cap_ - cached_f_ * gap;
}

double DirectEvaluator::slope_at(double stat) {
  if (stat != cached_stat_) refresh(stat);
  if (singular_ && stat == 0.0) {
    saw_singular_ = true;
    return 0.0;
  }
  return cached_f_;
}

double h_value(const MaxMartingaleSpec& spec, double x, double y) {
  if (spec.variant != Variant::max)
    throw std::domain_error(
        "h_value: defined for the max variant; use evaluate_direct for min "
        "and local-time drivers");
  if (!(y >= 0.0) || !(y >= x))
    throw std::domain_error("h_value: (x, y) outside D = {y >= max(x, 0)}");
  DirectEvaluator eval(spec);
  return eval.at(x, y);
}

namespace {

void require_local_time(const MaxMartingaleSpec& spec, const Path& path) {
  if (spec.variant == Variant::local_time &&
      path.local_time.size() != path.values.size())
    throw std::runtime_error(
        "evaluate: local_time series not populated on this path");
}

std::optional<std::string> singular_warning(const MaxMartingaleSpec& spec,
                                            bool saw) {
  if (!saw) return std::nullopt;
  return "f(" + spec.f.label() +
         ") is singular at 0; nodes with the driver statistic at 0 used the "
         "diagonal limit";
}

}  // namespace

MartingaleSeries evaluate_direct(const MaxMartingaleSpec& spec,
                                 const Path& path) {
  require_local_time(spec, path);
  MartingaleSeries s;
  s.dt = path.dt;
  s.form = SeriesForm::direct;
  const std::size_t n = path.values.size();
  s.values.resize(n);
  DirectEvaluator eval(spec);
  switch (spec.variant) {
    case Variant::max:
      for (std::size_t i = 0; i < n; ++i)
        s.values[i] = eval.at(path.values[i], path.running_max[i]);
      break;
    case Variant::min:
      for (std::size_t i = 0; i < n; ++i)
        s.values[i] = eval.at(-path.values[i], path.running_min[i]);
      break;
    case Variant::local_time:
      for (std::size_t i = 0; i < n; ++i)
        s.values[i] = eval.at(path.local_time[i] - std::fabs(path.values[i]),
                              path.local_time[i]);
      break;
  }
  s.warning = singular_warning(spec, eval.saw_singular());
  return s;
}

MartingaleSeries evaluate_integral(const MaxMartingaleSpec& spec,
                                   const Path& path) {
  require_local_time(spec, path);
  MartingaleSeries s;
  s.dt = path.dt;
  s.form = SeriesForm::integral;
  const std::size_t n = path.values.size();
  s.values.resize(n);
  if (n == 0) return s;
  s.values[0] = spec.c;
  DirectEvaluator eval(spec);
  bool nonfinite = false;
  double acc = spec.c;
  switch (spec.variant) {
    case Variant::max:
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double slope = eval.slope_at(path.running_max[i]);
        acc += slope * (path.values[i + 1] - path.values[i]);
        s.values[i + 1] = acc;
      }
      break;
    case Variant::min:
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double slope = eval.slope_at(path.running_min[i]);
        acc -= slope * (path.values[i + 1] - path.values[i]);
        s.values[i + 1] = acc;
      }
      break;
    case Variant::local_time:
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double v = path.values[i];
        const double sgn = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        const double slope = eval.slope_at(path.local_time[i]);
        acc -= slope * sgn * (path.values[i + 1] - path.values[i]);
        s.values[i + 1] = acc;
      }
      break;
  }
  if (!std::isfinite(acc)) nonfinite = true;
  if (nonfinite)
    s.warning = "integral form produced non-finite values (f unbounded on the "
                "realized driver range)";
  else
    s.warning = singular_warning(spec, eval.saw_singular());
  return s;
}

double terminal_limit(const MaxMartingaleSpec& spec) {
  const double total = total_integral(spec.f);
  if (!std::isfinite(total))
    throw std::domain_error("terminal_limit: F(infinity) diverges");
  return total + spec.c;
}

void export_series_csv(const Path& path, const MartingaleSeries& direct,
                       const MartingaleSeries& integral, std::ostream& out) {
  if (direct.values.size() != path.values.size() ||
      integral.values.size() != path.values.size())
    throw std::invalid_argument("export_series_csv: size mismatch");
  std::string buf;
  buf.reserve(96 * path.values.size() + 48);
  buf += "t,H_direct,H_integral,driver,running_max_of_H\n";
  double run_max_h = direct.values.empty() ? 0.0 : direct.values[0];
  char line[224];
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    run_max_h = std::max(run_max_h, direct.values[i]);
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  path.dt * static_cast<double>(i), direct.values[i],
                  integral.values[i], path.values[i], run_max_h);
    buf += line;
  }
  out << buf;
}

}  // namespace maxmart
