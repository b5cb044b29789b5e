#include "maxmart/functions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace maxmart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_table(const std::vector<double>& xs, const std::vector<double>& fs,
                 const char* what) {
  if (xs.size() != fs.size() || xs.size() < 2)
    throw std::invalid_argument(std::string(what) +
                                ": need at least two (x, f) pairs");
  if (xs.front() != 0.0)
    throw std::invalid_argument(std::string(what) + ": grid must start at 0");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]))
      throw std::invalid_argument(std::string(what) +
                                  ": grid must be strictly increasing");
}

// Linear interpolation with constant extrapolation beyond the grid.
double interp_table(const std::vector<double>& xs, const std::vector<double>& fs,
                    double x) {
  if (x <= xs.front()) return fs.front();
  if (x >= xs.back()) return fs.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
  return fs[k] + w * (fs[k + 1] - fs[k]);
}

// Exact integral of the piecewise-linear interpolant on [0, y].
double integral_table(const std::vector<double>& xs,
                      const std::vector<double>& fs, double y) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    if (y <= xs[k]) return acc;
    const double hi = std::min(y, xs[k + 1]);
    const double f_hi = interp_table(xs, fs, hi);
    acc += 0.5 * (fs[k] + f_hi) * (hi - xs[k]);
    if (y <= xs[k + 1]) return acc;
  }
  return acc + fs.back() * (y - xs.back());
}

}  // namespace

RealFunction::RealFunction(FunctionKind kind, double param,
                           std::vector<double> xs, std::vector<double> fs,
                           double scale)
    : kind_(kind), param_(param), xs_(std::move(xs)), fs_(std::move(fs)),
      scale_(scale) {}

RealFunction RealFunction::constant(double value) {
  return RealFunction(FunctionKind::constant, value, {}, {}, 1.0);
}

RealFunction RealFunction::indicator_below(double bound) {
  if (!(bound >= 0.0))
    throw std::invalid_argument("indicator_below: bound must be >= 0");
  return RealFunction(FunctionKind::indicator_below, bound, {}, {}, 1.0);
}

RealFunction RealFunction::exp_decay(double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("exp_decay: lambda must be > 0");
  return RealFunction(FunctionKind::exp_decay, lambda, {}, {}, 1.0);
}

RealFunction RealFunction::power(double p) {
  if (!(p > -1.0))
    throw std::invalid_argument("power: need p > -1 for local integrability");
  return RealFunction(FunctionKind::power, p, {}, {}, 1.0);
}

RealFunction RealFunction::piecewise_linear(std::vector<double> knots_x,
                                            std::vector<double> knots_f) {
  check_table(knots_x, knots_f, "piecewise_linear");
  return RealFunction(FunctionKind::piecewise_linear, 0.0, std::move(knots_x),
                      std::move(knots_f), 1.0);
}

RealFunction RealFunction::tabulated(std::vector<double> grid_x,
                                     std::vector<double> grid_f) {
  check_table(grid_x, grid_f, "tabulated");
  return RealFunction(FunctionKind::tabulated, 0.0, std::move(grid_x),
                      std::move(grid_f), 1.0);
}

RealFunction RealFunction::scaled(double factor) const {
  RealFunction out = *this;
  out.scale_ *= factor;
  return out;
}

bool RealFunction::singular_at_zero() const noexcept {
  return kind_ == FunctionKind::power && param_ < 0.0 && scale_ != 0.0;
}

bool RealFunction::nonnegative() const noexcept {
  if (scale_ == 0.0) return true;
  switch (kind_) {
    case FunctionKind::constant:
      return scale_ * param_ >= 0.0;
    case FunctionKind::indicator_below:
    case FunctionKind::exp_decay:
    case FunctionKind::power:
      return scale_ > 0.0;
    case FunctionKind::piecewise_linear:
    case FunctionKind::tabulated:
      return std::all_of(fs_.begin(), fs_.end(),
                         [this](double v) { return scale_ * v >= 0.0; });
  }
  return false;
}

bool RealFunction::is_zero() const noexcept {
  if (scale_ == 0.0) return true;
  switch (kind_) {
    case FunctionKind::constant:
      return param_ == 0.0;
    case FunctionKind::indicator_below:
      return param_ == 0.0;
    case FunctionKind::piecewise_linear:
    case FunctionKind::tabulated:
      return std::all_of(fs_.begin(), fs_.end(),
                         [](double v) { return v == 0.0; });
    default:
      return false;
  }
}

std::string RealFunction::label() const {
  std::ostringstream os;
  switch (kind_) {
    case FunctionKind::constant: os << "constant(" << param_ << ")"; break;
    case FunctionKind::indicator_below:
      os << "indicator_below(" << param_ << ")";
      break;
    case FunctionKind::exp_decay: os << "exp_decay(" << param_ << ")"; break;
    case FunctionKind::power: os << "power(" << param_ << ")"; break;
    case FunctionKind::piecewise_linear:
      os << "piecewise_linear[" << xs_.size() << "]";
      break;
    case FunctionKind::tabulated: os << "tabulated[" << xs_.size() << "]"; break;
  }
  if (scale_ != 1.0) os << "*" << scale_;
  return os.str();
}

double evaluate(const RealFunction& f, double x) {
  if (!(x >= 0.0))
    throw std::domain_error("evaluate: x must be >= 0");
  double v;
  switch (f.kind_) {
    case FunctionKind::constant:
      v = f.param_;
      break;
    case FunctionKind::indicator_below:
      v = (x < f.param_) ? 1.0 : 0.0;
      break;
    case FunctionKind::exp_decay:
      v = std::exp(-f.param_ * x);
      break;
    case FunctionKind::power:
      if (x == 0.0 && f.param_ < 0.0)
        throw std::domain_error(
            "evaluate: power(p<0) has an integrable singularity at 0");
      v = std::pow(x, f.param_);
      break;
    case FunctionKind::piecewise_linear:
    case FunctionKind::tabulated:
      v = interp_table(f.xs_, f.fs_, x);
      break;
    default:
      throw std::logic_error("evaluate: unknown kind");
  }
  return f.scale_ * v;
}

double antiderivative_closed_form(const RealFunction& f, double y) {
  double v;
  switch (f.kind_) {
    case FunctionKind::constant:
      v = f.param_ * y;
      break;
    case FunctionKind::indicator_below:
      v = std::min(y, f.param_);
      break;
    case FunctionKind::exp_decay:
      v = -std::expm1(-f.param_ * y) / f.param_;
      break;
    case FunctionKind::power:
      v = std::pow(y, f.param_ + 1.0) / (f.param_ + 1.0);
      break;
    case FunctionKind::piecewise_linear:
      v = integral_table(f.xs_, f.fs_, y);
      break;
    default:
      throw std::logic_error("no closed form for this kind");
  }
  return f.scale_ * v;
}

Antiderivative::Antiderivative(RealFunction f, Mode mode)
    : f_(std::move(f)), mode_(mode) {}

double Antiderivative::operator()(double y) const {
  if (!(y >= 0.0))
    throw std::domain_error("antiderivative: y must be >= 0");
  if (y == 0.0) return 0.0;
  if (mode_ == Mode::closed_form && f_.kind() != FunctionKind::tabulated)
    return antiderivative_closed_form(f_, y);
  const RealFunction& f = f_;
  return adaptive_simpson([&f](double x) { return evaluate(f, x); }, 0.0, y,
                          1e-10);
}

double antiderivative_at(const RealFunction& f, double y) {
  if (!(y >= 0.0))
    throw std::domain_error("antiderivative_at: y must be >= 0");
  if (y == 0.0) return 0.0;
  if (f.kind() == FunctionKind::tabulated)
    return Antiderivative(f, Antiderivative::Mode::quadrature)(y);
  return antiderivative_closed_form(f, y);
}

double total_integral(const RealFunction& f) {
  if (!f.nonnegative())
    throw std::domain_error(
        "total_integral: requires f >= 0 (got a sign-changing f)");
  if (f.is_zero()) return 0.0;
  switch (f.kind()) {
    case FunctionKind::constant:
    case FunctionKind::power:
      return kInf;
    case FunctionKind::indicator_below:
      return f.scale() * f.param();
    case FunctionKind::exp_decay:
      return f.scale() / f.param();
    case FunctionKind::piecewise_linear:
    case FunctionKind::tabulated: {
      // Constant extrapolation beyond the grid: finite iff the tail value is 0.
      if (f.knots_f().back() != 0.0) return kInf;
      return antiderivative_at(f, f.knots_x().back());
    }
  }
  throw std::logic_error("total_integral: unknown kind");
}

namespace {

struct SimpsonState {
  int max_depth = 48;
  double worst = 0.0;
};

double simpson_panel(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& g, double a, double fa,
                   double b, double fb, double m, double fm, double whole,
                   double tol, int depth, SimpsonState& st) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = g(lm);
  const double frm = g(rm);
  const double left = simpson_panel(a, fa, m, fm, flm);
  const double right = simpson_panel(m, fm, b, fb, frm);
  const double err = left + right - whole;
  if (std::fabs(err) <= 15.0 * tol || depth >= st.max_depth) {
    if (depth >= st.max_depth)
      st.worst = std::max(st.worst, std::fabs(err) / 15.0);
    return left + right + err / 15.0;
  }
  return simpson_rec(g, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, st) +
         simpson_rec(g, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, st);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& g, double a,
                        double b, double tol) {
  if (a == b) return 0.0;
  const double fa = g(a);
  const double fb = g(b);
  const double m = 0.5 * (a + b);
  const double fm = g(m);
  SimpsonState st;
  const double whole = simpson_panel(a, fa, b, fb, fm);
  const double result =
      simpson_rec(g, a, fa, b, fb, m, fm, whole, tol, 0, st);
  if (st.worst > 100.0 * tol) {
    std::ostringstream os;
    os << "adaptive_simpson: did not converge to " << tol
       << " (achieved ~" << st.worst << ")";
    throw std::runtime_error(os.str());
  }
  return result;
}

nlohmann::json RealFunction::to_json() const {
  nlohmann::json params;
  switch (kind_) {
    case FunctionKind::constant: params["value"] = param_; break;
    case FunctionKind::indicator_below: params["bound"] = param_; break;
    case FunctionKind::exp_decay: params["lambda"] = param_; break;
    case FunctionKind::power: params["exponent"] = param_; break;
    case FunctionKind::piecewise_linear:
    case FunctionKind::tabulated:
      params["x"] = xs_;
      params["f"] = fs_;
      break;
  }
  if (scale_ != 1.0) params["scale"] = scale_;
  const char* name = nullptr;
  switch (kind_) {
    case FunctionKind::constant: name = "constant"; break;
    case FunctionKind::indicator_below: name = "indicator_below"; break;
    case FunctionKind::exp_decay: name = "exp_decay"; break;
    case FunctionKind::power: name = "power"; break;
    case FunctionKind::piecewise_linear: name = "piecewise_linear"; break;
    case FunctionKind::tabulated: name = "tabulated"; break;
  }
  return nlohmann::json{{"kind", name}, {"params", params}};
}

RealFunction RealFunction::from_json(const nlohmann::json& descriptor,
                                     const std::filesystem::path& base_dir) {
  const std::string kind = descriptor.at("kind").get<std::string>();
  const nlohmann::json params = descriptor.value("params", nlohmann::json::object());
  const double scale = params.value("scale", 1.0);
  auto table_args = [&]() -> std::pair<std::vector<double>, std::vector<double>> {
    if (params.contains("csv")) {
      std::filesystem::path p = params.at("csv").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      return read_xy_csv(p);
    }
    return {params.at("x").get<std::vector<double>>(),
            params.at("f").get<std::vector<double>>()};
  };
  RealFunction out = [&]() {
    if (kind == "constant") return constant(params.at("value").get<double>());
    if (kind == "indicator_below")
      return indicator_below(params.at("bound").get<double>());
    if (kind == "exp_decay") return exp_decay(params.at("lambda").get<double>());
    if (kind == "power") return power(params.at("exponent").get<double>());
    if (kind == "piecewise_linear") {
      auto [xs, fs] = table_args();
      return piecewise_linear(std::move(xs), std::move(fs));
    }
    if (kind == "tabulated") {
      auto [xs, fs] = table_args();
      return tabulated(std::move(xs), std::move(fs));
    }
    throw std::invalid_argument("unknown function kind: " + kind);
  }();
  return (scale == 1.0) ? out : out.scaled(scale);
}

std::pair<std::vector<double>, std::vector<double>> read_xy_csv(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open CSV: " + file.string());
  std::vector<double> xs, fs;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, f;
    if (ls >> x >> f) {
      xs.push_back(x);
      fs.push_back(f);
    } else if (!first) {
      throw std::runtime_error("malformed CSV row in " + file.string());
    }
    first = false;
  }
  return {std::move(xs), std::move(fs)};
}

}  // namespace maxmart
