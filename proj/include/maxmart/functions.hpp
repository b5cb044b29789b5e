#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace maxmart {

// The executable family of locally integrable functions f: [0,inf) -> R.
// Each kind carries a closed-form antiderivative F(y) = int_0^y f, except
// `tabulated`, whose F goes through adaptive quadrature. An overall scale
// multiplier is supported so fixtures like ||f|| - F(y) + f(y)(y-x) can be
// expressed as an ordinary spec with f -> -f.
enum class FunctionKind {
  constant,
  indicator_below,
  exp_decay,
  power,
  piecewise_linear,
  tabulated,
};

class RealFunction {
 public:
  static RealFunction constant(double value);
  static RealFunction indicator_below(double bound);  // 1{x < bound}
  static RealFunction exp_decay(double lambda);       // exp(-lambda x)
  static RealFunction power(double p);                // x^p, p > -1
  static RealFunction piecewise_linear(std::vector<double> knots_x,
                                       std::vector<double> knots_f);
  static RealFunction tabulated(std::vector<double> grid_x,
                                std::vector<double> grid_f);

  RealFunction scaled(double factor) const;

  FunctionKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  const std::vector<double>& knots_x() const noexcept { return xs_; }
  const std::vector<double>& knots_f() const noexcept { return fs_; }
  double param() const noexcept { return param_; }

  // True when evaluate() is undefined at x = 0 (power kind with p < 0).
  bool singular_at_zero() const noexcept;
  // True when scale * f >= 0 everywhere.
  bool nonnegative() const noexcept;
  // True when f is identically zero.
  bool is_zero() const noexcept;

  std::string label() const;

  nlohmann::json to_json() const;
  static RealFunction from_json(const nlohmann::json& descriptor,
                                const std::filesystem::path& base_dir = {});

 private:
  RealFunction(FunctionKind kind, double param, std::vector<double> xs,
               std::vector<double> fs, double scale);

  FunctionKind kind_;
  double param_;
  std::vector<double> xs_;
  std::vector<double> fs_;
  double scale_;

  friend double evaluate(const RealFunction&, double);
  friend double antiderivative_closed_form(const RealFunction&, double);
};

// Pointwise value; throws std::domain_error at an integrable singularity
// (power kind, x = 0, p < 0) and for x < 0.
double evaluate(const RealFunction& f, double x);

// Antiderivative evaluation mode.
class Antiderivative {
 public:
  enum class Mode { closed_form, quadrature };

  explicit Antiderivative(RealFunction f, Mode mode);
  double operator()(double y) const;
  Mode mode() const noexcept { return mode_; }

 private:
  RealFunction f_;
  Mode mode_;
};

// F(y) = int_0^y f(x) dx. Closed form for every kind except `tabulated`,
// which uses adaptive quadrature at absolute tolerance 1e-10.
double antiderivative_at(const RealFunction& f, double y);

// F(inf) for f >= 0; returns +infinity as the divergence marker.
// Throws std::domain_error when f changes sign.
double total_integral(const RealFunction& f);

// Adaptive Simpson quadrature with absolute tolerance `tol`; throws
// std::runtime_error carrying the achieved tolerance on non-convergence.
double adaptive_simpson(const std::function<double(double)>& g, double a,
                        double b, double tol);

// Reads a two-column CSV of (x, f(x)) pairs; a non-numeric first line is
// treated as a header.
std::pair<std::vector<double>, std::vector<double>> read_xy_csv(
    const std::filesystem::path& file);

}  // namespace maxmart
