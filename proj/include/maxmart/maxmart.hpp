#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "maxmart/functions.hpp"
#include "maxmart/path.hpp"

namespace maxmart {

// Which running statistic drives the martingale.
enum class Variant { max, min, local_time };

// A member of the max-martingale family: a driver choice, the function f
// (called g in the local-time variant) and the initial value c = H(0,0).
struct MaxMartingaleSpec {
  Variant variant = Variant::max;
  RealFunction f = RealFunction::constant(1.0);
  double c = 0.0;

  std::string label() const;
};

enum class SeriesForm { direct, integral };

struct MartingaleSeries {
  double dt = 0.0;
  SeriesForm form = SeriesForm::direct;
  std::vector<double> values;  // values[0] = c
  std::optional<std::string> warning;
};

// Closed form H(x, y) = F(y) - f(y)(y - x) + c on D = {y >= max(x, 0)}
// (max variant). On the diagonal y == x the f-term is dropped, which keeps
// the value finite for f singular at 0 and makes the running-max identity
// exact in floating point.
double h_value(const MaxMartingaleSpec& spec, double x, double y);

// Node-wise closed form along a path. Drivers per variant:
//   max:        (B, running max)
//   min:        (-B, running min)        [substitution N -> -N]
//   local_time: (|B|, L), i.e. G(L) - g(L)|B| + c
MartingaleSeries evaluate_direct(const MaxMartingaleSpec& spec,
                                 const Path& path);

// Left-endpoint Ito sums:
//   max:        c + sum f(max_i) (B_{i+1} - B_i)
//   min:        c - sum f(min_i) dB
//   local_time: c - sum g(L_i) sgn(B_i) dB,  sgn(0) := 0
MartingaleSeries evaluate_integral(const MaxMartingaleSpec& spec,
                                   const Path& path);

// F(inf) + c for f >= 0 with a finite total integral; throws
// std::domain_error otherwise.
double terminal_limit(const MaxMartingaleSpec& spec);

// Streaming evaluator for the direct form: caches f and F at the current
// driver statistic so the per-step cost is O(1) away from statistic updates.
class DirectEvaluator {
 public:
  explicit DirectEvaluator(const MaxMartingaleSpec& spec);

  // H at (driver value, driver statistic); `stat` is the running max /
  // running min / local time depending on the variant.
  double at(double value, double stat);
  // f at the cached statistic (the integrand of the integral form).
  double slope_at(double stat);

  bool saw_singular() const noexcept { return saw_singular_; }

 private:
  void refresh(double stat);

  const MaxMartingaleSpec& spec_;
  bool singular_;
  double cached_stat_ = -1.0;
  double cached_f_ = 0.0;
  double cached_cap_ = 0.0;  // F(stat) + c
  bool saw_singular_ = false;
};

// CSV export: header "t,H_direct,H_integral,driver,running_max_of_H".
void export_series_csv(const Path& path, const MartingaleSeries& direct,
                       const MartingaleSeries& integral, std::ostream& out);

}  // namespace maxmart
