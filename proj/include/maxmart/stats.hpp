#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace maxmart {

// Welford accumulator. merge() is exact enough for our use and keeps batch
// reductions commutative; the batch kernels nevertheless fold per-path
// results in index order so output bytes never depend on scheduling.
class MeanAccumulator {
 public:
  void add(double x) noexcept;
  void merge(const MeanAccumulator& other) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // unbiased; 0 when n < 2
  double std_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double sample_mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);
double sample_median(std::vector<double> xs);

// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Asymptotic critical values at the suite's fixed alpha = 0.01 (c = 1.63).
double ks_threshold(std::size_t n, double c = 1.63);
double ks_threshold(std::size_t n, std::size_t m, double c = 1.63);

}  // namespace maxmart
