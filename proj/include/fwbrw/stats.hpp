#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fwbrw::stats {

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double se = 0.0;        // standard error of the mean
  std::size_t n = 0;
};

Summary summarize(std::span<const double> xs);

double mean(std::span<const double> xs);
double median(std::vector<double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = intercept + slope * x. Requires >= 2 distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Welford accumulator, merged by pure reduction.
class Accumulator {
 public:
  void add(double x);
  void merge(const Accumulator& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;
  double se() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Two-sample z-score (a - b) / sqrt(se_a^2 + se_b^2); se_b may be zero for an exact reference.
double z_score(double a, double se_a, double b, double se_b);

}  // namespace fwbrw::stats
