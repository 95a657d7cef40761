#pragma once

#include <span>
#include <utility>
#include <vector>

namespace patlas::stats {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Student t CDF with `df` degrees of freedom.
double t_cdf(double t, double df);

/// Inverse of t_cdf for p in (0, 1).
double t_quantile(double p, double df);

struct PairedComparison {
  std::vector<double> differences;
  double mean_diff = 0.0;
  double sd = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  double t_statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  // True when a skewness/kurtosis screen suggests non-normal differences.
  // Advisory only; never blocks the test.
  bool normality_advisory = false;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

/// Two-sided one-sample t-test of the mean against 0.
/// Throws kInvalidArgument for n < 2 and kDegenerate for zero variance.
PairedComparison one_sample_t(std::span<const double> differences);

/// Holm step-down adjustment, returned in input order.
std::vector<double> holm_correct(std::span<const double> p_values);

struct MeanCi {
  double mean = 0.0;
  bool has_ci = false;  // false for a single observation
  double lo = 0.0;
  double hi = 0.0;
};

/// Mean with a two-sided 95% t interval.
MeanCi mean_ci95(std::span<const double> values);

/// Wilson score interval for a binomial proportion at 95%.
std::pair<double, double> wilson_ci95(std::size_t successes, std::size_t trials);

}  // namespace patlas::stats
