#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sharpwave::stats {

// Pairwise (cascade) summation. Deterministic for a fixed element order and
// better conditioned than sequential accumulation for large sample counts.
double pairwise_sum(std::span<const double> xs);

struct MeanCI {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * stderr (normal-theory 95% CI)
  double stderr_ = 0.0;
  std::size_t n = 0;
};

MeanCI mean_ci(std::span<const double> xs);

// Unbiased sample variance (divides by n-1).
double sample_variance(std::span<const double> xs);

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  double ssr = 0.0;  // sum of squared residuals
  std::size_t n = 0;
};

LinFit linear_fit(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);

// Two-sided Kolmogorov-Smirnov statistic of a sample against N(mu, sigma^2),
// and the asymptotic p-value of sqrt(n) * D.
double ks_statistic(std::vector<double> sample, double mu, double sigma);
double ks_pvalue(double d, std::size_t n);

}  // namespace sharpwave::stats
