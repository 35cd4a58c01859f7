#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace apfx::stats {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean with standard error sd/sqrt(n), sd normalized by n.
MeanEstimate mean_se(std::span<const double> xs);

// Unbiased variance and a large-sample standard error for it.
struct VarianceEstimate {
  double variance = 0.0;
  double std_error = 0.0;
};
VarianceEstimate variance_se(std::span<const double> xs);

// Linear-interpolated quantile (Hyndman-Fan type 7). p in [0, 1].
double quantile(std::vector<double> xs, double p);
double median(std::vector<double> xs);

// Adjacent pairs that break monotone decrease.
// strict: pairs with next >= prev count; otherwise only next > prev.
std::size_t decrease_violations(std::span<const double> seq, bool strict);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace apfx::stats
