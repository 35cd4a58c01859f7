#include "apfx/stats.hpp"

#include <algorithm>
#include <cmath>

#include "apfx/error.hpp"

namespace apfx::stats {

MeanEstimate mean_se(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n) / std::sqrt(n)};
}

VarianceEstimate variance_se(std::span<const double> xs) {
  if (xs.size() < 2) return {};
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double c = (x - mean) * (x - mean);
    m2 += c;
    m4 += c * c;
  }
  const double var = m2 / (n - 1.0);
  const double pop2 = m2 / n;
  const double pop4 = m4 / n;
  // Var(s^2) ~ (mu4 - sigma^4) / n.
  const double se = std::sqrt(std::max(0.0, pop4 - pop2 * pop2) / n);
  return {var, se};
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) fail(Errc::invalid_argument, "quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

std::size_t decrease_violations(std::span<const double> seq, bool strict) {
  std::size_t count = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (strict ? seq[i] >= seq[i - 1] : seq[i] > seq[i - 1]) ++count;
  }
  return count;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) fail(Errc::invalid_argument, "line fit needs at least two points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) fail(Errc::invalid_argument, "line fit with constant abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace apfx::stats
