#pragma once

// Shared oracles and helpers for the unit and acceptance suites. These stay
// independent of the implementation paths they check: quadrature for density
// normalization, the KS statistic against analytic CDFs, and small stats.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace test_support {

/// Composite Simpson integral of f over [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t intervals = 4096) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) {
    const double x = a + h * static_cast<double>(i);
    acc += f(x) * (i % 2 == 0 ? 2.0 : 4.0);
  }
  return acc * h / 3.0;
}

/// Kolmogorov-Smirnov distance between samples and an analytic CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

/// 1% asymptotic KS critical value.
inline double ks_critical_1pct(std::size_t n) {
  return 1.6276 / std::sqrt(static_cast<double>(n));
}

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Keep every stride-th draw; crude decorrelation for KS tests on MCMC output.
inline std::vector<double> thin(std::span<const double> x, std::size_t stride) {
  std::vector<double> out;
  out.reserve(x.size() / stride + 1);
  for (std::size_t i = 0; i < x.size(); i += stride) out.push_back(x[i]);
  return out;
}

}  // namespace test_support
