#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "limebayes/sampler.hpp"

namespace limebayes {

namespace detail {

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

/// Biased (1/n) autocovariance of one segment at a given lag.
inline double autocovariance(std::span<const double> x, double mean, std::size_t lag) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) {
    s += (x[i] - mean) * (x[i + lag] - mean);
  }
  return s / static_cast<double>(n);
}

/// Split each chain's column into two halves -> 2 * n_chains segments.
inline std::vector<std::vector<double>> split_segments(const SampleSet& samples,
                                                       std::size_t param) {
  if (samples.n_chains() < 2) {
    throw std::invalid_argument("diagnostics need at least 2 chains");
  }
  if (samples.draws_per_chain() < 4) {
    throw std::invalid_argument("diagnostics need at least 4 draws per chain");
  }
  std::vector<std::vector<double>> segments;
  const std::size_t half = samples.draws_per_chain() / 2;
  for (const DrawMatrix& m : samples.chains) {
    std::vector<double> first, second;
    first.reserve(half);
    second.reserve(half);
    for (std::size_t i = 0; i < half; ++i) first.push_back(m(i, param));
    for (std::size_t i = m.rows - half; i < m.rows; ++i) second.push_back(m(i, param));
    segments.push_back(std::move(first));
    segments.push_back(std::move(second));
  }
  return segments;
}

}  // namespace detail

/// Split potential-scale-reduction: each chain is halved and the standard
/// between/within variance ratio is computed over the 2*n_chains segments.
/// Values near 1 indicate the chains explore the same distribution.
/// Fully degenerate draws (zero variance everywhere) report 1 by convention.
inline std::vector<double> split_rhat(const SampleSet& samples) {
  std::vector<double> out(samples.n_params(), 1.0);
  for (std::size_t p = 0; p < samples.n_params(); ++p) {
    const auto segments = detail::split_segments(samples, p);
    const std::size_t m = segments.size();
    const std::size_t n = segments.front().size();

    std::vector<double> seg_means(m), seg_vars(m);
    for (std::size_t s = 0; s < m; ++s) {
      seg_means[s] = detail::mean_of(segments[s]);
      seg_vars[s] = detail::sample_variance(segments[s], seg_means[s]);
    }
    const double grand_mean = detail::mean_of(seg_means);
    const double between =
        static_cast<double>(n) * detail::sample_variance(seg_means, grand_mean);
    const double within = detail::mean_of(seg_vars);

    if (within <= 0.0) {
      out[p] = between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
      continue;
    }
    const double var_plus =
        (static_cast<double>(n - 1) / static_cast<double>(n)) * within +
        between / static_cast<double>(n);
    out[p] = std::sqrt(var_plus / within);
  }
  return out;
}

/// Effective sample size per parameter across all chains.
///
/// Combined-chain autocorrelation estimate with Geyer's initial positive
/// (and monotone) sequence truncation; the result is capped at
/// total * log10(total) so antithetic chains cannot report absurd values.
inline std::vector<double> effective_sample_size(const SampleSet& samples) {
  std::vector<double> out(samples.n_params(), 0.0);
  for (std::size_t p = 0; p < samples.n_params(); ++p) {
    const auto segments = detail::split_segments(samples, p);
    const std::size_t m = segments.size();
    const std::size_t n = segments.front().size();
    const double total = static_cast<double>(m * n);

    std::vector<double> seg_means(m), seg_vars(m);
    for (std::size_t s = 0; s < m; ++s) {
      seg_means[s] = detail::mean_of(segments[s]);
      seg_vars[s] = detail::sample_variance(segments[s], seg_means[s]);
    }
    const double grand_mean = detail::mean_of(seg_means);
    const double within = detail::mean_of(seg_vars);
    const double var_plus =
        (static_cast<double>(n - 1) / static_cast<double>(n)) * within +
        detail::sample_variance(seg_means, grand_mean);

    if (var_plus <= 0.0 || within <= 0.0) {
      out[p] = total;  // constant draws carry no autocorrelation signal
      continue;
    }

    auto rho_at = [&](std::size_t lag) {
      double mean_acov = 0.0;
      for (std::size_t s = 0; s < m; ++s) {
        mean_acov += detail::autocovariance(segments[s], seg_means[s], lag);
      }
      mean_acov /= static_cast<double>(m);
      return 1.0 - (within - mean_acov) / var_plus;
    };

    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
      double pair = rho_at(lag) + rho_at(lag + 1);
      if (pair <= 0.0) break;
      pair = std::min(pair, prev_pair);  // enforce monotone decline
      prev_pair = pair;
      tau += 2.0 * pair;
    }
    tau = std::max(tau, 1e-12);
    const double cap = total * std::max(1.0, std::log10(total));
    out[p] = std::min(total / tau, cap);
  }
  return out;
}

}  // namespace limebayes
