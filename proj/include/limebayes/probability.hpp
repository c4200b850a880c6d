#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "limebayes/forward_model.hpp"
#include "limebayes/rng.hpp"

namespace limebayes {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)

namespace detail {

inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

inline double std_normal_log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

}  // namespace detail

/// A declarative 1-D distribution used for priors and noise. Validated at
/// construction so that log_pdf / sample never have to re-check.
class DistributionSpec {
public:
  struct Uniform {
    double lo, hi;
  };
  struct Normal {
    double mu, sigma;
  };
  struct TruncatedNormal {
    double mu, sigma, lo, hi;  // lo/hi may be -inf/+inf
    double log_mass;           // ln(Phi(beta) - Phi(alpha)), cached
  };

  static DistributionSpec uniform(double lo, double hi) {
    require_finite(lo, "uniform lo");
    require_finite(hi, "uniform hi");
    if (!(lo < hi)) throw std::invalid_argument("uniform requires lo < hi");
    return DistributionSpec(Uniform{lo, hi});
  }

  static DistributionSpec normal(double mu, double sigma) {
    require_finite(mu, "normal mu");
    require_finite(sigma, "normal sigma");
    if (!(sigma > 0.0)) throw std::invalid_argument("normal requires sigma > 0");
    return DistributionSpec(Normal{mu, sigma});
  }

  static DistributionSpec truncated_normal(double mu, double sigma, double lo,
                                           double hi) {
    require_finite(mu, "truncated normal mu");
    require_finite(sigma, "truncated normal sigma");
    if (!(sigma > 0.0)) {
      throw std::invalid_argument("truncated normal requires sigma > 0");
    }
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi)) {
      throw std::invalid_argument("truncated normal requires lo < hi");
    }
    const double mass_lo = std::isinf(lo) ? 0.0 : detail::std_normal_cdf((lo - mu) / sigma);
    const double mass_hi = std::isinf(hi) ? 1.0 : detail::std_normal_cdf((hi - mu) / sigma);
    const double mass = mass_hi - mass_lo;
    if (!(mass > 1e-12)) {
      throw std::invalid_argument(
          "truncated normal window carries no probability mass");
    }
    return DistributionSpec(TruncatedNormal{mu, sigma, lo, hi, std::log(mass)});
  }

  /// Normalized natural-log density; -inf outside the support.
  double log_pdf(double x) const {
    if (std::isnan(x)) return kNegInf;
    if (const auto* u = std::get_if<Uniform>(&v_)) {
      return (x < u->lo || x > u->hi) ? kNegInf : -std::log(u->hi - u->lo);
    }
    if (const auto* n = std::get_if<Normal>(&v_)) {
      return detail::std_normal_log_pdf((x - n->mu) / n->sigma) - std::log(n->sigma);
    }
    const auto& t = std::get<TruncatedNormal>(v_);
    if (x < t.lo || x > t.hi) return kNegInf;
    return detail::std_normal_log_pdf((x - t.mu) / t.sigma) - std::log(t.sigma) -
           t.log_mass;
  }

  double cdf(double x) const {
    if (std::isnan(x)) throw std::invalid_argument("cdf of NaN");
    if (const auto* u = std::get_if<Uniform>(&v_)) {
      if (x <= u->lo) return 0.0;
      if (x >= u->hi) return 1.0;
      return (x - u->lo) / (u->hi - u->lo);
    }
    if (const auto* n = std::get_if<Normal>(&v_)) {
      return detail::std_normal_cdf((x - n->mu) / n->sigma);
    }
    const auto& t = std::get<TruncatedNormal>(v_);
    if (x <= t.lo) return 0.0;
    if (x >= t.hi) return 1.0;
    const double lo_mass = std::isinf(t.lo) ? 0.0 : detail::std_normal_cdf((t.lo - t.mu) / t.sigma);
    const double p = (detail::std_normal_cdf((x - t.mu) / t.sigma) - lo_mass) /
                     std::exp(t.log_mass);
    return std::min(1.0, std::max(0.0, p));
  }

  /// Draw one variate. Truncated normals use rejection from the parent
  /// normal, restarting on out-of-window draws.
  double sample(RandomSource& rng) const {
    if (const auto* u = std::get_if<Uniform>(&v_)) {
      return rng.uniform(u->lo, u->hi);
    }
    if (const auto* n = std::get_if<Normal>(&v_)) {
      return rng.normal(n->mu, n->sigma);
    }
    const auto& t = std::get<TruncatedNormal>(v_);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const double x = rng.normal(t.mu, t.sigma);
      if (x >= t.lo && x <= t.hi) return x;
    }
    // unreachable for validated windows (mass > 1e-12 makes this p < 1e-12^1e5)
    throw std::runtime_error("truncated normal rejection sampling stalled");
  }

  /// Rough spread of the distribution, used to seed proposal step scales.
  /// For truncated normals this is the parent sigma, not the exact moment.
  double scale_hint() const {
    if (const auto* u = std::get_if<Uniform>(&v_)) {
      return (u->hi - u->lo) / 3.46410161513775459;  // sqrt(12)
    }
    if (const auto* n = std::get_if<Normal>(&v_)) return n->sigma;
    return std::get<TruncatedNormal>(v_).sigma;
  }

  const Uniform* as_uniform() const { return std::get_if<Uniform>(&v_); }
  const Normal* as_normal() const { return std::get_if<Normal>(&v_); }
  const TruncatedNormal* as_truncated_normal() const {
    return std::get_if<TruncatedNormal>(&v_);
  }

  std::string describe() const {
    char buf[160];
    if (const auto* u = std::get_if<Uniform>(&v_)) {
      std::snprintf(buf, sizeof(buf), "uniform(%g, %g)", u->lo, u->hi);
    } else if (const auto* n = std::get_if<Normal>(&v_)) {
      std::snprintf(buf, sizeof(buf), "normal(%g, %g)", n->mu, n->sigma);
    } else {
      const auto& t = std::get<TruncatedNormal>(v_);
      std::snprintf(buf, sizeof(buf), "truncnormal(%g, %g, %g, %g)", t.mu,
                    t.sigma, t.lo, t.hi);
    }
    return buf;
  }

private:
  using Variant = std::variant<Uniform, Normal, TruncatedNormal>;
  explicit DistributionSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Additive zero-mean Gaussian measurement noise, std in degrees C.
struct NoiseModel {
  double sigma_c = 0.1;
};

/// One temperature reading: (time in hours, temperature in C).
struct Observation {
  double time_hr = 0.0;
  double temp_c = 0.0;
};

/// Log density of one observation under the data-generating model:
/// a Gaussian centered at the model prediction with std sigma.
///
/// Returns -inf (never throws) for sigma <= 0 or an invalid time constant,
/// so samplers can treat bad proposals as ordinary rejections.
inline double log_likelihood_point(const Observation& obs,
                                   const ModelParams& params,
                                   const ExperimentConditions& cond,
                                   const NoiseModel& noise) {
  if (!(noise.sigma_c > 0.0) || !std::isfinite(noise.sigma_c)) return kNegInf;
  if (!(params.time_constant_hr > 0.0) || !std::isfinite(params.time_constant_hr)) {
    return kNegInf;
  }
  const double predicted = lime_temperature_raw(obs.time_hr, params, cond);
  if (!std::isfinite(predicted)) return kNegInf;
  const double z = (obs.temp_c - predicted) / noise.sigma_c;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(noise.sigma_c);
}

/// Sum of per-point log likelihoods (independent noise). Empty data -> 0.
inline double log_likelihood_series(std::span<const Observation> data,
                                    const ModelParams& params,
                                    const ExperimentConditions& cond,
                                    const NoiseModel& noise) {
  double total = 0.0;
  for (const Observation& obs : data) {
    const double term = log_likelihood_point(obs, params, cond, noise);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  return total;
}

}  // namespace limebayes
