#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "limebayes/forward_model.hpp"
#include "limebayes/probability.hpp"
#include "limebayes/rng.hpp"
#include "limebayes/sampler.hpp"

namespace limebayes {

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

struct GaussianMoments {
  double mean = 0.0;
  double std = 0.0;
};

namespace detail {

inline void require_samples(std::span<const double> x, std::size_t at_least,
                            const char* who) {
  if (x.size() < at_least) {
    throw std::invalid_argument(std::string(who) + " needs at least " +
                                std::to_string(at_least) + " samples");
  }
}

/// Linear-interpolation quantile over sorted data (the common
/// "position = (n-1) q" rule used by most statistical software).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Sample mean and unbiased standard deviation. The bridge for chaining
/// one inference's posterior into the next one's prior.
inline GaussianMoments gaussian_summary(std::span<const double> x) {
  detail::require_samples(x, 2, "gaussian_summary");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(x.size() - 1))};
}

/// Equal-tailed interval from empirical quantiles. level = 0.9 returns the
/// (5%, 95%) pair; level = 1 returns (min, max).
inline std::pair<double, double> equal_tailed_ci(std::span<const double> x,
                                                 double level) {
  if (!(level > 0.0 && level <= 1.0)) {
    throw std::invalid_argument("credible level must be in (0, 1]");
  }
  detail::require_samples(x, 10, "equal_tailed_ci");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - level) / 2.0;
  return {detail::quantile_sorted(sorted, tail),
          detail::quantile_sorted(sorted, 1.0 - tail)};
}

/// Silverman bandwidth: 0.9 * min(std, IQR/1.34) * n^(-1/5). Falls back to
/// the std if the IQR degenerates (heavily tied draws).
inline double silverman_bandwidth(std::span<const double> x) {
  detail::require_samples(x, 2, "silverman_bandwidth");
  const GaussianMoments m = gaussian_summary(x);
  if (!(m.std > 0.0)) {
    throw std::invalid_argument(
        "kde: samples have zero variance; report the point value directly");
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = detail::quantile_sorted(sorted, 0.75) -
                     detail::quantile_sorted(sorted, 0.25);
  double spread = m.std;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

/// Gaussian-kernel density estimate on an explicit grid.
inline KdeCurve kde(std::span<const double> x, std::span<const double> grid) {
  const double bw = silverman_bandwidth(x);
  KdeCurve curve;
  curve.bandwidth = bw;
  curve.grid.assign(grid.begin(), grid.end());
  curve.density.resize(grid.size());
  const double norm = 1.0 / (static_cast<double>(x.size()) * bw * 2.50662827463100050242);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double xi : x) {
      const double z = (curve.grid[g] - xi) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[g] = acc * norm;
  }
  return curve;
}

/// KDE on an automatic grid spanning the draws plus 4 bandwidths of margin,
/// wide enough that the curve integrates to 1 within 1e-3.
inline KdeCurve kde(std::span<const double> x, std::size_t grid_points = 512) {
  const double bw = silverman_bandwidth(x);
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it - 4.0 * bw;
  const double hi = *hi_it + 4.0 * bw;
  std::vector<double> grid(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) /
                       static_cast<double>(grid_points - 1);
  }
  return kde(x, grid);
}

/// Trapezoid mass of a density curve on its grid.
inline double curve_integral(const KdeCurve& curve) {
  double acc = 0.0;
  for (std::size_t i = 1; i < curve.grid.size(); ++i) {
    acc += 0.5 * (curve.density[i] + curve.density[i - 1]) *
           (curve.grid[i] - curve.grid[i - 1]);
  }
  return acc;
}

inline double pearson_correlation(std::span<const double> x,
                                  std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_correlation: length mismatch");
  }
  detail::require_samples(x, 2, "pearson_correlation");
  const GaussianMoments mx = gaussian_summary(x);
  const GaussianMoments my = gaussian_summary(y);
  if (!(mx.std > 0.0) || !(my.std > 0.0)) {
    throw std::invalid_argument("pearson_correlation: zero variance input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += (x[i] - mx.mean) * (y[i] - my.mean);
  }
  const double n1 = static_cast<double>(x.size() - 1);
  return acc / (n1 * mx.std * my.std);
}

/// Column projection onto a subset of parameters; row count unchanged.
inline SampleSet marginalize(const SampleSet& samples,
                             std::span<const std::string> names) {
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const std::string& name : names) cols.push_back(samples.param_index(name));

  SampleSet reduced;
  reduced.param_names.assign(names.begin(), names.end());
  reduced.acceptance_rate = samples.acceptance_rate;
  reduced.nonfinite_proposals = samples.nonfinite_proposals;
  reduced.seed = samples.seed;
  for (const DrawMatrix& m : samples.chains) {
    DrawMatrix r(m.rows, cols.size());
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) r(i, j) = m(i, cols[j]);
    }
    reduced.chains.push_back(std::move(r));
  }
  return reduced;
}

/// Maps sampled parameter columns (by name) and fixed constants onto the
/// forward model's arguments, so draws can be pushed through the physics.
struct ForwardBinding {
  // parameter names; empty string means "use the fixed value instead"
  std::string time_constant = "lambda";
  std::string start_time = "t0";
  std::string initial_temp = "theta0";
  std::string air_temp = "theta_air";
  std::string noise_sigma = "sigma";
  double fixed_time_constant = 1.0;
  double fixed_start_time = 0.0;
  double fixed_initial_temp = 0.0;
  double fixed_air_temp = 0.0;
  double fixed_noise_sigma = 0.1;

  struct Resolved {
    // column index or npos when fixed
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t time_constant, start_time, initial_temp, air_temp, noise_sigma;
  };

  Resolved resolve(const SampleSet& samples) const {
    auto find = [&](const std::string& name) -> std::size_t {
      if (name.empty()) return Resolved::npos;
      for (std::size_t i = 0; i < samples.param_names.size(); ++i) {
        if (samples.param_names[i] == name) return i;
      }
      return Resolved::npos;  // not sampled -> fall back to fixed value
    };
    return {find(time_constant), find(start_time), find(initial_temp),
            find(air_temp), find(noise_sigma)};
  }

  ModelParams params_for(const Resolved& r, const DrawMatrix& m, std::size_t row) const {
    return {r.time_constant == Resolved::npos ? fixed_time_constant
                                              : m(row, r.time_constant)};
  }
  ExperimentConditions conditions_for(const Resolved& r, const DrawMatrix& m,
                                      std::size_t row) const {
    ExperimentConditions cond;
    cond.start_time_hr =
        r.start_time == Resolved::npos ? fixed_start_time : m(row, r.start_time);
    cond.initial_temp_c =
        r.initial_temp == Resolved::npos ? fixed_initial_temp : m(row, r.initial_temp);
    cond.air_temp_c =
        r.air_temp == Resolved::npos ? fixed_air_temp : m(row, r.air_temp);
    return cond;
  }
  double sigma_for(const Resolved& r, const DrawMatrix& m, std::size_t row) const {
    return r.noise_sigma == Resolved::npos ? fixed_noise_sigma : m(row, r.noise_sigma);
  }
};

/// A bundle of model trajectories generated from posterior draws; the draw
/// indices (into the pooled draw order) make every member reproducible.
struct TrajectoryEnsemble {
  std::vector<double> time_grid;
  std::vector<std::vector<double>> members;  // one temperature series per draw
  std::vector<std::size_t> draw_indices;     // pooled index of each member
};

/// Push n posterior draws (chosen uniformly without replacement) through the
/// closed-form model over a time grid.
inline TrajectoryEnsemble posterior_trajectories(const SampleSet& samples,
                                                 const ForwardBinding& binding,
                                                 std::size_t n,
                                                 std::span<const double> time_grid,
                                                 RandomSource& rng) {
  const std::size_t total = samples.total_draws();
  if (n > total) {
    throw std::invalid_argument("requested more trajectories than draws");
  }
  // partial Fisher-Yates over pooled indices
  std::vector<std::size_t> indices(total);
  for (std::size_t i = 0; i < total; ++i) indices[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.index_below(total - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  std::sort(indices.begin(), indices.end());

  const auto resolved = binding.resolve(samples);
  const std::size_t per_chain = samples.draws_per_chain();

  TrajectoryEnsemble ensemble;
  ensemble.time_grid.assign(time_grid.begin(), time_grid.end());
  ensemble.draw_indices = indices;
  ensemble.members.reserve(n);
  for (std::size_t idx : indices) {
    const DrawMatrix& m = samples.chains[idx / per_chain];
    const std::size_t row = idx % per_chain;
    const ModelParams params = binding.params_for(resolved, m, row);
    const ExperimentConditions cond = binding.conditions_for(resolved, m, row);
    std::vector<double> series;
    series.reserve(time_grid.size());
    for (double t : time_grid) series.push_back(lime_temperature(t, params, cond));
    ensemble.members.push_back(std::move(series));
  }
  return ensemble;
}

/// Box-plot statistics of the posterior residual distribution at one
/// observation: quartiles plus Tukey whiskers (1.5 IQR, clipped to data).
struct ResidualBox {
  double time_hr = 0.0;
  double observed_c = 0.0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  double mean = 0.0;
};

inline std::vector<ResidualBox> residual_summary(
    const SampleSet& samples, const ForwardBinding& binding,
    std::span<const Observation> data) {
  if (data.empty()) {
    throw std::invalid_argument("residual_summary: no observations");
  }
  const auto resolved = binding.resolve(samples);
  std::vector<ResidualBox> boxes;
  boxes.reserve(data.size());
  std::vector<double> residuals;
  residuals.reserve(samples.total_draws());

  for (const Observation& obs : data) {
    residuals.clear();
    for (const DrawMatrix& m : samples.chains) {
      for (std::size_t row = 0; row < m.rows; ++row) {
        const ModelParams params = binding.params_for(resolved, m, row);
        const ExperimentConditions cond = binding.conditions_for(resolved, m, row);
        residuals.push_back(obs.temp_c - lime_temperature(obs.time_hr, params, cond));
      }
    }
    std::sort(residuals.begin(), residuals.end());
    ResidualBox box;
    box.time_hr = obs.time_hr;
    box.observed_c = obs.temp_c;
    box.q1 = detail::quantile_sorted(residuals, 0.25);
    box.median = detail::quantile_sorted(residuals, 0.5);
    box.q3 = detail::quantile_sorted(residuals, 0.75);
    const double iqr = box.q3 - box.q1;
    box.whisker_lo = std::max(residuals.front(), box.q1 - 1.5 * iqr);
    box.whisker_hi = std::min(residuals.back(), box.q3 + 1.5 * iqr);
    double mean = 0.0;
    for (double r : residuals) mean += r;
    box.mean = mean / static_cast<double>(residuals.size());
    boxes.push_back(box);
  }
  return boxes;
}

/// Per-parameter posterior report: moments, equal-tailed interval, KDE
/// curve, and the pairwise Pearson correlation matrix.
struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  KdeCurve density;
};

struct PosteriorSummary {
  double level = 0.9;
  std::vector<ParamSummary> params;
  DrawMatrix correlation;  // n_params x n_params
};

inline PosteriorSummary summarize(const SampleSet& samples, double level = 0.9,
                                  std::size_t grid_points = 512) {
  PosteriorSummary summary;
  summary.level = level;
  const std::size_t k = samples.n_params();
  std::vector<std::vector<double>> columns(k);
  for (std::size_t p = 0; p < k; ++p) columns[p] = samples.pooled(p);

  for (std::size_t p = 0; p < k; ++p) {
    ParamSummary ps;
    ps.name = samples.param_names[p];
    const GaussianMoments m = gaussian_summary(columns[p]);
    ps.mean = m.mean;
    ps.std = m.std;
    const auto [lo, hi] = equal_tailed_ci(columns[p], level);
    ps.ci_lo = lo;
    ps.ci_hi = hi;
    ps.density = kde(columns[p], grid_points);
    summary.params.push_back(std::move(ps));
  }

  summary.correlation = DrawMatrix(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    summary.correlation(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double rho = pearson_correlation(columns[i], columns[j]);
      summary.correlation(i, j) = rho;
      summary.correlation(j, i) = rho;
    }
  }
  return summary;
}

/// Grid-binned, Gaussian-smoothed 2-D density for joint plots. This is a
/// histogram smoothed with a separable Gaussian (bandwidths per Silverman),
/// not a full product-kernel KDE; adequate for contour visualization.
struct GridDensity2D {
  std::vector<double> x_grid;  // cell centers
  std::vector<double> y_grid;
  DrawMatrix density;  // y-major: density(iy, ix); integrates to ~1
};

inline GridDensity2D joint_grid_density(std::span<const double> x,
                                        std::span<const double> y,
                                        std::size_t nx = 96, std::size_t ny = 96) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("joint_grid_density: bad inputs");
  }
  const double bw_x = silverman_bandwidth(x);
  const double bw_y = silverman_bandwidth(y);
  const auto [x_min_it, x_max_it] = std::minmax_element(x.begin(), x.end());
  const auto [y_min_it, y_max_it] = std::minmax_element(y.begin(), y.end());
  const double x_lo = *x_min_it - 3.0 * bw_x, x_hi = *x_max_it + 3.0 * bw_x;
  const double y_lo = *y_min_it - 3.0 * bw_y, y_hi = *y_max_it + 3.0 * bw_y;
  const double dx = (x_hi - x_lo) / static_cast<double>(nx);
  const double dy = (y_hi - y_lo) / static_cast<double>(ny);

  GridDensity2D out;
  out.x_grid.resize(nx);
  out.y_grid.resize(ny);
  for (std::size_t i = 0; i < nx; ++i) out.x_grid[i] = x_lo + (static_cast<double>(i) + 0.5) * dx;
  for (std::size_t i = 0; i < ny; ++i) out.y_grid[i] = y_lo + (static_cast<double>(i) + 0.5) * dy;

  DrawMatrix hist(ny, nx);
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto ix = static_cast<std::size_t>((x[k] - x_lo) / dx);
    auto iy = static_cast<std::size_t>((y[k] - y_lo) / dy);
    ix = std::min(ix, nx - 1);
    iy = std::min(iy, ny - 1);
    hist(iy, ix) += 1.0;
  }

  // separable Gaussian blur, kernel truncated at 4 bandwidths
  auto make_kernel = [](double bw, double cell) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * bw / cell)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      const double z = static_cast<double>(i) * cell / bw;
      k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * z * z);
      sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (double& v : k) v /= sum;
    return k;
  };
  const std::vector<double> kx = make_kernel(bw_x, dx);
  const std::vector<double> ky = make_kernel(bw_y, dy);
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);

  DrawMatrix pass(ny, nx);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (int o = -rx; o <= rx; ++o) {
        const int src = static_cast<int>(ix) + o;
        if (src < 0 || src >= static_cast<int>(nx)) continue;
        acc += hist(iy, static_cast<std::size_t>(src)) * kx[static_cast<std::size_t>(o + rx)];
      }
      pass(iy, ix) = acc;
    }
  }
  out.density = DrawMatrix(ny, nx);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (int o = -ry; o <= ry; ++o) {
        const int src = static_cast<int>(iy) + o;
        if (src < 0 || src >= static_cast<int>(ny)) continue;
        acc += pass(static_cast<std::size_t>(src), ix) * ky[static_cast<std::size_t>(o + ry)];
      }
      out.density(iy, ix) = acc;
    }
  }
  const double total = static_cast<double>(x.size()) * dx * dy;
  for (double& v : out.density.data) v /= total;
  return out;
}

}  // namespace limebayes
