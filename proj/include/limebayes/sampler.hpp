#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "limebayes/rng.hpp"

namespace limebayes {

/// Dense row-major matrix of draws; rows = kept steps, cols = parameters.
struct DrawMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DrawMatrix() = default;
  DrawMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

struct ChainConfig {
  std::size_t n_chains = 4;
  std::size_t n_steps = 50000;      // per chain, burn-in included
  double burn_in_fraction = 0.5;    // [0, 1)
  std::vector<double> initial_step_scales;  // per parameter, > 0
  double target_acceptance = 0.3;
  std::uint64_t seed = 0;
  std::size_t adapt_window = 50;    // steps per burn-in adaptation round
  double adapt_gain = 1.0;
  bool parallel_chains = true;

  void validate(std::size_t dim) const {
    if (n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
    if (n_steps < 2) throw std::invalid_argument("n_steps must be >= 2");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
      throw std::invalid_argument("burn_in_fraction must be in [0, 1)");
    }
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
      throw std::invalid_argument("target_acceptance must be in (0, 1)");
    }
    if (initial_step_scales.size() != dim) {
      throw std::invalid_argument("initial_step_scales size " +
                                  std::to_string(initial_step_scales.size()) +
                                  " does not match parameter count " +
                                  std::to_string(dim));
    }
    for (double s : initial_step_scales) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("step scales must be positive and finite");
      }
    }
    if (adapt_window < 1) throw std::invalid_argument("adapt_window must be >= 1");
  }

  std::size_t burn_in_steps() const {
    return static_cast<std::size_t>(static_cast<double>(n_steps) * burn_in_fraction);
  }
  std::size_t kept_steps() const { return n_steps - burn_in_steps(); }
};

/// Post-burn-in draws from every chain, plus bookkeeping. Recorded states
/// always have finite target density; -inf proposals are rejected, never
/// stored.
struct SampleSet {
  std::vector<std::string> param_names;
  std::vector<DrawMatrix> chains;              // one per chain
  std::vector<double> acceptance_rate;         // per chain, post-burn-in
  std::vector<std::size_t> nonfinite_proposals;  // NaN/+inf target evals per chain
  std::uint64_t seed = 0;

  std::size_t n_chains() const { return chains.size(); }
  std::size_t n_params() const { return param_names.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().rows; }
  std::size_t total_draws() const { return n_chains() * draws_per_chain(); }

  std::size_t param_index(std::string_view name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i) {
      if (param_names[i] == name) return i;
    }
    throw std::invalid_argument("unknown parameter name: " + std::string(name));
  }

  /// All chains' draws of one parameter, chain-major order.
  std::vector<double> pooled(std::size_t param) const {
    std::vector<double> out;
    out.reserve(total_draws());
    for (const DrawMatrix& m : chains) {
      for (std::size_t i = 0; i < m.rows; ++i) out.push_back(m(i, param));
    }
    return out;
  }
  std::vector<double> pooled(std::string_view name) const {
    return pooled(param_index(name));
  }
};

/// Snapshot handed to the step-scale adaptation rule at the end of each
/// burn-in window.
struct AdaptationWindow {
  std::vector<double> scales;  // scales used during the window
  double acceptance = 0.0;     // empirical acceptance over the window
  std::size_t round = 0;       // 0-based adaptation round
};

/// Stochastic-approximation update pushing empirical acceptance toward the
/// target. All scales share one multiplier: acceptance is a property of the
/// joint proposal. The diminishing gain settles the scales well before
/// burn-in ends; the caller freezes them afterwards so the post-burn-in
/// kernel is a fixed Metropolis kernel.
inline std::vector<double> adapt_step_scales(const AdaptationWindow& window,
                                             const ChainConfig& config) {
  const double gain =
      config.adapt_gain / std::sqrt(static_cast<double>(window.round) + 1.0);
  const double factor =
      std::exp(gain * (window.acceptance - config.target_acceptance));
  std::vector<double> updated = window.scales;
  for (double& s : updated) s *= factor;
  return updated;
}

namespace detail {

template <typename LogTarget>
void run_single_chain(const LogTarget& log_target,
                      std::span<const double> init, const ChainConfig& config,
                      std::size_t chain_index, DrawMatrix& out,
                      double& acceptance, std::size_t& nonfinite_count) {
  const std::size_t dim = init.size();
  RandomSource rng(config.seed + chain_index);

  std::vector<double> current(init.begin(), init.end());
  double current_lp = log_target(std::span<const double>(current));
  if (!std::isfinite(current_lp)) {
    throw std::invalid_argument("chain " + std::to_string(chain_index) +
                                ": initial state has non-finite log target");
  }

  std::vector<double> scales = config.initial_step_scales;
  std::vector<double> proposal(dim);

  const std::size_t burn_in = config.burn_in_steps();
  const std::size_t kept = config.kept_steps();
  out = DrawMatrix(kept, dim);

  std::size_t window_accepts = 0;
  std::size_t window_steps = 0;
  std::size_t adapt_round = 0;
  std::size_t kept_accepts = 0;
  nonfinite_count = 0;

  for (std::size_t step = 0; step < config.n_steps; ++step) {
    for (std::size_t j = 0; j < dim; ++j) {
      proposal[j] = current[j] + scales[j] * rng.normal01();
    }
    double proposed_lp = log_target(std::span<const double>(proposal));

    bool accept = false;
    if (std::isnan(proposed_lp) || proposed_lp == std::numeric_limits<double>::infinity()) {
      ++nonfinite_count;  // pathological evaluation; treat as rejected
    } else if (proposed_lp >= current_lp) {
      accept = true;
    } else {
      accept = std::log(rng.uniform01()) < proposed_lp - current_lp;
    }
    if (accept) {
      std::swap(current, proposal);
      current_lp = proposed_lp;
    }

    if (step < burn_in) {
      ++window_steps;
      if (accept) ++window_accepts;
      if (window_steps == config.adapt_window) {
        const double rate = static_cast<double>(window_accepts) /
                            static_cast<double>(window_steps);
        scales = adapt_step_scales({scales, rate, adapt_round}, config);
        ++adapt_round;
        window_steps = 0;
        window_accepts = 0;
      }
    } else {
      if (accept) ++kept_accepts;
      const std::size_t row = step - burn_in;
      for (std::size_t j = 0; j < dim; ++j) out(row, j) = current[j];
    }
  }
  acceptance = kept > 0 ? static_cast<double>(kept_accepts) / static_cast<double>(kept) : 0.0;
}

}  // namespace detail

/// Random-walk Metropolis over an unnormalized log target.
///
/// Each chain c proposes u' = u + dz with dz ~ N(0, diag(scales^2)), accepts
/// with probability min(1, exp(lp' - lp)), adapts its scales only during
/// burn-in, and runs on RNG stream seed + c. Burn-in rows are discarded.
/// Results are bit-identical for a given (target, inits, config) regardless
/// of chain scheduling.
template <typename LogTarget>
SampleSet rw_metropolis(const LogTarget& log_target,
                        const std::vector<std::vector<double>>& inits,
                        const ChainConfig& config,
                        std::vector<std::string> param_names = {}) {
  if (inits.size() != config.n_chains) {
    throw std::invalid_argument("need one initial state per chain");
  }
  const std::size_t dim = inits.front().size();
  for (const auto& init : inits) {
    if (init.size() != dim) {
      throw std::invalid_argument("initial states disagree on dimension");
    }
  }
  config.validate(dim);

  if (param_names.empty()) {
    for (std::size_t j = 0; j < dim; ++j) {
      param_names.push_back("u" + std::to_string(j));
    }
  } else if (param_names.size() != dim) {
    throw std::invalid_argument("param_names size does not match dimension");
  }

  SampleSet samples;
  samples.param_names = std::move(param_names);
  samples.chains.resize(config.n_chains);
  samples.acceptance_rate.assign(config.n_chains, 0.0);
  samples.nonfinite_proposals.assign(config.n_chains, 0);
  samples.seed = config.seed;

  auto run_chain = [&](std::size_t c) {
    detail::run_single_chain(log_target, std::span<const double>(inits[c]),
                             config, c, samples.chains[c],
                             samples.acceptance_rate[c],
                             samples.nonfinite_proposals[c]);
  };

  if (config.parallel_chains && config.n_chains > 1) {
    std::vector<std::future<void>> jobs;
    jobs.reserve(config.n_chains);
    for (std::size_t c = 0; c < config.n_chains; ++c) {
      jobs.push_back(std::async(std::launch::async, run_chain, c));
    }
    for (auto& job : jobs) job.get();
  } else {
    for (std::size_t c = 0; c < config.n_chains; ++c) run_chain(c);
  }
  return samples;
}

/// Convenience overload: one shared initial state broadcast to every chain.
template <typename LogTarget>
SampleSet rw_metropolis(const LogTarget& log_target,
                        const std::vector<double>& init,
                        const ChainConfig& config,
                        std::vector<std::string> param_names = {}) {
  return rw_metropolis(log_target,
                       std::vector<std::vector<double>>(config.n_chains, init),
                       config, std::move(param_names));
}

}  // namespace limebayes
