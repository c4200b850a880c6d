#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "limebayes/diagnostics.hpp"
#include "limebayes/forward_model.hpp"
#include "limebayes/posterior.hpp"
#include "limebayes/probability.hpp"
#include "limebayes/rng.hpp"
#include "limebayes/sampler.hpp"

namespace limebayes {

/// The five quantities the data-generating model depends on. Each must be
/// bound exactly once per problem, either as a sampled unknown or as a
/// fixed constant.
enum class ModelArg { time_constant, start_time, initial_temp, air_temp, noise_sigma };

inline const char* to_string(ModelArg arg) {
  switch (arg) {
    case ModelArg::time_constant: return "time_constant";
    case ModelArg::start_time: return "start_time";
    case ModelArg::initial_temp: return "initial_temp";
    case ModelArg::air_temp: return "air_temp";
    case ModelArg::noise_sigma: return "noise_sigma";
  }
  return "?";
}

struct Unknown {
  std::string name;
  ModelArg binds;
  DistributionSpec prior;
};

/// An inverse problem as a log-posterior target: ordered unknowns with
/// priors, fixed constants, observed data, and the binding onto the forward
/// model. Immutable after construction.
class ProblemSpec {
public:
  ProblemSpec(std::vector<Unknown> unknowns, std::map<ModelArg, double> fixed,
              std::vector<Observation> data)
      : unknowns_(std::move(unknowns)),
        fixed_(std::move(fixed)),
        data_(std::move(data)) {
    std::array<int, 5> bound{};
    for (const Unknown& u : unknowns_) bound[index_of(u.binds)]++;
    for (const auto& [arg, value] : fixed_) {
      require_finite(value, "fixed model argument");
      bound[index_of(arg)]++;
    }
    for (int i = 0; i < 5; ++i) {
      if (bound[static_cast<std::size_t>(i)] != 1) {
        throw std::invalid_argument(
            std::string("model argument ") + to_string(static_cast<ModelArg>(i)) +
            " must be bound exactly once (got " +
            std::to_string(bound[static_cast<std::size_t>(i)]) + ")");
      }
    }
    for (const Observation& obs : data_) {
      require_finite(obs.time_hr, "observation time");
      require_finite(obs.temp_c, "observation temperature");
    }
    start_time_sampled_ = false;
    for (std::size_t i = 0; i < unknowns_.size(); ++i) {
      if (unknowns_[i].binds == ModelArg::start_time) start_time_sampled_ = true;
    }
  }

  std::size_t dim() const { return unknowns_.size(); }
  const std::vector<Unknown>& unknowns() const { return unknowns_; }
  const std::vector<Observation>& data() const { return data_; }
  const std::map<ModelArg, double>& fixed() const { return fixed_; }
  bool start_time_sampled() const { return start_time_sampled_; }

  std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    names.reserve(unknowns_.size());
    for (const Unknown& u : unknowns_) names.push_back(u.name);
    return names;
  }

  struct Bound {
    ModelParams params;
    ExperimentConditions cond;
    NoiseModel noise;
  };

  Bound bind(std::span<const double> u) const {
    check_dim(u);
    Bound b;
    auto value_of = [&](ModelArg arg) {
      for (std::size_t i = 0; i < unknowns_.size(); ++i) {
        if (unknowns_[i].binds == arg) return u[i];
      }
      return fixed_.at(arg);
    };
    b.params.time_constant_hr = value_of(ModelArg::time_constant);
    b.cond.start_time_hr = value_of(ModelArg::start_time);
    b.cond.initial_temp_c = value_of(ModelArg::initial_temp);
    b.cond.air_temp_c = value_of(ModelArg::air_temp);
    b.noise.sigma_c = value_of(ModelArg::noise_sigma);
    return b;
  }

  double log_prior(std::span<const double> u) const {
    check_dim(u);
    double lp = 0.0;
    for (std::size_t i = 0; i < unknowns_.size(); ++i) {
      const double term = unknowns_[i].prior.log_pdf(u[i]);
      if (term == kNegInf) return kNegInf;
      lp += term;
    }
    return lp;
  }

  /// Unnormalized log posterior: sum of log priors plus log likelihood.
  /// A prior at -inf short-circuits without touching the likelihood.
  /// When the start time is itself sampled, states with t0 >= any
  /// observation time are unphysical (the datum must postdate the start)
  /// and get -inf.
  double log_posterior(std::span<const double> u) const {
    const double lp = log_prior(u);
    if (lp == kNegInf) return kNegInf;
    const Bound b = bind(u);
    if (start_time_sampled_) {
      for (const Observation& obs : data_) {
        if (b.cond.start_time_hr >= obs.time_hr) return kNegInf;
      }
    }
    const double ll = log_likelihood_series(data_, b.params, b.cond, b.noise);
    if (ll == kNegInf) return kNegInf;
    return lp + ll;
  }

  /// ForwardBinding for pushing SampleSet draws through the model.
  ForwardBinding forward_binding() const {
    ForwardBinding binding;
    binding.time_constant.clear();
    binding.start_time.clear();
    binding.initial_temp.clear();
    binding.air_temp.clear();
    binding.noise_sigma.clear();
    auto assign = [&](ModelArg arg, const std::string& name, double fixed_value) {
      switch (arg) {
        case ModelArg::time_constant:
          binding.time_constant = name;
          binding.fixed_time_constant = fixed_value;
          break;
        case ModelArg::start_time:
          binding.start_time = name;
          binding.fixed_start_time = fixed_value;
          break;
        case ModelArg::initial_temp:
          binding.initial_temp = name;
          binding.fixed_initial_temp = fixed_value;
          break;
        case ModelArg::air_temp:
          binding.air_temp = name;
          binding.fixed_air_temp = fixed_value;
          break;
        case ModelArg::noise_sigma:
          binding.noise_sigma = name;
          binding.fixed_noise_sigma = fixed_value;
          break;
      }
    };
    for (const Unknown& u : unknowns_) assign(u.binds, u.name, 0.0);
    for (const auto& [arg, value] : fixed_) assign(arg, "", value);
    return binding;
  }

private:
  static std::size_t index_of(ModelArg arg) { return static_cast<std::size_t>(arg); }
  void check_dim(std::span<const double> u) const {
    if (u.size() != unknowns_.size()) {
      throw std::invalid_argument("parameter vector has wrong dimension");
    }
  }

  std::vector<Unknown> unknowns_;
  std::map<ModelArg, double> fixed_;
  std::vector<Observation> data_;
  bool start_time_sampled_ = false;
};

/// The synthetic-experiment ground truth. Kept strictly out of problem
/// construction (no builder accepts it); used only to generate data and to
/// grade posteriors afterwards.
struct GroundTruth {
  ModelParams params;
  ExperimentConditions cond;
  double noise_sigma = 0.16;
  std::uint64_t seed = 0;
};

/// Draw observations from the data-generating model: the model curve plus
/// iid zero-mean Gaussian noise at each schedule time.
inline std::vector<Observation> synthesize_data(const GroundTruth& truth,
                                                std::span<const double> schedule_hr,
                                                RandomSource& rng) {
  if (!(truth.noise_sigma > 0.0)) {
    throw std::invalid_argument("synthesize_data: noise sigma must be > 0");
  }
  std::vector<Observation> data;
  data.reserve(schedule_hr.size());
  for (double t : schedule_hr) {
    if (t < truth.cond.start_time_hr) {
      throw std::invalid_argument("schedule time precedes the experiment start");
    }
    const double clean = lime_temperature(t, truth.params, truth.cond);
    data.push_back({t, clean + rng.normal(0.0, truth.noise_sigma)});
  }
  return data;
}

/// Uniformly spaced measurement schedule over [start, start + span].
inline std::vector<double> uniform_schedule(double start_hr, double span_hr,
                                            std::size_t n) {
  if (n < 1) throw std::invalid_argument("schedule needs at least one point");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = n == 1 ? start_hr + span_hr
                  : start_hr + span_hr * static_cast<double>(i) /
                                   static_cast<double>(n - 1);
  }
  return t;
}

struct PriorOverrides {
  std::optional<DistributionSpec> time_constant;
  std::optional<DistributionSpec> initial_temp;
  std::optional<DistributionSpec> air_temp;
  std::optional<DistributionSpec> noise_sigma;
  std::optional<DistributionSpec> start_time;
};

/// Parameter identification: infer (lambda, theta0, theta_air, sigma) from a
/// cooling time series. Defaults follow the weakly informative setup:
/// lambda from the back-of-the-envelope estimate with generous spread,
/// conditions from their noisy measurements, sigma diffuse on (0, 1] C.
inline ProblemSpec build_problem_I(std::vector<Observation> data,
                                   double theta0_obs_c, double theta_air_obs_c,
                                   double sigma_prior_max_c = 1.0,
                                   GaussianMoments lambda_prior = {1.0, 0.3},
                                   double condition_prior_sigma_c = 0.5,
                                   const PriorOverrides& overrides = {}) {
  if (data.empty()) {
    throw std::invalid_argument("problem I needs at least one observation");
  }
  auto lambda = overrides.time_constant.value_or(DistributionSpec::truncated_normal(
      lambda_prior.mean, lambda_prior.std, 0.0,
      std::numeric_limits<double>::infinity()));
  auto theta0 = overrides.initial_temp.value_or(
      DistributionSpec::normal(theta0_obs_c, condition_prior_sigma_c));
  auto theta_air = overrides.air_temp.value_or(
      DistributionSpec::normal(theta_air_obs_c, condition_prior_sigma_c));
  auto sigma = overrides.noise_sigma.value_or(
      DistributionSpec::uniform(0.0, sigma_prior_max_c));

  std::vector<Unknown> unknowns;
  unknowns.push_back({"lambda", ModelArg::time_constant, std::move(lambda)});
  unknowns.push_back({"theta0", ModelArg::initial_temp, std::move(theta0)});
  unknowns.push_back({"theta_air", ModelArg::air_temp, std::move(theta_air)});
  unknowns.push_back({"sigma", ModelArg::noise_sigma, std::move(sigma)});
  return ProblemSpec(std::move(unknowns), {{ModelArg::start_time, 0.0}},
                     std::move(data));
}

/// Determined time reversal: reconstruct theta0 from one later measurement,
/// start time known. Lambda and sigma priors come from a previous problem-I
/// posterior (sigma truncated at zero: a plain normal would admit
/// nonpositive noise, which the likelihood cannot evaluate).
inline ProblemSpec build_problem_IIa(double theta_prime_obs_c, double t_prime_hr,
                                     double theta_air_obs_c,
                                     GaussianMoments lambda_summary = {0.98, 0.02},
                                     GaussianMoments sigma_summary = {0.16, 0.03},
                                     double condition_prior_sigma_c = 0.5,
                                     const PriorOverrides& overrides = {}) {
  if (!(t_prime_hr > 0.0)) {
    throw std::invalid_argument("problem IIa needs t_prime > 0");
  }
  auto theta0 = overrides.initial_temp.value_or(DistributionSpec::uniform(0.0, 15.0));
  auto lambda = overrides.time_constant.value_or(
      DistributionSpec::normal(lambda_summary.mean, lambda_summary.std));
  auto theta_air = overrides.air_temp.value_or(
      DistributionSpec::normal(theta_air_obs_c, condition_prior_sigma_c));
  auto sigma = overrides.noise_sigma.value_or(DistributionSpec::truncated_normal(
      sigma_summary.mean, sigma_summary.std, 0.0,
      std::numeric_limits<double>::infinity()));

  std::vector<Unknown> unknowns;
  unknowns.push_back({"theta0", ModelArg::initial_temp, std::move(theta0)});
  unknowns.push_back({"lambda", ModelArg::time_constant, std::move(lambda)});
  unknowns.push_back({"theta_air", ModelArg::air_temp, std::move(theta_air)});
  unknowns.push_back({"sigma", ModelArg::noise_sigma, std::move(sigma)});
  return ProblemSpec(std::move(unknowns), {{ModelArg::start_time, 0.0}},
                     {{t_prime_hr, theta_prime_obs_c}});
}

inline DistributionSpec default_t0_prior() {
  return DistributionSpec::truncated_normal(-0.1, 0.25, -1.0, 1.0);
}

/// Underdetermined time reversal: both the start time and the initial
/// temperature are unknown. States with t0 >= t_prime are rejected in the
/// posterior (the measurement must postdate the start).
inline ProblemSpec build_problem_IIb(double theta_prime_obs_c, double t_prime_hr,
                                     double theta_air_obs_c,
                                     GaussianMoments lambda_summary = {0.98, 0.02},
                                     GaussianMoments sigma_summary = {0.16, 0.03},
                                     std::optional<DistributionSpec> t0_prior = {},
                                     double condition_prior_sigma_c = 0.5,
                                     const PriorOverrides& overrides = {}) {
  auto t0 = overrides.start_time
                ? *overrides.start_time
                : (t0_prior ? *t0_prior : default_t0_prior());
  auto theta0 = overrides.initial_temp.value_or(DistributionSpec::uniform(0.0, 15.0));
  auto lambda = overrides.time_constant.value_or(
      DistributionSpec::normal(lambda_summary.mean, lambda_summary.std));
  auto theta_air = overrides.air_temp.value_or(
      DistributionSpec::normal(theta_air_obs_c, condition_prior_sigma_c));
  auto sigma = overrides.noise_sigma.value_or(DistributionSpec::truncated_normal(
      sigma_summary.mean, sigma_summary.std, 0.0,
      std::numeric_limits<double>::infinity()));

  std::vector<Unknown> unknowns;
  unknowns.push_back({"t0", ModelArg::start_time, std::move(t0)});
  unknowns.push_back({"theta0", ModelArg::initial_temp, std::move(theta0)});
  unknowns.push_back({"lambda", ModelArg::time_constant, std::move(lambda)});
  unknowns.push_back({"theta_air", ModelArg::air_temp, std::move(theta_air)});
  unknowns.push_back({"sigma", ModelArg::noise_sigma, std::move(sigma)});
  return ProblemSpec(std::move(unknowns), {}, {{t_prime_hr, theta_prime_obs_c}});
}

/// Independent prior draw per chain, retried until the posterior is finite
/// (needed e.g. when a prior admits states the likelihood rejects).
inline std::vector<std::vector<double>> draw_chain_inits(const ProblemSpec& problem,
                                                         std::size_t n_chains,
                                                         std::uint64_t seed) {
  std::vector<std::vector<double>> inits;
  inits.reserve(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) {
    RandomSource rng(mix_seed(seed ^ 0x696e6974ULL) + c);
    std::vector<double> u(problem.dim());
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      for (std::size_t i = 0; i < problem.dim(); ++i) {
        u[i] = problem.unknowns()[i].prior.sample(rng);
      }
      ok = std::isfinite(problem.log_posterior(u));
    }
    if (!ok) {
      throw std::runtime_error("chain " + std::to_string(c) +
                               ": no finite-posterior initial state in 100 prior draws");
    }
    inits.push_back(u);
  }
  return inits;
}

/// Half a prior standard deviation per parameter; burn-in adaptation takes
/// it from there.
inline std::vector<double> default_step_scales(const ProblemSpec& problem) {
  std::vector<double> scales;
  scales.reserve(problem.dim());
  for (const Unknown& u : problem.unknowns()) {
    scales.push_back(0.5 * u.prior.scale_hint());
  }
  return scales;
}

/// Run the sampler on a problem: prior-drawn inits, default scales unless
/// the config provides them, parameter names from the problem.
inline SampleSet sample_problem(const ProblemSpec& problem, ChainConfig config) {
  if (config.initial_step_scales.empty()) {
    config.initial_step_scales = default_step_scales(problem);
  }
  const auto inits = draw_chain_inits(problem, config.n_chains, config.seed);
  const auto target = [&problem](std::span<const double> u) {
    return problem.log_posterior(u);
  };
  return rw_metropolis(target, inits, config, problem.param_names());
}

/// One point of the ill-conditioning sweep: measure at t_prime, run the
/// determined time reversal, record how the theta0 posterior spreads.
struct SweepPoint {
  double t_prime_hr = 0.0;
  Observation datum;
  double theta0_mean = 0.0;
  double theta0_std = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double max_rhat = 0.0;
  std::vector<double> theta0_draws;  // pooled, for ridge plots / KS checks
};

struct SweepConfig {
  GaussianMoments lambda_summary = {0.98, 0.02};
  GaussianMoments sigma_summary = {0.16, 0.03};
  double condition_prior_sigma_c = 0.5;
  double level = 0.9;
  ChainConfig chains;
  bool parallel_points = true;
};

/// For each measurement time: synthesize one observation from the truth,
/// infer theta0 as in problem IIa, and record the posterior spread. Points
/// run in parallel, each on a seed derived from (config seed, point index);
/// the air-temperature measurement is drawn once so points differ only in
/// the measurement time.
inline std::vector<SweepPoint> ill_conditioning_sweep(const GroundTruth& truth,
                                                      std::span<const double> t_primes,
                                                      const SweepConfig& config) {
  for (std::size_t i = 1; i < t_primes.size(); ++i) {
    if (!(t_primes[i] > t_primes[i - 1])) {
      throw std::invalid_argument("sweep times must be strictly increasing");
    }
  }
  RandomSource meas_rng(mix_seed(config.chains.seed ^ 0x7377656570ULL));
  const double theta_air_obs =
      truth.cond.air_temp_c +
      meas_rng.normal(0.0, config.condition_prior_sigma_c);

  std::vector<SweepPoint> points(t_primes.size());
  auto run_point = [&](std::size_t i) {
    const double t_prime = t_primes[i];
    RandomSource rng(mix_seed(config.chains.seed + 0x100 + i));
    const std::array<double, 1> schedule{t_prime};
    const Observation datum = synthesize_data(truth, schedule, rng).front();

    const ProblemSpec problem = build_problem_IIa(
        datum.temp_c, t_prime, theta_air_obs, config.lambda_summary,
        config.sigma_summary, config.condition_prior_sigma_c);

    ChainConfig chains = config.chains;
    chains.seed = mix_seed(config.chains.seed + 0x9000 + i);
    chains.parallel_chains = !config.parallel_points;  // avoid nested fan-out
    const SampleSet samples = sample_problem(problem, chains);

    SweepPoint& point = points[i];
    point.t_prime_hr = t_prime;
    point.datum = datum;
    point.theta0_draws = samples.pooled("theta0");
    const GaussianMoments m = gaussian_summary(point.theta0_draws);
    point.theta0_mean = m.mean;
    point.theta0_std = m.std;
    const auto [lo, hi] = equal_tailed_ci(point.theta0_draws, config.level);
    point.ci_lo = lo;
    point.ci_hi = hi;
    const auto rhats = split_rhat(samples);
    point.max_rhat = *std::max_element(rhats.begin(), rhats.end());
  };

  if (config.parallel_points && t_primes.size() > 1) {
    std::vector<std::future<void>> jobs;
    jobs.reserve(t_primes.size());
    for (std::size_t i = 0; i < t_primes.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run_point, i));
    }
    for (auto& job : jobs) job.get();
  } else {
    for (std::size_t i = 0; i < t_primes.size(); ++i) run_point(i);
  }
  return points;
}

}  // namespace limebayes
