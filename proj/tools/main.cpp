// limebayes command-line tool: synthesize or ingest cooling data, run the
// inverse problems, sweep measurement times, and emit plot-ready bundles.
//
// Exit codes: 0 = success (and, for sampling commands, all split-Rhat < 1.05);
// 1 = sampling finished but did not converge; 2 = invalid input/config.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>

#include "limebayes/config.hpp"
#include "limebayes/diagnostics.hpp"
#include "limebayes/forward_model.hpp"
#include "limebayes/ingest.hpp"
#include "limebayes/io.hpp"
#include "limebayes/posterior.hpp"
#include "limebayes/probability.hpp"
#include "limebayes/problems.hpp"
#include "limebayes/sampler.hpp"
#include "limebayes/svg.hpp"

namespace fs = std::filesystem;
using namespace limebayes;

namespace {

struct TruthOptions {
  double lambda = 0.98;
  double theta0 = 5.0;
  double theta_air = 20.0;
  double sigma = 0.16;
};

struct SamplerOptions {
  std::size_t chains = 4;
  std::size_t steps = 50000;
  double burn_in = 0.5;
  double target_accept = 0.3;
  std::size_t adapt_window = 50;
  bool sequential = false;
};

struct PriorOptions {
  std::string lambda, theta0, theta_air, sigma, t0;
  double condition_sigma = 0.5;

  PriorOverrides resolve() const {
    PriorOverrides overrides;
    if (!lambda.empty()) overrides.time_constant = parse_distribution(lambda);
    if (!theta0.empty()) overrides.initial_temp = parse_distribution(theta0);
    if (!theta_air.empty()) overrides.air_temp = parse_distribution(theta_air);
    if (!sigma.empty()) overrides.noise_sigma = parse_distribution(sigma);
    if (!t0.empty()) overrides.start_time = parse_distribution(t0);
    return overrides;
  }
};

GaussianMoments parse_normal_summary(const std::string& text, const char* flag) {
  const DistributionSpec dist = parse_distribution(text);
  if (const auto* n = dist.as_normal()) return {n->mu, n->sigma};
  throw std::invalid_argument(std::string(flag) + " must be normal(mu,sigma)");
}

/// Applies `[section] key = value` config entries to options the user did
/// not set on the command line (flags win). Unknown keys are an error, so
/// typos fail before any sampling starts.
class IniBinder {
public:
  template <typename T>
  void bind(CLI::Option* opt, std::string key, T* target) {
    entries_.push_back({opt, std::move(key), [target](const std::string& raw) {
                          if constexpr (std::is_same_v<T, std::string>) {
                            *target = raw;
                          } else if constexpr (std::is_same_v<T, bool>) {
                            *target = raw == "true" || raw == "1" || raw == "yes";
                          } else if constexpr (std::is_same_v<T, double>) {
                            *target = std::stod(raw);
                          } else {
                            *target = static_cast<T>(std::stoull(raw));
                          }
                        }});
  }

  void apply(const std::filesystem::path& path) const {
    auto ini = read_ini(path);
    for (const auto& entry : entries_) {
      const auto it = ini.find(entry.key);
      if (it == ini.end()) continue;
      if (entry.opt == nullptr || entry.opt->count() == 0) {
        try {
          entry.parse(it->second);
        } catch (const std::exception& e) {
          throw std::invalid_argument("config key '" + entry.key + "': " + e.what());
        }
      }
      ini.erase(it);
    }
    if (!ini.empty()) {
      throw std::invalid_argument("config: unknown key '" + ini.begin()->first + "'");
    }
  }

private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<void(const std::string&)> parse;
  };
  std::vector<Entry> entries_;
};

ChainConfig make_chain_config(const SamplerOptions& opts, std::uint64_t seed) {
  ChainConfig config;
  config.n_chains = opts.chains;
  config.n_steps = opts.steps;
  config.burn_in_fraction = opts.burn_in;
  config.target_acceptance = opts.target_accept;
  config.adapt_window = opts.adapt_window;
  config.parallel_chains = !opts.sequential;
  config.seed = seed;
  return config;
}

void add_truth_options(CLI::App* cmd, TruthOptions& truth, IniBinder& binder) {
  binder.bind(cmd->add_option("--true-lambda", truth.lambda,
                              "ground-truth time constant [hr]"),
              "truth.lambda", &truth.lambda);
  binder.bind(cmd->add_option("--true-theta0", truth.theta0,
                              "ground-truth initial temperature [C]"),
              "truth.theta0", &truth.theta0);
  binder.bind(cmd->add_option("--true-theta-air", truth.theta_air,
                              "ground-truth air temperature [C]"),
              "truth.theta_air", &truth.theta_air);
  binder.bind(cmd->add_option("--true-sigma", truth.sigma,
                              "ground-truth measurement noise std [C]"),
              "truth.sigma", &truth.sigma);
}

void add_sampler_options(CLI::App* cmd, SamplerOptions& opts, IniBinder& binder) {
  binder.bind(cmd->add_option("--chains", opts.chains, "number of chains"),
              "sampler.chains", &opts.chains);
  binder.bind(cmd->add_option("--steps", opts.steps,
                              "steps per chain, burn-in included"),
              "sampler.steps", &opts.steps);
  binder.bind(cmd->add_option("--burn-in", opts.burn_in, "burn-in fraction in [0,1)"),
              "sampler.burn_in", &opts.burn_in);
  binder.bind(cmd->add_option("--target-accept", opts.target_accept,
                              "adaptation target acceptance rate"),
              "sampler.target_accept", &opts.target_accept);
  binder.bind(cmd->add_option("--adapt-window", opts.adapt_window,
                              "steps per burn-in adaptation round"),
              "sampler.adapt_window", &opts.adapt_window);
  binder.bind(cmd->add_flag("--sequential", opts.sequential, "run chains sequentially"),
              "sampler.sequential", &opts.sequential);
}

void add_prior_options(CLI::App* cmd, PriorOptions& priors, IniBinder& binder) {
  const std::string hint =
      " (literal: uniform(lo,hi) | normal(mu,sigma) | truncnormal(mu,sigma,lo,hi))";
  binder.bind(cmd->add_option("--prior-lambda", priors.lambda,
                              "prior override for the time constant" + hint),
              "priors.lambda", &priors.lambda);
  binder.bind(cmd->add_option("--prior-theta0", priors.theta0,
                              "prior override for the initial temperature" + hint),
              "priors.theta0", &priors.theta0);
  binder.bind(cmd->add_option("--prior-theta-air", priors.theta_air,
                              "prior override for the air temperature" + hint),
              "priors.theta_air", &priors.theta_air);
  binder.bind(cmd->add_option("--prior-sigma", priors.sigma,
                              "prior override for the noise std" + hint),
              "priors.sigma", &priors.sigma);
  binder.bind(cmd->add_option("--prior-t0", priors.t0,
                              "prior override for the start time (problem IIb)" + hint),
              "priors.t0", &priors.t0);
  binder.bind(cmd->add_option("--sigma-meas", priors.condition_sigma,
                              "std of the informative condition priors [C]"),
              "priors.sigma_meas", &priors.condition_sigma);
}

std::vector<double> default_trajectory_grid(double lo, double hi, std::size_t n = 121) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return grid;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string problem = "I";
  std::string out = "out";
  std::uint64_t seed = 42;
  std::string config_path;
  TruthOptions truth;
  std::size_t n = 20;
  double span = -1.0;  // <0 -> 4 * lambda
  double t_prime = 1.0;
  double sigma_meas = 0.5;
};

int cmd_simulate(const SimulateArgs& args) {
  GroundTruth truth;
  truth.params.time_constant_hr = args.truth.lambda;
  truth.cond = {0.0, args.truth.theta0, args.truth.theta_air};
  truth.noise_sigma = args.truth.sigma;
  truth.seed = args.seed;
  validate_conditions(truth.cond);
  if (!(truth.params.time_constant_hr > 0.0)) {
    throw std::invalid_argument("true lambda must be positive");
  }

  std::vector<double> schedule;
  if (args.problem == "I") {
    const double span = args.span > 0.0 ? args.span : 4.0 * args.truth.lambda;
    schedule = uniform_schedule(0.0, span, args.n);
  } else if (args.problem == "IIa" || args.problem == "IIb") {
    if (!(args.t_prime > 0.0)) {
      throw std::invalid_argument("t-prime must be positive");
    }
    schedule = {args.t_prime};
  } else {
    throw std::invalid_argument("unknown problem '" + args.problem + "'");
  }

  RandomSource data_rng(mix_seed(args.seed ^ 0xda7aULL));
  const auto data = synthesize_data(truth, schedule, data_rng);

  RandomSource meas_rng(mix_seed(args.seed ^ 0xc0bdULL));
  const double theta0_obs = truth.cond.initial_temp_c + meas_rng.normal(0.0, args.sigma_meas);
  const double theta_air_obs = truth.cond.air_temp_c + meas_rng.normal(0.0, args.sigma_meas);

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  write_observations_csv(out_dir / "data.csv", data);

  Json conditions;
  conditions["problem"] = args.problem;
  conditions["theta_air_obs"] = theta_air_obs;
  if (args.problem == "I") {
    conditions["theta0_obs"] = theta0_obs;
  } else {
    conditions["t_prime"] = data.front().time_hr;
    conditions["theta_prime_obs"] = data.front().temp_c;
  }
  write_json(out_dir / "conditions.json", conditions);

  Json truth_j = truth_json(truth);
  if (args.problem != "I") {
    truth_j["theta0_obs_heldout"] = theta0_obs;  // graded against, never inferred from
  }
  write_json(out_dir / "truth.json", truth_j);

  std::cout << "wrote " << (out_dir / "data.csv").string() << " (" << data.size()
            << " rows), conditions.json, truth.json\n";
  return 0;
}

// ------------------------------------------------------------------- infer

struct InferArgs {
  std::string problem = "I";
  std::string out = "out";
  std::uint64_t seed = 42;
  double level = 0.9;
  std::string config_path;
  std::string data_path;
  std::string conditions_path;
  bool synthesize = false;
  TruthOptions truth;
  std::size_t n = 20;
  double span = -1.0;
  double t_prime = 1.0;
  std::optional<double> theta0_obs;
  std::optional<double> theta_air_obs;
  std::optional<double> theta_prime_obs;
  std::string lambda_posterior;  // "normal(m,s)" shortcut from a previous run
  std::string sigma_posterior;
  PriorOptions priors;
  SamplerOptions sampler;
  std::size_t n_trajectories = 100;
  bool trajectories_explicit = false;
  bool svg = false;
};

struct ResolvedData {
  std::vector<Observation> data;
  double theta0_obs = 0.0;
  double theta_air_obs = 20.0;
  double t_prime = 1.0;
  double theta_prime_obs = 0.0;
};

ResolvedData resolve_data(const InferArgs& args) {
  ResolvedData r;
  if (args.synthesize) {
    GroundTruth truth;
    truth.params.time_constant_hr = args.truth.lambda;
    truth.cond = {0.0, args.truth.theta0, args.truth.theta_air};
    truth.noise_sigma = args.truth.sigma;
    validate_conditions(truth.cond);

    std::vector<double> schedule;
    if (args.problem == "I") {
      const double span = args.span > 0.0 ? args.span : 4.0 * args.truth.lambda;
      schedule = uniform_schedule(0.0, span, args.n);
    } else {
      schedule = {args.t_prime};
    }
    RandomSource data_rng(mix_seed(args.seed ^ 0xda7aULL));
    r.data = synthesize_data(truth, schedule, data_rng);

    RandomSource meas_rng(mix_seed(args.seed ^ 0xc0bdULL));
    r.theta0_obs = truth.cond.initial_temp_c + meas_rng.normal(0.0, args.priors.condition_sigma);
    r.theta_air_obs = truth.cond.air_temp_c + meas_rng.normal(0.0, args.priors.condition_sigma);
  } else if (!args.data_path.empty()) {
    r.data = load_timeseries(args.data_path, ValueFormat::temperature_celsius,
                             TimeUnit::hours);
    if (r.data.empty()) throw std::invalid_argument("data file has no rows");
    r.theta0_obs = r.data.front().temp_c;
    if (!args.conditions_path.empty()) {
      std::ifstream in(args.conditions_path);
      if (!in) throw std::invalid_argument("cannot open " + args.conditions_path);
      Json j = Json::parse(in);
      if (j.contains("theta0_obs")) r.theta0_obs = j["theta0_obs"].get<double>();
      if (j.contains("theta_air_obs")) r.theta_air_obs = j["theta_air_obs"].get<double>();
    }
  } else if (args.problem != "I" && args.theta_prime_obs) {
    // single-measurement problems can be stated entirely with flags
    r.data = {{args.t_prime, *args.theta_prime_obs}};
  } else {
    throw std::invalid_argument(
        "provide --data <csv>, --synthesize, or (IIa/IIb) --t-prime with --theta-prime-obs");
  }

  if (args.problem != "I") {
    // the single measurement is the last row; flags override below
    r.t_prime = r.data.back().time_hr;
    r.theta_prime_obs = r.data.back().temp_c;
  }
  if (args.theta0_obs) r.theta0_obs = *args.theta0_obs;
  if (args.theta_air_obs) r.theta_air_obs = *args.theta_air_obs;
  if (args.theta_prime_obs) r.theta_prime_obs = *args.theta_prime_obs;
  return r;
}

ProblemSpec build_problem(const InferArgs& args, const ResolvedData& data) {
  PriorOverrides overrides = args.priors.resolve();
  GaussianMoments lambda_summary{0.98, 0.02};
  GaussianMoments sigma_summary{0.16, 0.03};
  if (!args.lambda_posterior.empty()) {
    lambda_summary = parse_normal_summary(args.lambda_posterior, "--lambda-posterior");
  }
  if (!args.sigma_posterior.empty()) {
    sigma_summary = parse_normal_summary(args.sigma_posterior, "--sigma-posterior");
  }

  if (args.problem == "I") {
    return build_problem_I(data.data, data.theta0_obs, data.theta_air_obs, 1.0,
                           {1.0, 0.3}, args.priors.condition_sigma, overrides);
  }
  if (args.problem == "IIa") {
    return build_problem_IIa(data.theta_prime_obs, data.t_prime, data.theta_air_obs,
                             lambda_summary, sigma_summary,
                             args.priors.condition_sigma, overrides);
  }
  if (args.problem == "IIb") {
    return build_problem_IIb(data.theta_prime_obs, data.t_prime, data.theta_air_obs,
                             lambda_summary, sigma_summary, {},
                             args.priors.condition_sigma, overrides);
  }
  throw std::invalid_argument("unknown problem '" + args.problem + "'");
}

int cmd_infer(const InferArgs& args) {
  if (!(args.level > 0.0 && args.level <= 1.0)) {
    throw std::invalid_argument("--level must be in (0,1]");
  }
  // Fail fast: everything below must succeed before any output appears.
  const ResolvedData data = resolve_data(args);
  const ProblemSpec problem = build_problem(args, data);
  ChainConfig chain_config = make_chain_config(args.sampler, args.seed);
  chain_config.initial_step_scales = default_step_scales(problem);
  chain_config.validate(problem.dim());
  std::size_t n_trajectories = args.n_trajectories;
  const std::size_t kept_draws = chain_config.n_chains * chain_config.kept_steps();
  if (n_trajectories > kept_draws) {
    if (args.trajectories_explicit) {
      throw std::invalid_argument("--trajectories exceeds the number of kept draws");
    }
    n_trajectories = kept_draws;  // shrink the default ensemble for tiny runs
  }

  const SampleSet samples = sample_problem(problem, chain_config);

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);

  write_observations_csv(out_dir / "data.csv", problem.data());
  write_samples_csv(out_dir / "samples.csv", samples);

  const Json diag = diagnostics_json(samples);
  write_json(out_dir / "diagnostics.json", diag);

  const PosteriorSummary summary = summarize(samples, args.level);
  write_json(out_dir / "summary.json", summary_json(summary));
  for (const ParamSummary& p : summary.params) {
    write_kde_csv(out_dir / ("kde_" + p.name + ".csv"), p.density);
  }
  for (std::size_t i = 0; i < problem.unknowns().size(); ++i) {
    write_overlay_csv(out_dir / ("overlay_" + problem.unknowns()[i].name + ".csv"),
                      summary.params[i].density, problem.unknowns()[i].prior);
  }

  // trajectory ensemble over the data span (IIb: from the earliest sampled
  // start time so the backward fan is visible)
  double grid_lo = 0.0;
  double grid_hi = problem.data().back().time_hr;
  if (problem.start_time_sampled()) {
    const auto t0_draws = samples.pooled("t0");
    grid_lo = *std::min_element(t0_draws.begin(), t0_draws.end());
  }
  RandomSource traj_rng(mix_seed(args.seed ^ 0x7247ULL));
  const auto grid = default_trajectory_grid(grid_lo, grid_hi);
  const auto ensemble = posterior_trajectories(samples, problem.forward_binding(),
                                               n_trajectories, grid, traj_rng);
  write_trajectories_csv(out_dir / "trajectories.csv", ensemble);

  const auto residuals = residual_summary(samples, problem.forward_binding(),
                                          problem.data());
  write_residuals_csv(out_dir / "residuals.csv", residuals);

  if (args.problem == "IIb") {
    const auto t0_draws = samples.pooled("t0");
    const auto theta0_draws = samples.pooled("theta0");
    write_joint_density_csv(out_dir / "joint_t0_theta0.csv",
                            joint_grid_density(t0_draws, theta0_draws), "t0",
                            "theta0");
    // classical one-parameter solution family, drawn at the lambda prior mean
    double lambda_prior_mean = 0.98;
    if (!args.lambda_posterior.empty()) {
      lambda_prior_mean =
          parse_normal_summary(args.lambda_posterior, "--lambda-posterior").mean;
    }
    const double t_lo = *std::min_element(t0_draws.begin(), t0_draws.end());
    const double t_hi = data.t_prime - 1e-6 * std::max(1.0, std::abs(data.t_prime));
    std::vector<double> t0_grid;
    for (std::size_t i = 0; i < 200; ++i) {
      t0_grid.push_back(t_lo + (t_hi - t_lo) * static_cast<double>(i) / 199.0);
    }
    const auto curve =
        classical_solution_curve(data.t_prime, data.theta_prime_obs,
                                 data.theta_air_obs, lambda_prior_mean, t0_grid);
    write_curve_csv(out_dir / "classical_curve.csv", curve, "t0", "theta0");
  }

  if (args.svg) {
    SvgChart chart;
    for (const auto& member : ensemble.members) {
      chart.add_line(ensemble.time_grid, member, "#7aa3cc", 0.6, 0.25);
    }
    std::vector<double> dx, dy;
    for (const Observation& obs : problem.data()) {
      dx.push_back(obs.time_hr);
      dy.push_back(obs.temp_c);
    }
    chart.add_points(dx, dy, "#222222", 3.0);
    chart.set_caption("posterior trajectories vs data (problem " + args.problem + ")");
    chart.write(out_dir / "trajectories.svg");

    for (std::size_t i = 0; i < problem.unknowns().size(); ++i) {
      const auto& p = summary.params[i];
      SvgChart density_chart;
      std::vector<double> prior_density(p.density.grid.size());
      for (std::size_t g = 0; g < p.density.grid.size(); ++g) {
        prior_density[g] = std::exp(problem.unknowns()[i].prior.log_pdf(p.density.grid[g]));
      }
      density_chart.add_line(p.density.grid, prior_density, "#999999", 1.0);
      density_chart.add_line(p.density.grid, p.density.density, "#cc5533", 1.5);
      density_chart.set_caption(p.name + ": prior (grey) vs posterior");
      density_chart.write(out_dir / ("kde_" + p.name + ".svg"));
    }
  }

  const bool converged = diag["converged"].get<bool>();
  std::cout << "report bundle in " << out_dir.string()
            << (converged ? " (converged)" : " (NOT converged: max Rhat >= 1.05)")
            << "\n";
  for (const ParamSummary& p : summary.params) {
    std::cout << "  " << p.name << ": mean " << format_double(p.mean) << ", std "
              << format_double(p.std) << ", " << format_double(100.0 * args.level)
              << "% CI [" << format_double(p.ci_lo) << ", " << format_double(p.ci_hi)
              << "]\n";
  }
  return converged ? 0 : 1;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
  std::string out = "out";
  std::uint64_t seed = 42;
  double level = 0.9;
  std::string config_path;
  TruthOptions truth;
  std::vector<double> t_primes;  // empty -> {0.5,1,2,3,4} * lambda
  std::string lambda_posterior;
  std::string sigma_posterior;
  double sigma_meas = 0.5;
  SamplerOptions sampler;
  bool svg = false;
};

int cmd_sweep(const SweepArgs& args) {
  GroundTruth truth;
  truth.params.time_constant_hr = args.truth.lambda;
  truth.cond = {0.0, args.truth.theta0, args.truth.theta_air};
  truth.noise_sigma = args.truth.sigma;
  truth.seed = args.seed;
  validate_conditions(truth.cond);

  std::vector<double> t_primes = args.t_primes;
  if (t_primes.empty()) {
    for (double f : {0.5, 1.0, 2.0, 3.0, 4.0}) t_primes.push_back(f * args.truth.lambda);
  }

  SweepConfig config;
  config.level = args.level;
  config.condition_prior_sigma_c = args.sigma_meas;
  config.chains = make_chain_config(args.sampler, args.seed);
  if (!args.lambda_posterior.empty()) {
    config.lambda_summary =
        parse_normal_summary(args.lambda_posterior, "--lambda-posterior");
  }
  if (!args.sigma_posterior.empty()) {
    config.sigma_summary =
        parse_normal_summary(args.sigma_posterior, "--sigma-posterior");
  }

  const auto points = ill_conditioning_sweep(truth, t_primes, config);

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  write_sweep_csv(out_dir / "sweep.csv", points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    write_kde_csv(out_dir / ("sweep_kde_theta0_" + std::to_string(i) + ".csv"),
                  kde(points[i].theta0_draws));
  }

  if (args.svg) {
    SvgChart chart;
    std::vector<double> xs, ys;
    for (const SweepPoint& p : points) {
      xs.push_back(p.t_prime_hr);
      ys.push_back(p.theta0_std);
    }
    chart.add_line(xs, ys, "#cc5533", 1.5);
    chart.add_points(xs, ys, "#cc5533", 3.0);
    chart.set_caption("theta0 posterior std vs measurement time");
    chart.write(out_dir / "sweep_theta0_std.svg");
  }

  bool converged = true;
  std::cout << "t_prime  theta0_std  CI\n";
  for (const SweepPoint& p : points) {
    converged = converged && p.max_rhat < 1.05;
    std::cout << "  " << format_double(p.t_prime_hr) << "  "
              << format_double(p.theta0_std) << "  [" << format_double(p.ci_lo)
              << ", " << format_double(p.ci_hi) << "]\n";
  }
  return converged ? 0 : 1;
}

// ----------------------------------------------------------------- convert

struct ConvertArgs {
  std::string in_path;
  std::string out_path;
  std::string direction = "to-temperature";
  std::string time_unit = "seconds";
  RtdSpec rtd;
};

int cmd_convert(const ConvertArgs& args) {
  TimeUnit unit;
  if (args.time_unit == "seconds") unit = TimeUnit::seconds;
  else if (args.time_unit == "minutes") unit = TimeUnit::minutes;
  else if (args.time_unit == "hours") unit = TimeUnit::hours;
  else throw std::invalid_argument("time unit must be seconds|minutes|hours");

  if (args.direction == "to-temperature") {
    const auto data = load_timeseries(args.in_path, ValueFormat::resistance_ohms,
                                      unit, args.rtd);
    write_observations_csv(args.out_path, data);
  } else if (args.direction == "to-resistance") {
    const auto data = load_timeseries(args.in_path, ValueFormat::temperature_celsius,
                                      unit, args.rtd);
    auto out = open_output(args.out_path);
    out << "time,resistance_ohm\n";
    for (const Observation& obs : data) {
      out << format_double(obs.time_hr) << ','
          << format_double(cvd_resistance(obs.temp_c, args.rtd)) << '\n';
    }
  } else {
    throw std::invalid_argument("direction must be to-temperature|to-resistance");
  }
  std::cout << "wrote " << args.out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string samples_path;
  std::string out = "out";
  std::size_t trace_rows = 2000;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  const SampleSet samples = read_samples_csv(args.samples_path);

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  write_json(out_dir / "diagnostics.json", diagnostics_json(samples));

  // thinned trace for plotting
  auto out = open_output(out_dir / "trace.csv");
  out << "chain,step";
  for (const std::string& name : samples.param_names) out << ',' << name;
  out << '\n';
  const std::size_t rows = samples.draws_per_chain();
  const std::size_t stride = std::max<std::size_t>(1, rows / args.trace_rows);
  for (std::size_t c = 0; c < samples.n_chains(); ++c) {
    for (std::size_t i = 0; i < rows; i += stride) {
      out << c << ',' << i;
      for (std::size_t j = 0; j < samples.n_params(); ++j) {
        out << ',' << format_double(samples.chains[c](i, j));
      }
      out << '\n';
    }
  }

  const auto rhat = split_rhat(samples);
  const bool converged =
      *std::max_element(rhat.begin(), rhat.end()) < 1.05;
  std::cout << "diagnostics in " << out_dir.string() << "\n";
  return converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inversion toolkit for lumped-capacitance cooling experiments"};
  app.require_subcommand(1);

  SimulateArgs sim;
  IniBinder sim_binder;
  CLI::App* simulate = app.add_subcommand("simulate", "synthesize a dataset + ground truth");
  simulate->add_option("--config", sim.config_path, "INI config file");
  sim_binder.bind(simulate->add_option("--problem", sim.problem, "I | IIa | IIb"),
                  "problem", &sim.problem);
  sim_binder.bind(simulate->add_option("--out", sim.out, "output directory"), "out",
                  &sim.out);
  sim_binder.bind(simulate->add_option("--seed", sim.seed, "RNG seed"), "seed",
                  &sim.seed);
  sim_binder.bind(simulate->add_option("--n", sim.n, "number of observations (problem I)"),
                  "synthesis.n", &sim.n);
  sim_binder.bind(simulate->add_option("--span", sim.span,
                                       "schedule span [hr] (default 4*lambda)"),
                  "synthesis.span", &sim.span);
  sim_binder.bind(simulate->add_option("--t-prime", sim.t_prime,
                                       "measurement time for IIa/IIb [hr]"),
                  "synthesis.t_prime", &sim.t_prime);
  sim_binder.bind(simulate->add_option("--sigma-meas", sim.sigma_meas,
                                       "noise std of condition measurements [C]"),
                  "synthesis.sigma_meas", &sim.sigma_meas);
  add_truth_options(simulate, sim.truth, sim_binder);

  InferArgs inf;
  IniBinder inf_binder;
  CLI::App* infer = app.add_subcommand("infer", "run an inverse problem, emit a report bundle");
  infer->add_option("--config", inf.config_path, "INI config file");
  inf_binder.bind(infer->add_option("--problem", inf.problem, "I | IIa | IIb"),
                  "problem", &inf.problem);
  inf_binder.bind(infer->add_option("--out", inf.out, "output directory"), "out",
                  &inf.out);
  inf_binder.bind(infer->add_option("--seed", inf.seed, "RNG seed"), "seed", &inf.seed);
  inf_binder.bind(infer->add_option("--level", inf.level, "credible level (default 0.9)"),
                  "level", &inf.level);
  inf_binder.bind(infer->add_option("--data", inf.data_path,
                                    "observation CSV (time,temp_c; hours)"),
                  "data", &inf.data_path);
  inf_binder.bind(infer->add_option("--conditions", inf.conditions_path,
                                    "conditions JSON from simulate (theta0_obs etc.)"),
                  "conditions", &inf.conditions_path);
  inf_binder.bind(infer->add_flag("--synthesize", inf.synthesize,
                                  "generate data internally instead of reading a file"),
                  "synthesize", &inf.synthesize);
  inf_binder.bind(infer->add_option("--n", inf.n, "synthesis: observation count"),
                  "synthesis.n", &inf.n);
  inf_binder.bind(infer->add_option("--span", inf.span, "synthesis: schedule span [hr]"),
                  "synthesis.span", &inf.span);
  inf_binder.bind(infer->add_option("--t-prime", inf.t_prime,
                                    "measurement time for IIa/IIb [hr]"),
                  "synthesis.t_prime", &inf.t_prime);
  auto opt_theta0_obs = infer->add_option("--theta0-obs", "measured initial temperature [C]");
  auto opt_theta_air_obs = infer->add_option("--theta-air-obs", "measured air temperature [C]");
  auto opt_theta_prime_obs = infer->add_option("--theta-prime-obs",
                                               "measured temperature at t-prime [C]");
  inf_binder.bind(infer->add_option("--lambda-posterior", inf.lambda_posterior,
                                    "normal(m,s) summary feeding the IIa/IIb lambda prior"),
                  "priors.lambda_posterior", &inf.lambda_posterior);
  inf_binder.bind(infer->add_option("--sigma-posterior", inf.sigma_posterior,
                                    "normal(m,s) summary feeding the IIa/IIb sigma prior"),
                  "priors.sigma_posterior", &inf.sigma_posterior);
  auto opt_trajectories = infer->add_option("--trajectories", inf.n_trajectories,
                                            "posterior trajectory ensemble size");
  inf_binder.bind(infer->add_flag("--svg", inf.svg, "also write minimal SVG renders"),
                  "svg", &inf.svg);
  add_truth_options(infer, inf.truth, inf_binder);
  add_sampler_options(infer, inf.sampler, inf_binder);
  add_prior_options(infer, inf.priors, inf_binder);

  SweepArgs swp;
  IniBinder swp_binder;
  CLI::App* sweep = app.add_subcommand("sweep",
                                       "ill-conditioning sweep over measurement times");
  sweep->add_option("--config", swp.config_path, "INI config file");
  swp_binder.bind(sweep->add_option("--out", swp.out, "output directory"), "out",
                  &swp.out);
  swp_binder.bind(sweep->add_option("--seed", swp.seed, "RNG seed"), "seed", &swp.seed);
  swp_binder.bind(sweep->add_option("--level", swp.level, "credible level"), "level",
                  &swp.level);
  sweep->add_option("--t-primes", swp.t_primes,
                    "measurement times [hr] (default 0.5,1,2,3,4 x lambda)");
  swp_binder.bind(sweep->add_option("--lambda-posterior", swp.lambda_posterior,
                                    "normal(m,s) summary feeding the lambda prior"),
                  "priors.lambda_posterior", &swp.lambda_posterior);
  swp_binder.bind(sweep->add_option("--sigma-posterior", swp.sigma_posterior,
                                    "normal(m,s) summary feeding the sigma prior"),
                  "priors.sigma_posterior", &swp.sigma_posterior);
  swp_binder.bind(sweep->add_option("--sigma-meas", swp.sigma_meas,
                                    "std of the informative condition priors [C]"),
                  "priors.sigma_meas", &swp.sigma_meas);
  swp_binder.bind(sweep->add_flag("--svg", swp.svg, "also write minimal SVG renders"),
                  "svg", &swp.svg);
  add_truth_options(sweep, swp.truth, swp_binder);
  add_sampler_options(sweep, swp.sampler, swp_binder);

  ConvertArgs cvt;
  CLI::App* convert = app.add_subcommand("convert", "RTD resistance <-> temperature CSV");
  convert->add_option("--in", cvt.in_path, "input CSV")->required();
  convert->add_option("--out", cvt.out_path, "output CSV path")->required();
  convert->add_option("--direction", cvt.direction, "to-temperature | to-resistance");
  convert->add_option("--time-unit", cvt.time_unit, "seconds | minutes | hours");
  convert->add_option("--r0", cvt.rtd.r0_ohm, "RTD nominal resistance at 0 C [ohm]");
  convert->add_option("--coeff-a", cvt.rtd.coeff_a, "Callendar-Van Dusen A [1/C]");
  convert->add_option("--coeff-b", cvt.rtd.coeff_b, "Callendar-Van Dusen B [1/C^2]");

  DiagnoseArgs dia;
  CLI::App* diagnose = app.add_subcommand("diagnose",
                                          "convergence diagnostics for a samples CSV");
  diagnose->add_option("--samples", dia.samples_path, "samples.csv from infer")->required();
  diagnose->add_option("--out", dia.out, "output directory");
  diagnose->add_option("--trace-rows", dia.trace_rows, "max trace rows per chain");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      if (!sim.config_path.empty()) sim_binder.apply(sim.config_path);
      return cmd_simulate(sim);
    }
    if (*infer) {
      if (!inf.config_path.empty()) inf_binder.apply(inf.config_path);
      if (opt_theta0_obs->count()) inf.theta0_obs = opt_theta0_obs->as<double>();
      if (opt_theta_air_obs->count()) inf.theta_air_obs = opt_theta_air_obs->as<double>();
      if (opt_theta_prime_obs->count()) {
        inf.theta_prime_obs = opt_theta_prime_obs->as<double>();
      }
      inf.trajectories_explicit = opt_trajectories->count() > 0;
      return cmd_infer(inf);
    }
    if (*sweep) {
      if (!swp.config_path.empty()) swp_binder.apply(swp.config_path);
      return cmd_sweep(swp);
    }
    if (*convert) return cmd_convert(cvt);
    if (*diagnose) return cmd_diagnose(dia);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
