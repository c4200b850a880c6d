#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "limebayes/diagnostics.hpp"
#include "limebayes/posterior.hpp"
#include "limebayes/problems.hpp"
#include "test_support.hpp"

using namespace limebayes;
using Catch::Approx;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

GroundTruth reference_truth(std::uint64_t seed = 0) {
  GroundTruth truth;
  truth.params.time_constant_hr = 0.98;
  truth.cond = {0.0, 5.0, 20.0};
  truth.noise_sigma = 0.16;
  truth.seed = seed;
  return truth;
}

ChainConfig small_chains(std::uint64_t seed, std::size_t steps = 12000) {
  ChainConfig config;
  config.n_chains = 4;
  config.n_steps = steps;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("synthesized data follows the generating model", "[problems]") {
  const GroundTruth truth = reference_truth();

  SECTION("noise-free limit equals the curve") {
    GroundTruth quiet = truth;
    quiet.noise_sigma = 1e-12;
    RandomSource rng(1);
    const auto schedule = uniform_schedule(0.0, 4.0, 10);
    for (const Observation& obs : synthesize_data(quiet, schedule, rng)) {
      REQUIRE(obs.temp_c ==
              Approx(lime_temperature(obs.time_hr, quiet.params, quiet.cond))
                  .margin(1e-10));
    }
  }

  SECTION("replicates at one time reproduce the noise std and the curve mean") {
    RandomSource rng(2);
    const std::vector<double> at{1.3};
    std::vector<double> readings(10000);
    for (double& r : readings) r = synthesize_data(truth, at, rng)[0].temp_c;
    const auto m = gaussian_summary(readings);
    REQUIRE(m.std == Approx(truth.noise_sigma).epsilon(0.02));
    const double curve = lime_temperature(1.3, truth.params, truth.cond);
    REQUIRE(std::abs(m.mean - curve) <
            3.0 * truth.noise_sigma / std::sqrt(10000.0));
  }

  SECTION("pre-start schedule times and bad sigma are rejected") {
    RandomSource rng(3);
    const std::vector<double> before{-0.5};
    REQUIRE_THROWS_AS(synthesize_data(truth, before, rng), std::invalid_argument);
    GroundTruth bad = truth;
    bad.noise_sigma = 0.0;
    const std::vector<double> ok{1.0};
    REQUIRE_THROWS_AS(synthesize_data(bad, ok, rng), std::invalid_argument);
  }
}

TEST_CASE("problem spec demands a complete binding", "[problems]") {
  std::vector<Unknown> missing_air;
  missing_air.push_back({"lambda", ModelArg::time_constant,
                         DistributionSpec::truncated_normal(1.0, 0.3, 0.0, kInf)});
  // air_temp bound nowhere
  REQUIRE_THROWS_WITH(
      ProblemSpec(std::move(missing_air),
                  {{ModelArg::start_time, 0.0},
                   {ModelArg::initial_temp, 5.0},
                   {ModelArg::noise_sigma, 0.16}},
                  {{1.0, 14.0}}),
      Catch::Matchers::ContainsSubstring("air_temp"));

  std::vector<Unknown> doubled;
  doubled.push_back({"lambda", ModelArg::time_constant,
                     DistributionSpec::truncated_normal(1.0, 0.3, 0.0, kInf)});
  doubled.push_back({"lambda2", ModelArg::time_constant,
                     DistributionSpec::normal(1.0, 0.3)});
  REQUIRE_THROWS_WITH(
      ProblemSpec(std::move(doubled),
                  {{ModelArg::start_time, 0.0},
                   {ModelArg::initial_temp, 5.0},
                   {ModelArg::air_temp, 20.0},
                   {ModelArg::noise_sigma, 0.16}},
                  {{1.0, 14.0}}),
      Catch::Matchers::ContainsSubstring("time_constant"));
}

TEST_CASE("problem I posterior support", "[problems]") {
  RandomSource rng(4);
  const auto data = synthesize_data(reference_truth(), uniform_schedule(0.0, 4.0, 20), rng);
  const ProblemSpec problem = build_problem_I(data, 5.1, 19.8);

  // order: lambda, theta0, theta_air, sigma
  REQUIRE(problem.param_names() ==
          std::vector<std::string>{"lambda", "theta0", "theta_air", "sigma"});

  const std::vector<double> inside{0.98, 5.0, 20.0, 0.2};
  REQUIRE(std::isfinite(problem.log_posterior(inside)));

  for (double sigma : {-0.1, 0.0, 1.0001, 5.0}) {
    const std::vector<double> u{0.98, 5.0, 20.0, sigma};
    REQUIRE(problem.log_posterior(u) == kNegInf);
  }
  const std::vector<double> negative_lambda{-0.5, 5.0, 20.0, 0.2};
  REQUIRE(problem.log_posterior(negative_lambda) == kNegInf);

  REQUIRE_THROWS_AS(build_problem_I({}, 5.1, 19.8), std::invalid_argument);
}

TEST_CASE("problem I recovers the generating parameters", "[problems]") {
  RandomSource rng(6060);
  const GroundTruth truth = reference_truth();
  const auto data =
      synthesize_data(truth, uniform_schedule(0.0, 4.0 * 0.98, 20), rng);
  const double theta0_obs = truth.cond.initial_temp_c + rng.normal(0.0, 0.5);
  const double theta_air_obs = truth.cond.air_temp_c + rng.normal(0.0, 0.5);

  const ProblemSpec problem = build_problem_I(data, theta0_obs, theta_air_obs);
  const SampleSet samples = sample_problem(problem, small_chains(99, 20000));

  const auto lambda_draws = samples.pooled("lambda");
  const auto m = gaussian_summary(lambda_draws);
  REQUIRE(std::abs(m.mean - truth.params.time_constant_hr) < 0.05);

  const auto boxes =
      residual_summary(samples, problem.forward_binding(), problem.data());
  for (const ResidualBox& box : boxes) {
    REQUIRE(std::abs(box.median) < 3.0 * truth.noise_sigma);
  }

  SECTION("posterior-mean trajectory recovers the generating curve") {
    std::vector<double> times;
    for (const Observation& obs : data) times.push_back(obs.time_hr);
    RandomSource traj_rng(4242);
    const auto ensemble = posterior_trajectories(
        samples, problem.forward_binding(), 100, times, traj_rng);
    for (std::size_t i = 0; i < times.size(); ++i) {
      double mean = 0.0;
      for (const auto& member : ensemble.members) mean += member[i];
      mean /= static_cast<double>(ensemble.members.size());
      // the recovered model hugs the true curve well inside a quarter
      // degree; the data scatter around it at the noise scale
      const double true_curve = lime_temperature(times[i], truth.params, truth.cond);
      REQUIRE(std::abs(mean - true_curve) < 0.25);
      REQUIRE(std::abs(mean - data[i].temp_c) < 4.0 * truth.noise_sigma);
    }
  }
}

TEST_CASE("log posterior matches the conjugate closed form", "[problems]") {
  // with only theta0 unknown the model is linear in it, so the posterior is
  // Gaussian with a completed-square mean/variance; unnormalized log
  // densities must agree up to a constant
  const double tau = 0.9, t0 = 0.0, theta_air = 20.0, sigma = 0.3;
  const double prior_mean = 5.0, prior_sd = 2.0;
  const std::vector<Observation> data{{0.2, 6.8}, {0.7, 10.1}, {1.5, 14.0}};

  std::vector<Unknown> unknowns;
  unknowns.push_back({"theta0", ModelArg::initial_temp,
                      DistributionSpec::normal(prior_mean, prior_sd)});
  const ProblemSpec problem(std::move(unknowns),
                            {{ModelArg::time_constant, tau},
                             {ModelArg::start_time, t0},
                             {ModelArg::air_temp, theta_air},
                             {ModelArg::noise_sigma, sigma}},
                            data);

  // conjugate update in the shifted variable z = theta0 - theta_air
  double precision = 1.0 / (prior_sd * prior_sd);
  double weighted = (prior_mean - theta_air) / (prior_sd * prior_sd);
  for (const Observation& obs : data) {
    const double a = std::exp(-(obs.time_hr - t0) / tau);
    precision += a * a / (sigma * sigma);
    weighted += a * (obs.temp_c - theta_air) / (sigma * sigma);
  }
  const double post_mean = theta_air + weighted / precision;
  const double post_sd = std::sqrt(1.0 / precision);
  const auto posterior = DistributionSpec::normal(post_mean, post_sd);

  RandomSource rng(66);
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> u1{rng.uniform(0.0, 12.0)};
    const std::vector<double> u2{rng.uniform(0.0, 12.0)};
    const double got = problem.log_posterior(u1) - problem.log_posterior(u2);
    const double expected = posterior.log_pdf(u1[0]) - posterior.log_pdf(u2[0]);
    REQUIRE(got == Approx(expected).margin(1e-12));
  }
}

TEST_CASE("prior-only sampling reproduces the priors", "[problems]") {
  // empty data: the posterior is the prior; the sampler must reproduce each
  // marginal (KS at the 1% level on thinned draws)
  std::vector<Unknown> unknowns;
  unknowns.push_back({"lambda", ModelArg::time_constant,
                      DistributionSpec::truncated_normal(1.0, 0.3, 0.0, kInf)});
  unknowns.push_back({"theta0", ModelArg::initial_temp,
                      DistributionSpec::normal(5.0, 0.5)});
  unknowns.push_back({"sigma", ModelArg::noise_sigma,
                      DistributionSpec::uniform(0.0, 1.0)});
  const ProblemSpec prior_only(
      std::move(unknowns),
      {{ModelArg::start_time, 0.0}, {ModelArg::air_temp, 20.0}}, {});

  const SampleSet samples = sample_problem(prior_only, small_chains(17, 60000));

  for (std::size_t p = 0; p < prior_only.dim(); ++p) {
    const auto thinned = test_support::thin(samples.pooled(p), 50);
    const auto& prior = prior_only.unknowns()[p].prior;
    const double ks = test_support::ks_statistic(
        thinned, [&](double x) { return prior.cdf(x); });
    INFO(prior_only.unknowns()[p].name);
    REQUIRE(ks < test_support::ks_critical_1pct(thinned.size()));
  }
}

TEST_CASE("problem IIa posterior support and defaults", "[problems]") {
  const ProblemSpec problem = build_problem_IIa(14.5, 1.0, 20.0);
  REQUIRE(problem.param_names() ==
          std::vector<std::string>{"theta0", "lambda", "theta_air", "sigma"});

  const std::vector<double> inside{5.0, 0.98, 20.0, 0.16};
  REQUIRE(std::isfinite(problem.log_posterior(inside)));
  for (double theta0 : {-0.5, 15.5}) {
    const std::vector<double> u{theta0, 0.98, 20.0, 0.16};
    REQUIRE(problem.log_posterior(u) == kNegInf);
  }

  // the chained priors default to the previous posterior summaries
  const auto* lambda_prior = problem.unknowns()[1].prior.as_normal();
  REQUIRE(lambda_prior != nullptr);
  REQUIRE(lambda_prior->mu == 0.98);
  REQUIRE(lambda_prior->sigma == 0.02);
  const auto* sigma_prior = problem.unknowns()[3].prior.as_truncated_normal();
  REQUIRE(sigma_prior != nullptr);
  REQUIRE(sigma_prior->mu == 0.16);
  REQUIRE(sigma_prior->lo == 0.0);

  REQUIRE_THROWS_AS(build_problem_IIa(14.5, 0.0, 20.0), std::invalid_argument);
}

TEST_CASE("problem IIa credible interval covers the held-out truth", "[problems]") {
  const GroundTruth truth = reference_truth();
  RandomSource rng(7);
  const std::vector<double> at{1.0};
  const Observation datum = synthesize_data(truth, at, rng)[0];
  const double theta_air_obs = truth.cond.air_temp_c + rng.normal(0.0, 0.5);

  const ProblemSpec problem = build_problem_IIa(datum.temp_c, 1.0, theta_air_obs);
  const SampleSet samples = sample_problem(problem, small_chains(31, 20000));
  const auto [lo, hi] = equal_tailed_ci(samples.pooled("theta0"), 0.9);
  REQUIRE(lo < truth.cond.initial_temp_c);
  REQUIRE(hi > truth.cond.initial_temp_c);

  SECTION("posterior trajectories stay data-consistent at the measurement") {
    const double sigma_mean = gaussian_summary(samples.pooled("sigma")).mean;
    RandomSource traj_rng(99);
    const std::vector<double> at_measurement{1.0};
    const auto ensemble = posterior_trajectories(
        samples, problem.forward_binding(), 100, at_measurement, traj_rng);
    std::size_t within = 0;
    for (const auto& member : ensemble.members) {
      REQUIRE(std::abs(member[0] - datum.temp_c) < 6.0 * sigma_mean);
      if (std::abs(member[0] - datum.temp_c) < 4.0 * sigma_mean) ++within;
    }
    REQUIRE(within >= 90);
  }
}

TEST_CASE("problem IIb posterior support", "[problems]") {
  const ProblemSpec problem = build_problem_IIb(14.5, 1.0, 20.0);
  REQUIRE(problem.param_names() ==
          std::vector<std::string>{"t0", "theta0", "lambda", "theta_air", "sigma"});
  REQUIRE(problem.start_time_sampled());

  const std::vector<double> inside{-0.1, 5.0, 0.98, 20.0, 0.16};
  REQUIRE(std::isfinite(problem.log_posterior(inside)));

  // the measurement must postdate the start: t0 = t' is out
  const std::vector<double> at_measurement{1.0, 5.0, 0.98, 20.0, 0.16};
  REQUIRE(problem.log_posterior(at_measurement) == kNegInf);
  const std::vector<double> past_measurement{1.0 - 1e-12, 5.0, 0.98, 20.0, 0.16};
  REQUIRE(std::isfinite(problem.log_posterior(past_measurement)));
}

TEST_CASE("problem IIb spreads along the classical curve", "[problems]") {
  const GroundTruth truth = reference_truth();
  RandomSource rng(8);
  const std::vector<double> at{1.0};
  const Observation datum = synthesize_data(truth, at, rng)[0];
  const double theta_air_obs = truth.cond.air_temp_c + rng.normal(0.0, 0.5);

  const ProblemSpec iib = build_problem_IIb(datum.temp_c, 1.0, theta_air_obs);
  const SampleSet samples = sample_problem(iib, small_chains(32, 20000));

  const auto t0 = samples.pooled("t0");
  const auto theta0 = samples.pooled("theta0");
  const auto lambda = samples.pooled("lambda");
  const auto theta_air = samples.pooled("theta_air");
  const auto sigma = samples.pooled("sigma");

  std::size_t in_band = 0;
  for (std::size_t i = 0; i < t0.size(); ++i) {
    const double amp = error_amplification(1.0, t0[i], lambda[i]);
    const double curve_theta0 =
        theta_air[i] + (datum.temp_c - theta_air[i]) * amp;
    if (std::abs(theta0[i] - curve_theta0) < 4.0 * sigma[i] * amp) ++in_band;
  }
  REQUIRE(static_cast<double>(in_band) / static_cast<double>(t0.size()) >= 0.9);

  // same datum, known start time: the IIa interval must be narrower
  const ProblemSpec iia = build_problem_IIa(datum.temp_c, 1.0, theta_air_obs);
  const SampleSet iia_samples = sample_problem(iia, small_chains(33, 20000));
  const auto [a_lo, a_hi] = equal_tailed_ci(iia_samples.pooled("theta0"), 0.9);
  const auto [b_lo, b_hi] = equal_tailed_ci(theta0, 0.9);
  REQUIRE(b_hi - b_lo > a_hi - a_lo);
}

TEST_CASE("chain inits are prior draws with finite posterior", "[problems]") {
  const ProblemSpec problem = build_problem_IIa(14.5, 1.0, 20.0);
  const auto inits = draw_chain_inits(problem, 4, 123);
  REQUIRE(inits.size() == 4);
  for (const auto& u : inits) {
    REQUIRE(std::isfinite(problem.log_posterior(u)));
  }
  REQUIRE(inits == draw_chain_inits(problem, 4, 123));
  REQUIRE(inits != draw_chain_inits(problem, 4, 124));
}

TEST_CASE("ill-conditioning sweep spreads the theta0 posterior", "[problems]") {
  const GroundTruth truth = reference_truth(40);
  SweepConfig config;
  config.chains = small_chains(40, 12000);
  const std::vector<double> t_primes{0.05, 2.0, 3.9};
  const auto points = ill_conditioning_sweep(truth, t_primes, config);
  REQUIRE(points.size() == 3);
  REQUIRE(points[0].theta0_std < points[1].theta0_std);
  REQUIRE(points[1].theta0_std < points[2].theta0_std);

  // an almost-immediate measurement pins theta0 at the noise scale
  // (amplification factor near 1)
  REQUIRE(points[0].theta0_std < 3.0 * truth.noise_sigma);
  REQUIRE(points[0].theta0_std > 0.3 * truth.noise_sigma);

  const std::vector<double> unsorted{1.0, 0.5};
  REQUIRE_THROWS_AS(ill_conditioning_sweep(truth, unsorted, config),
                    std::invalid_argument);
}

TEST_CASE("any prior-support violation short-circuits the posterior", "[problems]") {
  RandomSource rng(55);
  const auto data_rng_truth = reference_truth(55);
  RandomSource data_rng(55);
  const auto data =
      synthesize_data(data_rng_truth, uniform_schedule(0.0, 3.9, 10), data_rng);
  const ProblemSpec problem = build_problem_I(data, 5.0, 20.0);

  for (int probe = 0; probe < 200; ++probe) {
    std::vector<double> u{rng.uniform(0.1, 2.0), rng.uniform(3.0, 7.0),
                          rng.uniform(18.0, 22.0), rng.uniform(0.01, 0.99)};
    const std::size_t which = rng.index_below(2);
    if (which == 0) {
      u[0] = -rng.uniform(0.0, 5.0);  // lambda outside its truncation
    } else {
      u[3] = 1.0 + rng.uniform(0.001, 5.0);  // sigma above the uniform's top
    }
    REQUIRE(problem.log_posterior(u) == kNegInf);
  }
}
