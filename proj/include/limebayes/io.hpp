#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "limebayes/diagnostics.hpp"
#include "limebayes/ingest.hpp"
#include "limebayes/posterior.hpp"
#include "limebayes/probability.hpp"
#include "limebayes/problems.hpp"
#include "limebayes/sampler.hpp"

namespace limebayes {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation; locale-free and stable, so
/// repeated runs emit byte-identical files.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // \n endings everywhere
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_observations_csv(const std::filesystem::path& path,
                                   std::span<const Observation> data) {
  auto out = open_output(path);
  out << "time,temp_c\n";
  for (const Observation& obs : data) {
    out << format_double(obs.time_hr) << ',' << format_double(obs.temp_c) << '\n';
  }
}

/// One draw per row: chain, step, then parameter columns.
inline void write_samples_csv(const std::filesystem::path& path,
                              const SampleSet& samples) {
  auto out = open_output(path);
  out << "chain,step";
  for (const std::string& name : samples.param_names) out << ',' << name;
  out << '\n';
  for (std::size_t c = 0; c < samples.n_chains(); ++c) {
    const DrawMatrix& m = samples.chains[c];
    for (std::size_t i = 0; i < m.rows; ++i) {
      out << c << ',' << i;
      for (std::size_t j = 0; j < m.cols; ++j) out << ',' << format_double(m(i, j));
      out << '\n';
    }
  }
}

/// Inverse of write_samples_csv. Acceptance statistics are not stored in the
/// CSV, so they come back empty; diagnostics only need the draws.
inline SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "chain" || header[1] != "step") {
    throw ParseError(path.string() + ": expected header 'chain,step,<params...>'");
  }

  SampleSet samples;
  samples.param_names.assign(header.begin() + 2, header.end());
  const std::size_t dim = samples.param_names.size();

  std::vector<std::vector<double>> rows_by_chain_flat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ss, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": unparseable cell '" + cell + "'");
      }
    }
    if (fields.size() != dim + 2) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": wrong column count");
    }
    const auto chain = static_cast<std::size_t>(fields[0]);
    if (chain > 4096) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": implausible chain index");
    }
    if (chain >= rows_by_chain_flat.size()) rows_by_chain_flat.resize(chain + 1);
    for (std::size_t j = 0; j < dim; ++j) {
      rows_by_chain_flat[chain].push_back(fields[2 + j]);
    }
  }
  if (rows_by_chain_flat.empty()) {
    throw ParseError(path.string() + ": no draws");
  }
  const std::size_t expected_size = rows_by_chain_flat.front().size();
  for (const auto& flat : rows_by_chain_flat) {
    if (flat.size() != expected_size || flat.empty()) {
      throw ParseError(path.string() + ": chains have unequal draw counts");
    }
  }
  for (auto& flat : rows_by_chain_flat) {
    DrawMatrix m;
    m.cols = dim;
    m.rows = flat.size() / dim;
    m.data = std::move(flat);
    samples.chains.push_back(std::move(m));
  }
  return samples;
}

inline void write_kde_csv(const std::filesystem::path& path, const KdeCurve& curve) {
  auto out = open_output(path);
  out << "value,density\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << format_double(curve.grid[i]) << ',' << format_double(curve.density[i])
        << '\n';
  }
}

/// Prior density and posterior KDE on the same grid, for overlay plots.
inline void write_overlay_csv(const std::filesystem::path& path,
                              const KdeCurve& posterior,
                              const DistributionSpec& prior) {
  auto out = open_output(path);
  out << "value,prior_density,posterior_density\n";
  for (std::size_t i = 0; i < posterior.grid.size(); ++i) {
    const double x = posterior.grid[i];
    const double prior_density = std::exp(prior.log_pdf(x));
    out << format_double(x) << ',' << format_double(prior_density) << ','
        << format_double(posterior.density[i]) << '\n';
  }
}

inline void write_trajectories_csv(const std::filesystem::path& path,
                                   const TrajectoryEnsemble& ensemble) {
  auto out = open_output(path);
  out << "time";
  for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
    out << ",draw_" << ensemble.draw_indices[k];
  }
  out << '\n';
  for (std::size_t i = 0; i < ensemble.time_grid.size(); ++i) {
    out << format_double(ensemble.time_grid[i]);
    for (const auto& member : ensemble.members) out << ',' << format_double(member[i]);
    out << '\n';
  }
}

inline void write_residuals_csv(const std::filesystem::path& path,
                                std::span<const ResidualBox> boxes) {
  auto out = open_output(path);
  out << "time,observed,median,q1,q3,whisker_lo,whisker_hi,mean\n";
  for (const ResidualBox& b : boxes) {
    out << format_double(b.time_hr) << ',' << format_double(b.observed_c) << ','
        << format_double(b.median) << ',' << format_double(b.q1) << ','
        << format_double(b.q3) << ',' << format_double(b.whisker_lo) << ','
        << format_double(b.whisker_hi) << ',' << format_double(b.mean) << '\n';
  }
}

inline void write_joint_density_csv(const std::filesystem::path& path,
                                    const GridDensity2D& density,
                                    const std::string& x_name,
                                    const std::string& y_name) {
  auto out = open_output(path);
  out << x_name << ',' << y_name << ",density\n";
  for (std::size_t iy = 0; iy < density.y_grid.size(); ++iy) {
    for (std::size_t ix = 0; ix < density.x_grid.size(); ++ix) {
      out << format_double(density.x_grid[ix]) << ','
          << format_double(density.y_grid[iy]) << ','
          << format_double(density.density(iy, ix)) << '\n';
    }
  }
}

inline void write_curve_csv(const std::filesystem::path& path,
                            std::span<const std::pair<double, double>> points,
                            const std::string& x_name, const std::string& y_name) {
  auto out = open_output(path);
  out << x_name << ',' << y_name << '\n';
  for (const auto& [x, y] : points) {
    out << format_double(x) << ',' << format_double(y) << '\n';
  }
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            std::span<const SweepPoint> points) {
  auto out = open_output(path);
  out << "t_prime,theta_prime_obs,theta0_mean,theta0_std,ci_lo,ci_hi,max_rhat\n";
  for (const SweepPoint& p : points) {
    out << format_double(p.t_prime_hr) << ',' << format_double(p.datum.temp_c)
        << ',' << format_double(p.theta0_mean) << ',' << format_double(p.theta0_std)
        << ',' << format_double(p.ci_lo) << ',' << format_double(p.ci_hi) << ','
        << format_double(p.max_rhat) << '\n';
  }
}

inline Json diagnostics_json(const SampleSet& samples) {
  const auto rhat = split_rhat(samples);
  const auto ess = effective_sample_size(samples);
  Json j;
  j["seed"] = samples.seed;
  j["n_chains"] = samples.n_chains();
  j["draws_per_chain"] = samples.draws_per_chain();
  Json per_param = Json::object();
  for (std::size_t p = 0; p < samples.n_params(); ++p) {
    per_param[samples.param_names[p]] = {{"rhat", rhat[p]}, {"ess", ess[p]}};
  }
  j["parameters"] = per_param;
  j["acceptance_rate"] = samples.acceptance_rate;
  j["nonfinite_proposals"] = samples.nonfinite_proposals;
  double max_rhat = 0.0;
  for (double r : rhat) max_rhat = std::max(max_rhat, r);
  j["max_rhat"] = max_rhat;
  j["converged"] = max_rhat < 1.05;
  return j;
}

inline Json summary_json(const PosteriorSummary& summary) {
  Json j;
  j["level"] = summary.level;
  Json params = Json::object();
  for (const ParamSummary& p : summary.params) {
    params[p.name] = {{"mean", p.mean},
                      {"std", p.std},
                      {"ci_lo", p.ci_lo},
                      {"ci_hi", p.ci_hi},
                      {"kde_bandwidth", p.density.bandwidth}};
  }
  j["parameters"] = params;
  Json corr = Json::object();
  for (std::size_t i = 0; i < summary.params.size(); ++i) {
    for (std::size_t j2 = i + 1; j2 < summary.params.size(); ++j2) {
      corr[summary.params[i].name + ":" + summary.params[j2].name] =
          summary.correlation(i, j2);
    }
  }
  j["correlations"] = corr;
  return j;
}

inline Json truth_json(const GroundTruth& truth) {
  Json j;
  j["lambda"] = truth.params.time_constant_hr;
  j["t0"] = truth.cond.start_time_hr;
  j["theta0"] = truth.cond.initial_temp_c;
  j["theta_air"] = truth.cond.air_temp_c;
  j["sigma"] = truth.noise_sigma;
  j["seed"] = truth.seed;
  return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace limebayes
