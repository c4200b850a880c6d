#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace limebayes {

/// One heat-transfer experiment: when it started, how cold the object was,
/// and the (constant) ambient air temperature. Times in hours, temperatures
/// in degrees Celsius throughout the core.
struct ExperimentConditions {
  double start_time_hr = 0.0;
  double initial_temp_c = 0.0;
  double air_temp_c = 0.0;
};

///Lumped-capacitance model parameter: the e-folding time of the
/// object-air temperature gap, C/(hA), in hours.
struct ModelParams {
  double time_constant_hr = 1.0;
};

/// Physical quantities for a back-of-the-envelope time-constant estimate
/// of a roughly spherical object cooling by natural convection.
struct PhysicalEstimateInputs {
  double mass_kg = 0.0;
  double specific_heat_kj_per_kg_c = 0.0;   // kJ/(kg.C)
  double h_coeff_w_per_m2_c = 0.0;          // J/(s.m^2.C)
  double radius_m = 0.0;
  double thermal_conductivity_w_per_m_c = 0.0;  // J/(s.m.C)
};

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

/// Sanity check on experiment conditions; the window is configurable because
/// it guards data entry, not the math.
inline void validate_conditions(const ExperimentConditions& cond,
                                double temp_lo_c = -50.0,
                                double temp_hi_c = 100.0) {
  require_finite(cond.start_time_hr, "start_time_hr");
  require_finite(cond.initial_temp_c, "initial_temp_c");
  require_finite(cond.air_temp_c, "air_temp_c");
  for (double temp : {cond.initial_temp_c, cond.air_temp_c}) {
    if (temp < temp_lo_c || temp > temp_hi_c) {
      throw std::invalid_argument("temperature " + std::to_string(temp) +
                                  " C outside sanity window [" +
                                  std::to_string(temp_lo_c) + ", " +
                                  std::to_string(temp_hi_c) + "]");
    }
  }
}

/// Formula core without argument validation; for hot paths (likelihood
/// loops) that screen their inputs first.
inline double lime_temperature_raw(double t_hr, const ModelParams& params,
                                   const ExperimentConditions& cond) noexcept {
  const double gap = cond.initial_temp_c - cond.air_temp_c;
  return cond.air_temp_c +
         gap * std::exp(-(t_hr - cond.start_time_hr) / params.time_constant_hr);
}

/// Closed-form solution of the cooling ODE:
///   temp(t) = air + (initial - air) * exp(-(t - t_start) / tau).
///
/// Defined for any finite t, including t < start time: the underdetermined
/// time-reversal problem legitimately evaluates backward trajectories.
/// Callers that need physical forward time enforce t >= start themselves.
inline double lime_temperature(double t_hr, const ModelParams& params,
                               const ExperimentConditions& cond) {
  require_finite(t_hr, "t_hr");
  require_finite(cond.start_time_hr, "start_time_hr");
  require_finite(cond.initial_temp_c, "initial_temp_c");
  require_finite(cond.air_temp_c, "air_temp_c");
  if (!(params.time_constant_hr > 0.0) || !std::isfinite(params.time_constant_hr)) {
    throw std::invalid_argument("time_constant_hr must be positive and finite");
  }
  return lime_temperature_raw(t_hr, params, cond);
}

/// Fixed-step RK4 integration of tau * dtheta/dt = air - theta.
///
/// Serves as an independent numerical check on the closed form; fixed step
/// keeps it deterministic. Returns (time, temperature) nodes starting at the
/// initial condition; a shortened final step lands exactly on t_end.
inline std::vector<std::pair<double, double>> integrate_ode(
    const ModelParams& params, const ExperimentConditions& cond,
    double t_end_hr, double dt_hr) {
  if (!(dt_hr > 0.0) || !std::isfinite(dt_hr)) {
    throw std::invalid_argument("dt_hr must be positive and finite");
  }
  if (!(params.time_constant_hr > 0.0)) {
    throw std::invalid_argument("time_constant_hr must be positive");
  }
  require_finite(t_end_hr, "t_end_hr");
  if (t_end_hr < cond.start_time_hr) {
    throw std::invalid_argument("t_end_hr must be >= start_time_hr");
  }

  const double tau = params.time_constant_hr;
  const double air = cond.air_temp_c;
  const auto rhs = [&](double theta) { return (air - theta) / tau; };

  std::vector<std::pair<double, double>> trajectory;
  trajectory.reserve(
      static_cast<std::size_t>((t_end_hr - cond.start_time_hr) / dt_hr) + 2);

  double t = cond.start_time_hr;
  double theta = cond.initial_temp_c;
  trajectory.emplace_back(t, theta);

  while (t < t_end_hr) {
    const double h = std::min(dt_hr, t_end_hr - t);
    if (h <= 0.0) break;
    const double k1 = rhs(theta);
    const double k2 = rhs(theta + 0.5 * h * k1);
    const double k3 = rhs(theta + 0.5 * h * k2);
    const double k4 = rhs(theta + h * k3);
    theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    trajectory.emplace_back(t, theta);
  }
  // last node may carry accumulated t rounding; pin it to t_end exactly
  trajectory.back().first = std::max(t_end_hr, cond.start_time_hr);
  return trajectory;
}

/// Factor by which an error in the measured temperature at t_prime inflates
/// into an error in the reconstructed initial temperature:
/// exp((t_prime - t0) / tau).
inline double error_amplification(double t_prime_hr, double t0_hr,
                                  double time_constant_hr) {
  require_finite(t_prime_hr, "t_prime_hr");
  require_finite(t0_hr, "t0_hr");
  if (!(time_constant_hr > 0.0)) {
    throw std::invalid_argument("time_constant_hr must be positive");
  }
  return std::exp((t_prime_hr - t0_hr) / time_constant_hr);
}

/// Back-of-the-envelope time constant C/(hA) in hours for a sphere:
/// C = mass * specific heat, A = 4 pi r^2.
inline double estimate_time_constant(const PhysicalEstimateInputs& in) {
  for (double v : {in.mass_kg, in.specific_heat_kj_per_kg_c,
                   in.h_coeff_w_per_m2_c, in.radius_m,
                   in.thermal_conductivity_w_per_m_c}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("physical estimate inputs must be positive and finite");
    }
  }
  const double heat_capacity_j_per_c = in.mass_kg * in.specific_heat_kj_per_kg_c * 1000.0;
  const double area_m2 = 4.0 * 3.14159265358979323846 * in.radius_m * in.radius_m;
  const double seconds = heat_capacity_j_per_c / (in.h_coeff_w_per_m2_c * area_m2);
  return seconds / 3600.0;
}

/// Biot number h*r/k; << 1 justifies the spatially-uniform temperature
/// assumption (here it is ~0.6, so the lumped model is a deliberate
/// simplification, not a rigorous limit).
inline double biot_number(double h_coeff_w_per_m2_c, double radius_m,
                          double thermal_conductivity_w_per_m_c) {
  if (!(h_coeff_w_per_m2_c > 0.0) || !(thermal_conductivity_w_per_m_c > 0.0) ||
      radius_m < 0.0) {
    throw std::invalid_argument("biot_number requires h > 0, k > 0, r >= 0");
  }
  return h_coeff_w_per_m2_c * radius_m / thermal_conductivity_w_per_m_c;
}

/// The underdetermined classical solution set of the two-unknown time
/// reversal: for each candidate start time t0 < t_prime, the initial
/// temperature that would evolve exactly to theta_prime at t_prime:
///   theta0 = air + (theta_prime - air) * exp((t_prime - t0) / tau).
inline std::vector<std::pair<double, double>> classical_solution_curve(
    double t_prime_hr, double theta_prime_c, double theta_air_c,
    double time_constant_hr, std::span<const double> t0_grid) {
  if (!(time_constant_hr > 0.0)) {
    throw std::invalid_argument("time_constant_hr must be positive");
  }
  require_finite(t_prime_hr, "t_prime_hr");
  require_finite(theta_prime_c, "theta_prime_c");
  require_finite(theta_air_c, "theta_air_c");

  std::vector<std::pair<double, double>> curve;
  curve.reserve(t0_grid.size());
  for (double t0 : t0_grid) {
    require_finite(t0, "t0 grid entry");
    if (t0 >= t_prime_hr) {
      throw std::invalid_argument("classical_solution_curve: t0 grid entry " +
                                  std::to_string(t0) + " is not before t_prime");
    }
    const double theta0 =
        theta_air_c + (theta_prime_c - theta_air_c) *
                          std::exp((t_prime_hr - t0) / time_constant_hr);
    curve.emplace_back(t0, theta0);
  }
  return curve;
}

}  // namespace limebayes
