#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "limebayes/probability.hpp"

namespace limebayes {

/// Platinum RTD characterization: R(T) = r0 * (1 + A*T + B*T^2) on the
/// above-zero branch. Defaults are the PT1000 values (r0 = 1000 ohm,
/// A = 3.9083e-3 / C, B = -5.775e-7 / C^2).
struct RtdSpec {
  double r0_ohm = 1000.0;
  double coeff_a = 3.9083e-3;
  double coeff_b = -5.775e-7;
  double temp_max_c = 200.0;  // supported conversion range is [0, temp_max_c]

  void validate() const {
    if (!(r0_ohm > 0.0)) throw std::invalid_argument("RTD r0 must be > 0");
    if (!(temp_max_c > 0.0)) throw std::invalid_argument("RTD range must be > 0");
    // Quadratic must stay positive and strictly increasing over the range;
    // with B < 0 the derivative minimum sits at temp_max_c.
    const double deriv_at_max = coeff_a + 2.0 * coeff_b * temp_max_c;
    const double deriv_at_zero = coeff_a;
    if (!(std::min(deriv_at_zero, deriv_at_max) > 0.0)) {
      throw std::invalid_argument("RTD polynomial is not increasing on range");
    }
    const double val_at_max = 1.0 + coeff_a * temp_max_c + coeff_b * temp_max_c * temp_max_c;
    if (!(val_at_max > 0.0)) {
      throw std::invalid_argument("RTD polynomial is not positive on range");
    }
  }
};

/// Temperature -> resistance on the supported branch [0, temp_max] C.
inline double cvd_resistance(double temp_c, const RtdSpec& spec = {}) {
  spec.validate();
  require_finite(temp_c, "temp_c");
  if (temp_c < 0.0 || temp_c > spec.temp_max_c) {
    throw std::out_of_range("cvd_resistance: temperature " + std::to_string(temp_c) +
                            " C outside [0, " + std::to_string(spec.temp_max_c) + "]");
  }
  return spec.r0_ohm * (1.0 + spec.coeff_a * temp_c + spec.coeff_b * temp_c * temp_c);
}

/// Resistance -> temperature: the quadratic root on the supported branch,
/// written in the cancellation-free form 2q / (A + sqrt(A^2 + 4Bq)) with
/// q = R/r0 - 1.
inline double cvd_temperature(double resistance_ohm, const RtdSpec& spec = {}) {
  spec.validate();
  require_finite(resistance_ohm, "resistance_ohm");
  const double r_lo = spec.r0_ohm;
  const double r_hi = cvd_resistance(spec.temp_max_c, spec);
  if (resistance_ohm < r_lo || resistance_ohm > r_hi) {
    throw std::out_of_range("cvd_temperature: resistance " +
                            std::to_string(resistance_ohm) + " ohm outside [" +
                            std::to_string(r_lo) + ", " + std::to_string(r_hi) + "]");
  }
  const double q = resistance_ohm / spec.r0_ohm - 1.0;
  const double disc = spec.coeff_a * spec.coeff_a + 4.0 * spec.coeff_b * q;
  return 2.0 * q / (spec.coeff_a + std::sqrt(disc));
}

enum class ValueFormat { temperature_celsius, resistance_ohms };
enum class TimeUnit { seconds, minutes, hours };

inline double hours_per(TimeUnit unit) {
  switch (unit) {
    case TimeUnit::seconds: return 1.0 / 3600.0;
    case TimeUnit::minutes: return 1.0 / 60.0;
    case TimeUnit::hours: return 1.0;
  }
  return 1.0;
}

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Load a `time,<value>` CSV into observations, converting time to hours
/// and (for resistance logs) readings to temperature. The value header must
/// be `temp_c` or `resistance_ohm` to match the requested format; `#` lines
/// and blank lines are skipped; times must be strictly increasing. Every
/// failure names the offending line.
inline std::vector<Observation> load_timeseries(const std::filesystem::path& path,
                                                ValueFormat format,
                                                TimeUnit time_unit,
                                                const RtdSpec& rtd = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  const std::string expected_value_header =
      format == ValueFormat::temperature_celsius ? "temp_c" : "resistance_ohm";
  const double to_hours = hours_per(time_unit);

  std::vector<Observation> data;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;

    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw fail("expected 'time,value'");
    std::string first = line.substr(0, comma);
    std::string second = line.substr(comma + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(first);
    trim(second);

    if (!header_seen) {
      if (first != "time") throw fail("header must start with 'time', got '" + first + "'");
      if (second != expected_value_header) {
        throw fail("value column is '" + second + "', expected '" +
                   expected_value_header + "'");
      }
      header_seen = true;
      continue;
    }

    double t_raw = 0.0, value = 0.0;
    try {
      std::size_t used = 0;
      t_raw = std::stod(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
      value = std::stod(second, &used);
      if (used != second.size()) throw std::invalid_argument(second);
    } catch (const std::exception&) {
      throw fail("unparseable row '" + line + "'");
    }
    if (!std::isfinite(t_raw) || !std::isfinite(value)) throw fail("non-finite value");

    Observation obs;
    obs.time_hr = t_raw * to_hours;
    if (format == ValueFormat::resistance_ohms) {
      try {
        obs.temp_c = cvd_temperature(value, rtd);
      } catch (const std::out_of_range& e) {
        throw fail(e.what());
      }
    } else {
      obs.temp_c = value;
    }
    if (!data.empty() && !(obs.time_hr > data.back().time_hr)) {
      throw fail("times must be strictly increasing");
    }
    data.push_back(obs);
  }
  if (!header_seen) throw ParseError(path.string() + ": missing header row");
  return data;
}

}  // namespace limebayes
