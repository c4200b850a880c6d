#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "limebayes/probability.hpp"

namespace limebayes {

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_bound(const std::string& token) {
  const std::string t = strip(token);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(t, &used);
  if (used != t.size()) throw std::invalid_argument("bad number '" + t + "'");
  return v;
}

}  // namespace detail

/// Parse a distribution literal as used in config files and prior overrides:
///   uniform(lo, hi) | normal(mu, sigma) | truncnormal(mu, sigma, lo, hi)
/// Bounds accept inf / -inf.
inline DistributionSpec parse_distribution(const std::string& text) {
  const std::string s = detail::strip(text);
  const std::size_t open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw std::invalid_argument("distribution literal must look like name(args): '" +
                                text + "'");
  }
  const std::string name = detail::strip(s.substr(0, open));
  const std::string args = s.substr(open + 1, s.size() - open - 2);

  std::vector<double> values;
  std::size_t start = 0;
  while (start <= args.size()) {
    const std::size_t comma = args.find(',', start);
    const std::string token =
        comma == std::string::npos ? args.substr(start) : args.substr(start, comma - start);
    if (!detail::strip(token).empty()) {
      try {
        values.push_back(detail::parse_bound(token));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad distribution argument '" + token + "' in '" +
                                    text + "'");
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }

  if (name == "uniform" && values.size() == 2) {
    return DistributionSpec::uniform(values[0], values[1]);
  }
  if (name == "normal" && values.size() == 2) {
    return DistributionSpec::normal(values[0], values[1]);
  }
  if (name == "truncnormal" && values.size() == 4) {
    return DistributionSpec::truncated_normal(values[0], values[1], values[2],
                                              values[3]);
  }
  throw std::invalid_argument(
      "unknown distribution literal '" + text +
      "' (expected uniform(lo,hi), normal(mu,sigma), or truncnormal(mu,sigma,lo,hi))");
}

/// Read a small INI-style config file: `[section]` headers, `key = value`
/// lines, `#`/`;` comments, optional quotes around values. Keys inside a
/// section come back as "section.key". Malformed lines name their number.
inline std::map<std::string, std::string> read_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());

  std::map<std::string, std::string> entries;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string s = detail::strip(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;

    if (s.front() == '[') {
      if (s.back() != ']') {
        throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                    ": unterminated section header");
      }
      section = detail::strip(s.substr(1, s.size() - 2));
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = detail::strip(s.substr(0, eq));
    std::string value = detail::strip(s.substr(eq + 1));
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\''))) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": empty key");
    }
    entries[section.empty() ? key : section + "." + key] = value;
  }
  return entries;
}

}  // namespace limebayes
