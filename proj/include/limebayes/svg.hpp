#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "limebayes/io.hpp"

namespace limebayes {

/// Minimal static SVG line/scatter rendering for quick visual checks. The
/// CSV/JSON bundle is the primary plotting interface; these renders carry no
/// axes ticks or legends beyond a frame and caption.
class SvgChart {
public:
  SvgChart(double width = 640, double height = 400) : width_(width), height_(height) {}

  void add_line(std::span<const double> x, std::span<const double> y,
                const std::string& color, double stroke = 1.0, double opacity = 1.0) {
    Series s;
    s.x.assign(x.begin(), x.end());
    s.y.assign(y.begin(), y.end());
    s.color = color;
    s.stroke = stroke;
    s.opacity = opacity;
    s.scatter = false;
    series_.push_back(std::move(s));
  }

  void add_points(std::span<const double> x, std::span<const double> y,
                  const std::string& color, double radius = 3.0) {
    Series s;
    s.x.assign(x.begin(), x.end());
    s.y.assign(y.begin(), y.end());
    s.color = color;
    s.stroke = radius;
    s.scatter = true;
    series_.push_back(std::move(s));
  }

  void set_caption(std::string caption) { caption_ = std::move(caption); }

  void write(const std::filesystem::path& path) const {
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    bool first = true;
    for (const Series& s : series_) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        if (first) {
          x_lo = x_hi = s.x[i];
          y_lo = y_hi = s.y[i];
          first = false;
        } else {
          x_lo = std::min(x_lo, s.x[i]);
          x_hi = std::max(x_hi, s.x[i]);
          y_lo = std::min(y_lo, s.y[i]);
          y_hi = std::max(y_hi, s.y[i]);
        }
      }
    }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;

    const double margin = 40.0;
    auto px = [&](double x) {
      return margin + (x - x_lo) / (x_hi - x_lo) * (width_ - 2 * margin);
    };
    auto py = [&](double y) {
      return height_ - margin - (y - y_lo) / (y_hi - y_lo) * (height_ - 2 * margin);
    };

    auto out = open_output(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
        << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << ' '
        << height_ << "\">\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\""
        << width_ - 2 * margin << "\" height=\"" << height_ - 2 * margin
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (const Series& s : series_) {
      if (s.scatter) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          out << "<circle cx=\"" << format_double(px(s.x[i])) << "\" cy=\""
              << format_double(py(s.y[i])) << "\" r=\"" << s.stroke
              << "\" fill=\"" << s.color << "\"/>\n";
        }
      } else {
        out << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"" << s.stroke << "\" stroke-opacity=\""
            << s.opacity << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (i) out << ' ';
          out << format_double(px(s.x[i])) << ',' << format_double(py(s.y[i]));
        }
        out << "\"/>\n";
      }
    }
    if (!caption_.empty()) {
      out << "<text x=\"" << margin << "\" y=\"" << margin - 12
          << "\" font-family=\"sans-serif\" font-size=\"14\">" << caption_
          << "</text>\n";
    }
    // axis range labels, corners only
    out << "<text x=\"" << margin << "\" y=\"" << height_ - margin + 16
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(x_lo)
        << "</text>\n";
    out << "<text x=\"" << width_ - margin << "\" y=\"" << height_ - margin + 16
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(x_hi) << "</text>\n";
    out << "<text x=\"" << margin - 4 << "\" y=\"" << height_ - margin
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(y_lo) << "</text>\n";
    out << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(y_hi) << "</text>\n";
    out << "</svg>\n";
  }

private:
  struct Series {
    std::vector<double> x, y;
    std::string color;
    double stroke = 1.0;
    double opacity = 1.0;
    bool scatter = false;
  };
  double width_, height_;
  std::string caption_;
  std::vector<Series> series_;
};

}  // namespace limebayes
