#pragma once

// Deterministic SVG rendering: covariance block heatmaps on a fixed
// diverging scale over [-1,1], and eigenfunction line plots.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mixedfpca/fpca.hpp"

namespace mfpca {

namespace detail {

// blue (-1) -> white (0) -> red (+1)
inline std::string diverging_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  int r, g, b;
  if (v < 0) {
    const double w = 1.0 + v;  // 0 at -1, 1 at 0
    r = static_cast<int>(std::lround(255 * (0.20 + 0.80 * w)));
    g = static_cast<int>(std::lround(255 * (0.35 + 0.65 * w)));
    b = 255;
  } else {
    const double w = 1.0 - v;
    r = 255;
    g = static_cast<int>(std::lround(255 * (0.25 + 0.75 * w)));
    b = static_cast<int>(std::lround(255 * (0.20 + 0.80 * w)));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

// J x J panel grid of m x m heatmaps of an assembled (J*m x J*m) matrix.
inline std::string covariance_svg(const Eigen::MatrixXd& assembled, int J,
                                  const std::vector<std::string>& names) {
  const int m = static_cast<int>(assembled.rows()) / J;
  const double cell = 6.0;
  const double pad = 24.0;
  const double panel = m * cell;
  const double width = J * panel + (J + 1) * pad;
  const double height = J * panel + (J + 1) * pad + 16.0;
  std::ostringstream ss;
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
     << "\">\n";
  ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int pj = 0; pj < J; ++pj) {
    for (int pk = 0; pk < J; ++pk) {
      const double x0 = pad + pk * (panel + pad);
      const double y0 = pad + pj * (panel + pad);
      ss << "<g class=\"panel\" data-block=\"" << pj + 1 << "," << pk + 1 << "\">\n";
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          // time increasing upward on the vertical axis
          const double x = x0 + b * cell;
          const double y = y0 + (m - 1 - a) * cell;
          ss << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
             << "\" height=\"" << cell << "\" fill=\""
             << detail::diverging_color(assembled(pj * m + a, pk * m + b))
             << "\"/>\n";
        }
      }
      ss << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << panel
         << "\" height=\"" << panel
         << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
      if (pj == 0 && pk < static_cast<int>(names.size()))
        ss << "<text x=\"" << x0 + panel / 2 << "\" y=\"" << pad - 8
           << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">"
           << names[pk] << "</text>\n";
      if (pk == 0 && pj < static_cast<int>(names.size()))
        ss << "<text x=\"" << 10 << "\" y=\"" << y0 + panel / 2
           << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "transform=\"rotate(-90 10 "
           << y0 + panel / 2 << ")\">" << names[pj] << "</text>\n";
      ss << "</g>\n";
    }
  }
  ss << "</svg>\n";
  return ss.str();
}

// Line plot of the leading eigenfunctions (shared ones for the ps flavor;
// per-component rows for the full flavor are overlaid per panel).
inline std::string eigenfunctions_svg(const EigenSystem& sys, int max_l = 4) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  const int L = std::min<int>(max_l, sys.n_components_kept());
  const int m = static_cast<int>(sys.grid.size());
  const double w = 360.0, h = 200.0, pad = 30.0;
  double lo = 0.0, hi = 0.0;
  for (int l = 0; l < L; ++l) {
    lo = std::min(lo, sys.eigenfunctions[l].minCoeff());
    hi = std::max(hi, sys.eigenfunctions[l].maxCoeff());
  }
  if (hi <= lo) hi = lo + 1.0;
  auto X = [&](double t) { return pad + t * (w - 2 * pad); };
  auto Y = [&](double v) { return h - pad - (v - lo) / (hi - lo) * (h - 2 * pad); };
  std::ostringstream ss;
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
     << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  ss << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad
     << "\" y2=\"" << h - pad << "\" stroke=\"#333333\"/>\n";
  ss << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
     << h - pad << "\" stroke=\"#333333\"/>\n";
  int color = 0;
  for (int l = 0; l < L; ++l) {
    const auto& f = sys.eigenfunctions[l];
    for (Eigen::Index row = 0; row < f.rows(); ++row) {
      ss << "<polyline fill=\"none\" stroke=\"" << palette[color % 6]
         << "\" stroke-width=\"1.5\" points=\"";
      for (int t = 0; t < m; ++t) {
        ss << X(sys.grid[t]) << "," << Y(f(row, t));
        if (t + 1 < m) ss << " ";
      }
      ss << "\"/>\n";
    }
    ++color;
  }
  ss << "</svg>\n";
  return ss.str();
}

}  // namespace mfpca
