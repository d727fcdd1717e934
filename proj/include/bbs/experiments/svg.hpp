#pragma once

// Self-contained SVG figures drawn from the experiment CSVs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bbs/experiments/csv.hpp"
#include "bbs/experiments/stats.hpp"

namespace bbs::experiments {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  double width = 1.0;
  double opacity = 1.0;
  bool markers = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

namespace svg_detail {

inline constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

inline Frame frame_for(const std::vector<Series>& series, bool y_from_zero) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = y_from_zero ? 0.0 : INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  return Frame{x0, x1, y_from_zero ? y0 : y0 - pad, y1 + pad};
}

inline void axes(std::ostringstream& o, const Frame& f, const Plot& p) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
    << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(p.title)
    << "</text>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    o << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"middle\">" << num(xv)
      << "</text>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
    << escape(p.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (kTop + kH - kBottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (kTop + kH - kBottom) / 2 << ")\">" << escape(p.y_label) << "</text>\n";
}

}  // namespace svg_detail

inline std::string render_line_plot(const Plot& p) {
  using namespace svg_detail;
  const Frame f = frame_for(p.series, false);
  std::ostringstream o;
  axes(o, f, p);
  for (const auto& s : p.series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width << "\" stroke-opacity=\""
      << s.opacity << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
    o << "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        o << "<circle cx=\"" << num(f.px(s.x[i])) << "\" cy=\"" << num(f.py(s.y[i])) << "\" r=\"3\" fill=\""
          << s.color << "\"/>\n";
      }
    }
  }
  o << "</svg>\n";
  return o.str();
}

/// Histogram with Freedman-Diaconis bins (at least 8) and a vertical marker
/// at `truth`.
inline std::string render_histogram(const std::vector<double>& sample, double truth, const std::string& title) {
  using namespace svg_detail;
  if (sample.empty()) throw Error(ErrorCode::MissingInput, "histogram of an empty replicate set");
  const std::size_t bins = histogram_bins(sample);
  const auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
  double lo = *mn, hi = *mx;
  if (!(hi > lo)) lo -= 0.5, hi += 0.5;
  std::vector<double> counts(bins, 0.0);
  for (double v : sample) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)] += 1.0;
  }
  Series outline;
  for (std::size_t b = 0; b < bins; ++b) {
    outline.x.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
    outline.y.push_back(counts[b]);
  }
  outline.x.push_back(std::max(hi, truth));
  outline.x.push_back(std::min(lo, truth));
  outline.y.push_back(0.0);
  const Plot p{title, "θ̂", "count", {outline}};
  const Frame f = frame_for(p.series, true);
  std::ostringstream o;
  axes(o, f, p);
  const double bw = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double x = lo + bw * static_cast<double>(b);
    o << "<rect x=\"" << num(f.px(x)) << "\" y=\"" << num(f.py(counts[b])) << "\" width=\""
      << num(f.px(x + bw) - f.px(x)) << "\" height=\"" << num(f.py(0.0) - f.py(counts[b]))
      << "\" fill=\"#ff7f0e\" stroke=\"white\"/>\n";
  }
  o << "<line x1=\"" << num(f.px(truth)) << "\" y1=\"" << kTop << "\" x2=\"" << num(f.px(truth)) << "\" y2=\""
    << kH - kBottom << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
  o << "</svg>\n";
  return o.str();
}

namespace svg_detail {

inline void save(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingInput, "cannot write " + path.string());
  f << text;
}

/// Short label for a CSV number, e.g. "0.10000000000000001" -> "0.1".
inline std::string short_num(const std::string& field) { return num(bbs::detail::parse_double(field)); }

inline std::string cell_tag(const std::string& star, const std::string& m, const std::string& n) {
  return "star" + short_num(star) + "_M" + m + "_N" + n;
}

}  // namespace svg_detail

/// Estimate files the renderer looks for, by experiment.
inline const std::vector<std::string> kEstimateFiles{"simulate", "loss_curve_estimates", "cv"};

/// Draws every figure whose input CSVs exist in `dir` and returns the
/// written paths. Throws MissingInput when nothing can be drawn.
inline std::vector<std::filesystem::path> render_svg(const std::filesystem::path& dir) {
  using namespace svg_detail;
  std::vector<std::filesystem::path> written;

  if (std::filesystem::exists(dir / "loss_curves.csv")) {
    const CsvTable curves = read_csv(dir / "loss_curves.csv");
    if (curves.rows.empty()) throw Error(ErrorCode::MissingInput, "loss_curves.csv has no rows");
    std::map<std::string, std::vector<std::pair<double, double>>> limit;
    if (std::filesystem::exists(dir / "limit_curve.csv")) {
      const CsvTable lt = read_csv(dir / "limit_curve.csv");
      for (std::size_t r = 0; r < lt.rows.size(); ++r) {
        limit[lt.rows[r][lt.column("theta_star")]].emplace_back(lt.number(r, "theta"), lt.number(r, "limit_loss"));
      }
    }
    // panel -> replicate -> points, in file order
    std::map<std::tuple<std::string, std::string, std::string>, std::map<std::string, Series>> panels;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    for (std::size_t r = 0; r < curves.rows.size(); ++r) {
      const auto& row = curves.rows[r];
      auto key = std::make_tuple(row[curves.column("theta_star")], row[curves.column("M")], row[curves.column("N")]);
      if (!panels.contains(key)) order.push_back(key);
      Series& s = panels[key][row[curves.column("replicate")]];
      s.x.push_back(curves.number(r, "theta"));
      s.y.push_back(curves.number(r, "loss"));
    }
    for (const auto& key : order) {
      const auto& [star, m, n] = key;
      Plot p{"pseudo-loss, θ*=" + short_num(star) + ", M=" + m + ", N=" + n, "θ", "loss value", {}};
      for (auto& [rep, s] : panels[key]) {
        s.color = "#1f77b4";
        s.opacity = 0.35;
        p.series.push_back(s);
      }
      if (limit.contains(star)) {
        Series red;
        red.color = "red";
        red.width = 2.0;
        for (const auto& [x, y] : limit[star]) red.x.push_back(x), red.y.push_back(y);
        p.series.push_back(red);
      }
      const auto path = dir / ("loss_curve_" + cell_tag(star, m, n) + ".svg");
      save(path, render_line_plot(p));
      written.push_back(path);
    }
  }

  for (const auto& base : kEstimateFiles) {
    const auto path = dir / (base + ".csv");
    if (!std::filesystem::exists(path)) continue;
    const CsvTable t = read_csv(path);
    if (t.rows.empty()) throw Error(ErrorCode::MissingInput, path.string() + " has an empty replicate set");
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto key = std::make_tuple(t.rows[r][t.column("theta_star")], t.rows[r][t.column("M")], t.rows[r][t.column("N")]);
      if (!groups.contains(key)) order.push_back(key);
      groups[key].push_back(t.number(r, "theta_hat"));
    }
    for (const auto& key : order) {
      const auto& [star, m, n] = key;
      const auto out = dir / ("hist_" + base + "_" + cell_tag(star, m, n) + ".svg");
      save(out, render_histogram(groups[key], bbs::detail::parse_double(star),
                                 "estimates, θ*=" + short_num(star) + ", M=" + m + ", N=" + n));
      written.push_back(out);
    }
  }

  if (std::filesystem::exists(dir / "cv_summary.csv")) {
    const CsvTable t = read_csv(dir / "cv_summary.csv");
    std::map<std::pair<std::string, std::string>, Series> panels;
    std::vector<std::pair<std::string, std::string>> order;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.rows[r][t.column("cv")].empty()) continue;
      auto key = std::make_pair(t.rows[r][t.column("theta_star")], t.rows[r][t.column("N")]);
      if (!panels.contains(key)) order.push_back(key);
      panels[key].x.push_back(t.number(r, "M"));
      panels[key].y.push_back(t.number(r, "cv"));
    }
    for (const auto& key : order) {
      Series s = panels[key];
      // Points arrive in config order; draw them left to right.
      std::vector<std::size_t> idx(s.x.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
      Series sorted;
      sorted.markers = true;
      for (std::size_t i : idx) sorted.x.push_back(s.x[i]), sorted.y.push_back(s.y[i]);
      const Plot p{"coefficient of variation, θ*=" + short_num(key.first) + ", N=" + key.second, "M", "CV", {sorted}};
      const auto out = dir / ("cv_vs_M_star" + short_num(key.first) + "_N" + key.second + ".svg");
      save(out, render_line_plot(p));
      written.push_back(out);
    }
  }

  if (written.empty()) throw Error(ErrorCode::MissingInput, "no experiment CSVs found in " + dir.string());
  return written;
}

}  // namespace bbs::experiments
