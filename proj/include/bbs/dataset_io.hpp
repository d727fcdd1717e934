#pragma once

// Line-oriented text form of a Dataset, one batch per line:
//
//   batch 0: 0.1,0.2;0.3,0.4 | 0.5,0.6;0.7,0.8
//
// Points are separated by ';', coordinates within a point by ','. Numbers
// are written with 17 significant digits, which round-trips every double.

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bbs/core.hpp"

namespace bbs {

inline std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

namespace detail {

inline void write_points(std::ostream& os, const std::vector<double>& flat, std::size_t dim) {
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i > 0) os << (i % dim == 0 ? ';' : ',');
    os << format_double(flat[i]);
  }
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "bad number '" + std::string(s) + "'");
  }
  return v;
}

/// Parses "a,b;c,d" into a flat list; returns the point dimension.
inline std::size_t parse_points(std::string_view s, std::vector<double>& flat) {
  std::size_t dim = 0;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(';', start);
    if (end == std::string_view::npos) end = s.size();
    const std::string_view point = s.substr(start, end - start);
    std::size_t coords = 0;
    std::size_t p = 0;
    while (p <= point.size()) {
      std::size_t q = point.find(',', p);
      if (q == std::string_view::npos) q = point.size();
      flat.push_back(parse_double(point.substr(p, q - p)));
      ++coords;
      p = q + 1;
    }
    if (dim == 0) dim = coords;
    if (coords != dim) throw Error(ErrorCode::ParseError, "points of mixed dimension");
    start = end + 1;
  }
  return dim;
}

}  // namespace detail

inline void write_dataset(std::ostream& os, const Dataset& data) {
  for (std::size_t k = 0; k < data.batches.size(); ++k) {
    const auto& b = data.batches[k];
    os << "batch " << k << ": ";
    detail::write_points(os, b.xs_flat(), b.x_dim());
    os << " | ";
    detail::write_points(os, b.ys_flat(), b.y_dim());
    os << '\n';
  }
}

inline Dataset read_dataset(std::istream& is) {
  Dataset data;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::string expected = "batch " + std::to_string(data.batches.size()) + ":";
    if (line.rfind(expected, 0) != 0) throw Error(ErrorCode::ParseError, "expected '" + expected + "'");
    const std::string_view body = std::string_view(line).substr(expected.size());
    const std::size_t bar = body.find('|');
    if (bar == std::string_view::npos) throw Error(ErrorCode::ParseError, "missing '|' separator");
    std::vector<double> xs, ys;
    const std::size_t dx = detail::parse_points(body.substr(0, bar), xs);
    const std::size_t dy = detail::parse_points(body.substr(bar + 1), ys);
    data.batches.emplace_back(dx, dy, std::move(xs), std::move(ys));
  }
  validate_dataset(data);
  return data;
}

}  // namespace bbs
