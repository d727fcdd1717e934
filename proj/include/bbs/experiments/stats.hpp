#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "bbs/core.hpp"
#include "bbs/numerics.hpp"

namespace bbs::experiments {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::MissingInput, "mean of an empty sample");
  return numerics::compensated_sum(v) / static_cast<double>(v.size());
}

/// Unbiased sample standard deviation; 0 for a single value.
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  numerics::CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

/// Quantile with linear interpolation between order statistics
/// (position q * (n - 1) in the sorted sample).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCode::MissingInput, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

inline double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

/// Below this |mean| the coefficient of variation is not reported.
inline constexpr double kCvMeanFloor = 1e-12;

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::optional<double> cv;
  double median_abs_err = 0.0;
  double iqr = 0.0;
};

inline Summary summarize(const std::vector<double>& estimates, double truth) {
  Summary s;
  s.mean = mean(estimates);
  s.sd = sample_sd(estimates);
  if (std::abs(s.mean) > kCvMeanFloor) s.cv = s.sd / s.mean;
  std::vector<double> err;
  for (double e : estimates) err.push_back(std::abs(e - truth));
  s.median_abs_err = median(err);
  s.iqr = iqr(estimates);
  return s;
}

/// Freedman-Diaconis bin count, never fewer than 8 bins.
inline std::size_t histogram_bins(const std::vector<double>& sample) {
  constexpr std::size_t kMinBins = 8;
  constexpr std::size_t kMaxBins = 512;
  if (sample.size() < 2) return kMinBins;
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  const double range = *hi - *lo;
  const double width = 2.0 * iqr(sample) / std::cbrt(static_cast<double>(sample.size()));
  if (!(range > 0.0) || !(width > 0.0)) return kMinBins;
  const auto n = static_cast<std::size_t>(std::ceil(range / width));
  return std::clamp(n, kMinBins, kMaxBins);
}

}  // namespace bbs::experiments
