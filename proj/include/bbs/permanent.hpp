#pragma once

// Matrix permanents by Ryser's inclusion-exclusion formula, visiting column
// subsets in Gray-code order so each step updates the row sums by a single
// column.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace bbs {

inline constexpr std::size_t kMaxPermanentSize = 12;

/// perm(A) for a row-major n x n matrix.
inline double permanent(std::span<const double> a, std::size_t n) {
  if (a.size() != n * n) throw std::invalid_argument("permanent: matrix is not n x n");
  if (n == 0) return 1.0;
  if (n > 30) throw std::invalid_argument("permanent: matrix too large");
  std::vector<long double> row_sum(n, 0.0L);
  long double total = 0.0L;
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < subsets; ++k) {
    const std::uint64_t next = k ^ (k >> 1);
    const std::uint64_t flipped = next ^ gray;
    const auto col = static_cast<std::size_t>(std::countr_zero(flipped));
    const long double sign = (next & flipped) ? 1.0L : -1.0L;
    for (std::size_t i = 0; i < n; ++i) row_sum[i] += sign * static_cast<long double>(a[i * n + col]);
    gray = next;
    long double prod = 1.0L;
    for (std::size_t i = 0; i < n; ++i) prod *= row_sum[i];
    // (-1)^(n - |S|)
    const int parity = static_cast<int>((n - static_cast<std::size_t>(std::popcount(gray))) & 1U);
    total += parity ? -prod : prod;
  }
  return static_cast<double>(total);
}

/// log perm(exp(L)) for a row-major n x n matrix of log-entries. Each row is
/// shifted by its maximum before exponentiation.
inline double log_permanent_of_exp(std::span<const double> log_a, std::size_t n) {
  if (log_a.size() != n * n) throw std::invalid_argument("log_permanent_of_exp: matrix is not n x n");
  std::vector<double> scaled(n * n);
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double hi = log_a[i * n];
    for (std::size_t j = 1; j < n; ++j) hi = log_a[i * n + j] > hi ? log_a[i * n + j] : hi;
    shift += hi;
    for (std::size_t j = 0; j < n; ++j) scaled[i * n + j] = std::exp(log_a[i * n + j] - hi);
  }
  return shift + std::log(permanent(scaled, n));
}

}  // namespace bbs
