#pragma once

// Minimizers over the compact parameter box.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "bbs/core.hpp"

namespace bbs {

struct MinimizeOptions {
  int grid_points = 61;
  double refine_tol = 1e-6;
  int max_refine_iters = 200;

  void validate() const {
    if (grid_points < 3) throw Error(ErrorCode::ConfigError, "grid_points must be at least 3");
    if (!(refine_tol > 0.0)) throw Error(ErrorCode::ConfigError, "refine_tol must be positive");
    if (max_refine_iters < 1) throw Error(ErrorCode::ConfigError, "max_refine_iters must be positive");
  }
};

struct MinimizeResult {
  ParamPoint arg;
  double value = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

using ScalarObjective = std::function<double(double)>;
using Objective = std::function<double(const ParamPoint&)>;
using Gradient = std::function<std::vector<double>(const ParamPoint&)>;

namespace detail {

inline double checked(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteObjective, "objective returned a non-finite value");
  return v;
}

/// Keeps the lowest value seen; equal values resolve to the smaller argument.
struct BestPoint {
  double arg = 0.0;
  double value = std::numeric_limits<double>::infinity();
  bool empty = true;

  void offer(double t, double v) {
    if (empty || v < value || (v == value && t < arg)) {
      arg = t;
      value = v;
      empty = false;
    }
  }
};

}  // namespace detail

/// Grid scan followed by golden-section refinement around the best grid
/// point. Returns the best point evaluated, so the result is never worse than
/// the grid minimum. Ties go to the smaller argument.
inline MinimizeResult minimize_scalar(const ScalarObjective& f, const ParamDomain& domain,
                                      const MinimizeOptions& opts = {}) {
  opts.validate();
  if (domain.dim() != 1) throw Error(ErrorCode::InvalidDomain, "minimize_scalar needs a one-dimensional domain");
  const double lo = domain.lower()[0];
  const double hi = domain.upper()[0];
  const int n = opts.grid_points;

  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  grid.back() = hi;

  MinimizeResult result;
  detail::BestPoint best;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = detail::checked(f(grid[i]));
    ++result.evals;
    if (best.empty || v < best.value) best_index = i;
    best.offer(grid[i], v);
  }

  double a = grid[best_index == 0 ? 0 : best_index - 1];
  double b = grid[best_index + 1 == grid.size() ? best_index : best_index + 1];
  const double inv_phi = std::numbers::phi - 1.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = detail::checked(f(c));
  double fd = detail::checked(f(d));
  result.evals += 2;
  best.offer(c, fc);
  best.offer(d, fd);
  int iters = 0;
  while (b - a > opts.refine_tol && iters < opts.max_refine_iters) {
    ++iters;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = detail::checked(f(c));
      best.offer(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = detail::checked(f(d));
      best.offer(d, fd);
    }
    ++result.evals;
  }
  result.converged = b - a <= opts.refine_tol;
  result.arg = ParamPoint{best.arg};
  result.value = best.value;
  return result;
}

/// Projected gradient descent from the box center with Armijo backtracking
/// along the projection arc (c = 1e-4, step halving). Stops once the
/// projected-gradient step P(theta - grad) - theta has norm below 1e-6.
inline MinimizeResult minimize_box(const Objective& f, const Gradient& grad, const ParamDomain& domain,
                                   const MinimizeOptions& opts = {}) {
  opts.validate();
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr double kGradTol = 1e-6;
  constexpr int kMaxBacktracks = 60;

  const std::size_t d = domain.dim();
  MinimizeResult result;
  ParamPoint theta = domain.center();
  double value = detail::checked(f(theta));
  ++result.evals;

  for (int iter = 0; iter < opts.max_refine_iters; ++iter) {
    const std::vector<double> g = grad(theta);
    for (double v : g) detail::checked(v);

    std::vector<double> trial(d);
    for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] - g[i];
    const ParamPoint unit_step = domain.project(trial);
    double pg_norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) pg_norm += (unit_step[i] - theta[i]) * (unit_step[i] - theta[i]);
    if (std::sqrt(pg_norm) < kGradTol) {
      result.converged = true;
      break;
    }

    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = theta[i] - t * g[i];
      ParamPoint next = domain.project(trial);
      double decrease = 0.0;
      for (std::size_t i = 0; i < d; ++i) decrease += g[i] * (next[i] - theta[i]);
      const double v = detail::checked(f(next));
      ++result.evals;
      if (v <= value + kArmijo * decrease) {
        theta = std::move(next);
        value = v;
        accepted = true;
        break;
      }
      t *= kShrink;
    }
    if (!accepted) break;
  }
  result.arg = theta;
  result.value = value;
  return result;
}

/// Central differences (f(theta + h e_i) - f(theta - h e_i)) / (2h). Both
/// probe points must lie inside the domain.
inline std::vector<double> finite_diff_grad(const Objective& f, const ParamDomain& domain, const ParamPoint& theta,
                                            double h) {
  const std::size_t d = theta.dim();
  std::vector<double> out(d);
  std::vector<double> probe(theta.coords().begin(), theta.coords().end());
  for (std::size_t i = 0; i < d; ++i) {
    probe[i] = theta[i] + h;
    const ParamPoint up(probe);
    probe[i] = theta[i] - h;
    const ParamPoint down(probe);
    probe[i] = theta[i];
    domain.require(up);
    domain.require(down);
    out[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return out;
}

}  // namespace bbs
