#pragma once

// Checked entry points over any DensityModel.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "bbs/core.hpp"
#include "bbs/models/bivariate.hpp"
#include "bbs/models/concepts.hpp"
#include "bbs/models/discrete.hpp"
#include "bbs/models/torus.hpp"

namespace bbs {

template <DensityModel Model>
double density(const Model& model, const ParamPoint& theta, std::span<const double> x, std::span<const double> y) {
  model.domain().require(theta);
  return std::exp(model.at(theta).log_density(x, y));
}

template <DensityModel Model>
double log_density(const Model& model, const ParamPoint& theta, std::span<const double> x,
                   std::span<const double> y) {
  model.domain().require(theta);
  return model.at(theta).log_density(x, y);
}

/// d p^theta(x, y) / d theta.
template <DensityModel Model>
std::vector<double> grad_density(const Model& model, const ParamPoint& theta, std::span<const double> x,
                                 std::span<const double> y) {
  model.domain().require(theta);
  const auto eval = model.at(theta);
  std::vector<double> g(model.domain().dim());
  eval.grad_log_density(x, y, g);
  const double p = std::exp(eval.log_density(x, y));
  for (double& v : g) v *= p;
  return g;
}

/// ||p^theta - p*||^2 in L2(mu x nu).
template <DensityModel Model>
double l2_dist_sq(const Model& model, const ParamPoint& theta) {
  model.domain().require(theta);
  if constexpr (ClosedFormGeometry<Model>) {
    return model.l2_dist_sq_unchecked(theta);
  } else {
    throw Error(ErrorCode::NoClosedForm, "model has no closed-form L2 geometry");
  }
}

template <DensityModel Model>
double l2_norm_sq_true(const Model& model) {
  if constexpr (ClosedFormGeometry<Model>) {
    return model.l2_norm_sq_true();
  } else {
    throw Error(ErrorCode::NoClosedForm, "model has no closed-form L2 geometry");
  }
}

/// E_pi[f(X, Y)] for a discrete model, as an exact finite sum.
inline double exact_expectation(const DiscreteTabularModel& model,
                                const std::function<double(std::size_t, std::size_t)>& f) {
  return model.exact_expectation(f);
}

}  // namespace bbs
