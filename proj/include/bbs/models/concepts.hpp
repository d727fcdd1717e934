#pragma once

#include <concepts>
#include <cstddef>
#include <span>

#include "bbs/core.hpp"
#include "bbs/rng.hpp"

namespace bbs {

/// A parametric family of densities p^theta(x, y) with respect to the product
/// of two known marginals.
///
/// Evaluation is split in two: `at(theta)` does all theta-dependent setup and
/// returns a light evaluator, which then answers per-pair queries. Evaluators
/// assume theta was already checked against the domain.
template <class M>
concept DensityModel = requires(const M& m, const ParamPoint& theta, std::span<const double> pt,
                                std::span<double> out) {
  { m.domain() } -> std::convertible_to<const ParamDomain&>;
  { m.x_dim() } -> std::convertible_to<std::size_t>;
  { m.y_dim() } -> std::convertible_to<std::size_t>;
  { m.at(theta) };
  { m.at(theta).log_density(pt, pt) } -> std::same_as<double>;
  { m.at(theta).grad_log_density(pt, pt, out) };
};

/// A model that also knows the true parameter and can draw pairs from pi.
template <class M>
concept GenerativeModel = DensityModel<M> && requires(const M& m, RandomStream& rng) {
  { m.true_param() } -> std::convertible_to<const ParamPoint&>;
  { m.sample_pair(rng) } -> std::same_as<PairSample>;
};

/// Closed forms for the L2(mu x nu) geometry relative to the true density.
template <class M>
concept ClosedFormGeometry = DensityModel<M> && requires(const M& m, const ParamPoint& theta) {
  { m.l2_norm_sq_true() } -> std::same_as<double>;
  { m.l2_dist_sq_unchecked(theta) } -> std::same_as<double>;
};

}  // namespace bbs
