#pragma once

// Correlation model: (X, Y) standard bivariate normal with correlation rho,
// marginals N(0, 1) known. The candidate densities are the ratios
//   p^rho(x, y) = phi_rho(x, y) / (phi(x) phi(y))
//             = (1 - rho^2)^(-1/2) exp((2 rho x y - rho^2 (x^2 + y^2)) / (2 (1 - rho^2))).
// p^0 is identically 1.

#include <cmath>
#include <cstddef>
#include <span>

#include "bbs/core.hpp"
#include "bbs/rng.hpp"

namespace bbs {

class BivariateNormalRatioModel {
 public:
  /// Domain [-1 + tau, 1 - tau].
  static ParamDomain default_domain(double tau = 0.05) { return ParamDomain::interval(-1.0 + tau, 1.0 - tau); }

  explicit BivariateNormalRatioModel(double true_rho, ParamDomain rho_domain = default_domain())
      : domain_(std::move(rho_domain)), truth_({true_rho}) {
    if (domain_.dim() != 1) throw Error(ErrorCode::InvalidDomain, "rho domain must be one-dimensional");
    if (domain_.lower()[0] <= -1.0 || domain_.upper()[0] >= 1.0) {
      throw Error(ErrorCode::InvalidDomain, "rho domain must lie strictly inside (-1, 1)");
    }
    domain_.require(truth_);
  }

  const ParamDomain& domain() const noexcept { return domain_; }
  const ParamPoint& true_param() const noexcept { return truth_; }
  std::size_t x_dim() const noexcept { return 1; }
  std::size_t y_dim() const noexcept { return 1; }

  class Evaluator {
   public:
    explicit Evaluator(double rho)
        : rho_(rho), one_minus_(1.0 - rho * rho), log_norm_(-0.5 * std::log(1.0 - rho * rho)) {}

    double log_density(std::span<const double> x, std::span<const double> y) const {
      const double a = x[0], b = y[0];
      return log_norm_ + (2.0 * rho_ * a * b - rho_ * rho_ * (a * a + b * b)) / (2.0 * one_minus_);
    }

    void grad_log_density(std::span<const double> x, std::span<const double> y, std::span<double> out) const {
      const double a = x[0], b = y[0];
      const double s = a * a + b * b;
      const double num = 2.0 * rho_ * a * b - rho_ * rho_ * s;
      out[0] = rho_ / one_minus_ + (a * b - rho_ * s) / one_minus_ + rho_ * num / (one_minus_ * one_minus_);
    }

   private:
    double rho_;
    double one_minus_;
    double log_norm_;
  };

  Evaluator at(const ParamPoint& theta) const { return Evaluator(theta[0]); }

  /// ||p^{rho*}||^2 = 1 / (1 - rho*^2).
  double l2_norm_sq_true() const { return 1.0 / (1.0 - truth_[0] * truth_[0]); }

  /// ||p^rho - p^{rho*}||^2 = 1/(1 - rho^2) + 1/(1 - rho*^2) - 2/|rho rho* - 1|.
  double l2_dist_sq_unchecked(const ParamPoint& theta) const {
    const double r = theta[0];
    const double rs = truth_[0];
    return 1.0 / (1.0 - r * r) + 1.0 / (1.0 - rs * rs) - 2.0 / std::abs(r * rs - 1.0);
  }

  PairSample sample_pair(RandomStream& rng) const {
    const double rho = truth_[0];
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    return PairSample{{z1}, {rho * z1 + std::sqrt(1.0 - rho * rho) * z2}};
  }

 private:
  ParamDomain domain_;
  ParamPoint truth_;
};

}  // namespace bbs
