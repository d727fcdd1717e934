#pragma once

// Wrapped isotropic Gaussian on the flat 2-torus.
//
// X ~ U([0,1)^2), Y | X = x ~ wrapped N(x, sigma^2 I). Both marginals are
// uniform, so the density ratio is the wrapped Gaussian kernel itself:
//   p^sigma(x, y) = sum_{k in Z^2, |k_i| <= K} (2 pi sigma^2)^-1 exp(-|x - y + k|^2 / (2 sigma^2)).
// The kernel factorizes over the two coordinates; each factor is evaluated in
// log space around its dominant lattice term.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

#include "bbs/core.hpp"
#include "bbs/rng.hpp"

namespace bbs {

class TorusWrappedGaussianModel {
 public:
  static constexpr std::size_t kDim = 2;

  explicit TorusWrappedGaussianModel(double true_sigma,
                                     ParamDomain sigma_domain = ParamDomain::interval(0.02, 0.5),
                                     int truncation = 4)
      : domain_(std::move(sigma_domain)), truncation_(truncation), truth_({true_sigma}) {
    if (domain_.dim() != 1) throw Error(ErrorCode::InvalidDomain, "sigma domain must be one-dimensional");
    if (domain_.lower()[0] <= 0.0) throw Error(ErrorCode::InvalidDomain, "sigma domain must be positive");
    if (truncation_ < 1) throw Error(ErrorCode::InvalidSize, "truncation radius must be positive");
    domain_.require(truth_);
  }

  const ParamDomain& domain() const noexcept { return domain_; }
  const ParamPoint& true_param() const noexcept { return truth_; }
  int truncation() const noexcept { return truncation_; }
  std::size_t x_dim() const noexcept { return kDim; }
  std::size_t y_dim() const noexcept { return kDim; }

  class Evaluator {
   public:
    Evaluator(double sigma, int truncation)
        : sigma_(sigma),
          inv_two_var_(1.0 / (2.0 * sigma * sigma)),
          log_norm_1d_(-0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma)),
          truncation_(truncation) {}

    double log_density(std::span<const double> x, std::span<const double> y) const {
      // One log for both coordinates: the lattice sums are each in [1, 1 + 2K e^-40].
      double e0a, e0b;
      const double sa = lattice_sum(x[0] - y[0], e0a, nullptr);
      const double sb = lattice_sum(x[1] - y[1], e0b, nullptr);
      const double s = sa * sb;
      return e0a + e0b + (s == 1.0 ? 0.0 : std::log(s)) + 2.0 * log_norm_1d_;
    }

    /// d/dsigma log p.
    void grad_log_density(std::span<const double> x, std::span<const double> y, std::span<double> out) const {
      double g = 0.0;
      for (std::size_t c = 0; c < kDim; ++c) {
        double second_moment = 0.0;
        log_factor(x[c] - y[c], &second_moment);
        g += -1.0 / sigma_ + second_moment / (sigma_ * sigma_ * sigma_);
      }
      out[0] = g;
    }

    /// Log of the one-dimensional wrapped kernel at offset delta. When
    /// `second_moment` is set, it receives the kernel-weighted mean of
    /// (delta + k)^2 over the lattice terms.
    double log_factor(double delta, double* second_moment) const {
      double e0;
      const double s = lattice_sum(delta, e0, second_moment);
      return e0 + std::log(s) + log_norm_1d_;
    }

    /// Lattice sum relative to the k = 0 term, whose log-weight goes to `e0`.
    double lattice_sum(double delta, double& e0, double* second_moment) const {
      const double r = delta - std::nearbyint(delta);  // r in [-1/2, 1/2]
      e0 = -r * r * inv_two_var_;
      double s = 1.0;
      double m2 = r * r;
      // Terms are added in the order k = +1, -1, +2, -2, ...; each side is
      // monotone in |k|, and a term below exp(-40) relative to the k = 0
      // term cannot change a sum that is at least 1.
      bool plus_live = true, minus_live = true;
      for (int k = 1; k <= truncation_ && (plus_live || minus_live); ++k) {
        for (int sign : {1, -1}) {
          bool& live = sign > 0 ? plus_live : minus_live;
          if (!live) continue;
          const double d = r + sign * k;
          const double rel = -d * d * inv_two_var_ - e0;
          if (rel < -40.0) {
            live = false;
            continue;
          }
          const double t = std::exp(rel);
          s += t;
          m2 += t * d * d;
        }
      }
      if (second_moment != nullptr) *second_moment = m2 / s;
      return s;
    }

   private:
    double sigma_;
    double inv_two_var_;
    double log_norm_1d_;
    int truncation_;
  };

  Evaluator at(const ParamPoint& theta) const { return Evaluator(theta[0], truncation_); }

  /// Largest density value over the domain: the peak at x = y for the
  /// smallest sigma.
  double density_bound() const {
    const Evaluator e(domain_.lower()[0], truncation_);
    return std::exp(2.0 * e.log_factor(0.0, nullptr));
  }

  /// <p^a, p^b> in L2(mu x nu): the wrapped Gaussian with variance
  /// a^2 + b^2 evaluated at the origin (full lattice sum, not truncated).
  static double inner_product(double sigma_a, double sigma_b) {
    const double var = sigma_a * sigma_a + sigma_b * sigma_b;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
    double s = norm;
    for (int k = 1; k < 10000; ++k) {
      const double t = 2.0 * norm * std::exp(-static_cast<double>(k) * k / (2.0 * var));
      s += t;
      if (t < 1e-20 * s) break;
    }
    return s * s;
  }

  double l2_norm_sq_true() const { return inner_product(truth_[0], truth_[0]); }

  double l2_dist_sq_unchecked(const ParamPoint& theta) const {
    const double a = theta[0];
    const double b = truth_[0];
    return inner_product(a, a) + inner_product(b, b) - 2.0 * inner_product(a, b);
  }

  PairSample sample_pair(RandomStream& rng) const {
    PairSample s;
    s.x = {rng.uniform(), rng.uniform()};
    s.y.resize(kDim);
    for (std::size_t c = 0; c < kDim; ++c) s.y[c] = wrap_unit(s.x[c] + truth_[0] * rng.normal());
    return s;
  }

  /// Reduces v modulo 1 into [0, 1).
  static double wrap_unit(double v) {
    double w = v - std::floor(v);
    if (w >= 1.0) w = 0.0;
    return w;
  }

 private:
  ParamDomain domain_;
  int truncation_;
  ParamPoint truth_;
};

}  // namespace bbs
