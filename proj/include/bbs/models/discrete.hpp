#pragma once

// Finite-alphabet family used as the substrate for exact expectations.
//
// p^theta(a, b) = r_a c_b exp(theta . g(a, b)) with the row and column
// factors fixed by iterative proportional fitting so that
//   sum_a mu[a] p(a, b) = 1 for every b,   sum_b nu[b] p(a, b) = 1 for every a.
// Points are one-dimensional: the coordinate holds the symbol index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "bbs/core.hpp"
#include "bbs/numerics.hpp"
#include "bbs/rng.hpp"

namespace bbs {

class DiscreteTabularModel {
 public:
  struct Fit {
    std::vector<double> table;      // nx * ny, row-major
    std::vector<double> log_table;  // same layout
    std::vector<double> grad_log;   // d * nx * ny: d log p / d theta_l
    int sweeps = 0;
  };

  static constexpr double kIpfTol = 1e-13;
  static constexpr int kIpfMaxSweeps = 10000;

  /// `features` holds d tables of size nx * ny (row-major), one per
  /// parameter coordinate.
  DiscreteTabularModel(std::vector<double> mu, std::vector<double> nu, std::vector<std::vector<double>> features,
                       ParamDomain domain, ParamPoint truth)
      : mu_(std::move(mu)), nu_(std::move(nu)), features_(std::move(features)), domain_(std::move(domain)),
        truth_(std::move(truth)) {
    check_probability_vector(mu_, "mu");
    check_probability_vector(nu_, "nu");
    if (features_.size() != domain_.dim()) {
      throw Error(ErrorCode::InvalidSize, "need one feature table per parameter coordinate");
    }
    for (const auto& g : features_) {
      if (g.size() != nx() * ny()) throw Error(ErrorCode::InvalidSize, "feature table has the wrong size");
      for (double v : g) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteCoordinate, "feature value is not finite");
      }
    }
    domain_.require(truth_);
    truth_fit_ = std::make_shared<const Fit>(fit(truth_));
    build_sampler();
  }

  std::size_t nx() const noexcept { return mu_.size(); }
  std::size_t ny() const noexcept { return nu_.size(); }
  const std::vector<double>& mu() const noexcept { return mu_; }
  const std::vector<double>& nu() const noexcept { return nu_; }
  const ParamDomain& domain() const noexcept { return domain_; }
  const ParamPoint& true_param() const noexcept { return truth_; }
  const std::vector<std::vector<double>>& features() const noexcept { return features_; }
  std::size_t x_dim() const noexcept { return 1; }
  std::size_t y_dim() const noexcept { return 1; }

  /// p* as an nx * ny row-major table.
  const std::vector<double>& true_table() const noexcept { return truth_fit_->table; }

  /// Runs the proportional fitting and the derivative solve at theta.
  Fit fit(const ParamPoint& theta) const {
    const std::size_t n_x = nx(), n_y = ny(), cells = n_x * n_y;
    Fit out;
    std::vector<double> kernel(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      double e = 0.0;
      for (std::size_t l = 0; l < features_.size(); ++l) e += theta[l] * features_[l][c];
      kernel[c] = std::exp(e);
    }
    std::vector<double> row(n_x, 1.0), col(n_y, 1.0);
    out.table.assign(cells, 0.0);
    int sweep = 0;
    for (; sweep < kIpfMaxSweeps; ++sweep) {
      for (std::size_t b = 0; b < n_y; ++b) {
        double s = 0.0;
        for (std::size_t a = 0; a < n_x; ++a) s += mu_[a] * row[a] * kernel[a * n_y + b];
        col[b] = 1.0 / s;
      }
      for (std::size_t a = 0; a < n_x; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < n_y; ++b) s += nu_[b] * kernel[a * n_y + b] * col[b];
        row[a] = 1.0 / s;
      }
      for (std::size_t a = 0; a < n_x; ++a) {
        for (std::size_t b = 0; b < n_y; ++b) out.table[a * n_y + b] = row[a] * kernel[a * n_y + b] * col[b];
      }
      if (marginal_violation(out.table) < kIpfTol) break;
    }
    if (sweep == kIpfMaxSweeps) throw Error(ErrorCode::NotConverged, "proportional fitting did not converge");
    out.sweeps = sweep + 1;
    out.log_table.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) out.log_table[c] = std::log(out.table[c]);

    // d log p / d theta_l = g_l(a, b) + alpha_a + beta_b, with alpha and beta
    // chosen so that the derivative of every marginal constraint vanishes.
    // Solved by alternating the two (exact) block updates.
    out.grad_log.assign(features_.size() * cells, 0.0);
    for (std::size_t l = 0; l < features_.size(); ++l) {
      const auto& g = features_[l];
      std::vector<double> alpha(n_x, 0.0), beta(n_y, 0.0);
      for (int it = 0; it < kIpfMaxSweeps; ++it) {
        for (std::size_t a = 0; a < n_x; ++a) {
          double s = 0.0;
          for (std::size_t b = 0; b < n_y; ++b) s += nu_[b] * out.table[a * n_y + b] * (g[a * n_y + b] + beta[b]);
          alpha[a] = -s;
        }
        double resid = 0.0;
        for (std::size_t b = 0; b < n_y; ++b) {
          double s = 0.0;
          for (std::size_t a = 0; a < n_x; ++a) s += mu_[a] * out.table[a * n_y + b] * (g[a * n_y + b] + alpha[a]);
          const double nb = -s;
          resid = std::max(resid, std::abs(nb - beta[b]));
          beta[b] = nb;
        }
        if (resid < 1e-15) break;
      }
      for (std::size_t a = 0; a < n_x; ++a) {
        for (std::size_t b = 0; b < n_y; ++b) {
          out.grad_log[l * cells + a * n_y + b] = g[a * n_y + b] + alpha[a] + beta[b];
        }
      }
    }
    return out;
  }

  class Evaluator {
   public:
    Evaluator(std::shared_ptr<const Fit> fit, std::size_t ny, std::size_t dim)
        : fit_(std::move(fit)), ny_(ny), dim_(dim) {}

    double log_density(std::span<const double> x, std::span<const double> y) const {
      return fit_->log_table[cell(x, y)];
    }

    void grad_log_density(std::span<const double> x, std::span<const double> y, std::span<double> out) const {
      const std::size_t c = cell(x, y);
      const std::size_t cells = fit_->table.size();
      for (std::size_t l = 0; l < dim_; ++l) out[l] = fit_->grad_log[l * cells + c];
    }

    double density_at(std::size_t a, std::size_t b) const { return fit_->table[a * ny_ + b]; }
    double log_density_at(std::size_t a, std::size_t b) const { return fit_->log_table[a * ny_ + b]; }
    const Fit& fit() const noexcept { return *fit_; }

   private:
    std::size_t cell(std::span<const double> x, std::span<const double> y) const {
      return static_cast<std::size_t>(x[0]) * ny_ + static_cast<std::size_t>(y[0]);
    }
    std::shared_ptr<const Fit> fit_;
    std::size_t ny_;
    std::size_t dim_;
  };

  Evaluator at(const ParamPoint& theta) const {
    if (theta == truth_) return Evaluator(truth_fit_, ny(), domain_.dim());
    return Evaluator(std::make_shared<const Fit>(fit(theta)), ny(), domain_.dim());
  }

  /// sum_{a,b} mu[a] nu[b] p*(a, b) f(a, b), accumulated row-major with
  /// compensation.
  double exact_expectation(const std::function<double(std::size_t, std::size_t)>& f) const {
    numerics::CompensatedSum s;
    const auto& pstar = true_table();
    for (std::size_t a = 0; a < nx(); ++a) {
      for (std::size_t b = 0; b < ny(); ++b) s.add(mu_[a] * nu_[b] * pstar[a * ny() + b] * f(a, b));
    }
    return s.value();
  }

  /// Weighted sum over cells with the product measure mu x nu only.
  double product_sum(const std::function<double(std::size_t, std::size_t)>& f) const {
    numerics::CompensatedSum s;
    for (std::size_t a = 0; a < nx(); ++a) {
      for (std::size_t b = 0; b < ny(); ++b) s.add(mu_[a] * nu_[b] * f(a, b));
    }
    return s.value();
  }

  double l2_norm_sq_true() const {
    const auto& p = true_table();
    return product_sum([&](std::size_t a, std::size_t b) { return p[a * ny() + b] * p[a * ny() + b]; });
  }

  double l2_dist_sq_unchecked(const ParamPoint& theta) const {
    const Evaluator e = at(theta);
    const auto& p = true_table();
    return product_sum([&](std::size_t a, std::size_t b) {
      const double d = e.density_at(a, b) - p[a * ny() + b];
      return d * d;
    });
  }

  PairSample sample_pair(RandomStream& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t c = static_cast<std::size_t>(it - cdf_.begin());
    if (c >= cdf_.size()) c = cdf_.size() - 1;
    return PairSample{{static_cast<double>(c / ny())}, {static_cast<double>(c % ny())}};
  }

  /// Largest deviation of either family of marginal constraints from 1.
  double marginal_violation(std::span<const double> table) const {
    double worst = 0.0;
    for (std::size_t b = 0; b < ny(); ++b) {
      double s = 0.0;
      for (std::size_t a = 0; a < nx(); ++a) s += mu_[a] * table[a * ny() + b];
      worst = std::max(worst, std::abs(s - 1.0));
    }
    for (std::size_t a = 0; a < nx(); ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < ny(); ++b) s += nu_[b] * table[a * ny() + b];
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

 private:
  static void check_probability_vector(const std::vector<double>& p, const char* name) {
    if (p.empty()) throw Error(ErrorCode::InvalidSize, std::string(name) + " is empty");
    double s = 0.0;
    for (double v : p) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidSize, std::string(name) + " must be positive");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw Error(ErrorCode::InvalidSize, std::string(name) + " must sum to 1");
  }

  void build_sampler() {
    const auto& p = true_table();
    cdf_.resize(nx() * ny());
    double acc = 0.0;
    for (std::size_t a = 0; a < nx(); ++a) {
      for (std::size_t b = 0; b < ny(); ++b) {
        acc += mu_[a] * nu_[b] * p[a * ny() + b];
        cdf_[a * ny() + b] = acc;
      }
    }
    for (auto& v : cdf_) v /= acc;
  }

  std::vector<double> mu_;
  std::vector<double> nu_;
  std::vector<std::vector<double>> features_;
  ParamDomain domain_;
  ParamPoint truth_;
  std::shared_ptr<const Fit> truth_fit_;
  std::vector<double> cdf_;
};

/// The 3x3 model used by the limit-convergence study and the oracle checks.
inline DiscreteTabularModel default_discrete_model_3x3(double true_theta = 0.8) {
  return DiscreteTabularModel({0.2, 0.3, 0.5}, {0.25, 0.25, 0.5}, {{1.0, 0.0, -1.0, 0.0, 0.5, 0.0, -1.0, 0.0, 1.0}},
                              ParamDomain::interval(-2.0, 2.0), ParamPoint{true_theta});
}

/// 2x2 model with uniform marginals and feature [[1,-1],[-1,1]]:
/// p^theta(0,0) = 1 + tanh(theta).
inline DiscreteTabularModel default_discrete_model_2x2(double true_theta = std::atanh(0.5)) {
  return DiscreteTabularModel({0.5, 0.5}, {0.5, 0.5}, {{1.0, -1.0, -1.0, 1.0}}, ParamDomain::interval(-2.0, 2.0),
                              ParamPoint{true_theta});
}

}  // namespace bbs
