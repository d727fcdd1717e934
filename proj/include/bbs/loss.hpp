#pragma once

// Loss functionals for broken-sample estimation.
//
// Empirical losses take a Dataset of N batches of size M. Every loss is a
// symmetric function of each batch's xs and of its ys; none of them looks at
// which x was drawn with which y.
//
// Summation order is fixed: each batch is reduced with a compensated sum over
// (i outer, j inner), and batch totals are combined in batch-index order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bbs/core.hpp"
#include "bbs/models.hpp"
#include "bbs/numerics.hpp"
#include "bbs/permanent.hpp"

namespace bbs {

struct LossReport {
  double value = 0.0;
  std::optional<std::vector<double>> gradient;
  std::size_t eval_count = 0;
};

/// Densities below this are rejected wherever their logarithm would enter a
/// loss undamped.
inline constexpr double kMinDensity = 1e-300;

namespace detail {

inline const double kLogMinDensity = std::log(kMinDensity);

/// log(p/M + (M-1)/M) from lp = log p. At M = 1 this is lp itself.
inline double mixed_log(double lp, std::size_t m) {
  if (m == 1) return lp;
  return std::log1p(std::expm1(lp) / static_cast<double>(m));
}

/// p / (p + M - 1): the factor turning d log p into d mixed_log.
inline double mixed_weight(double lp, std::size_t m) {
  if (m == 1) return 1.0;
  return 1.0 / (1.0 + static_cast<double>(m - 1) * std::exp(-lp));
}

inline void check_log_density(double lp, std::size_t m) {
  if (std::isnan(lp) || (m == 1 && lp < kLogMinDensity)) {
    throw Error(ErrorCode::NonFiniteLoss, "density underflow or NaN inside the loss");
  }
}

inline double finish(const numerics::CompensatedSum& total, std::size_t n_batches) {
  const double v = -total.value() / static_cast<double>(n_batches);
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteLoss, "loss value is not finite");
  return v;
}

template <DensityModel Model>
void check_inputs(const Model& model, const ParamPoint& theta, const Dataset& data) {
  model.domain().require(theta);
  validate_dataset(data);
  const auto& b = data.batches.front();
  if (b.x_dim() != model.x_dim() || b.y_dim() != model.y_dim()) {
    throw Error(ErrorCode::InvalidSize, "dataset point dimensions do not match the model");
  }
}

/// sum_{i,j} log(p_ij/M + (M-1)/M) for one batch.
template <class Evaluator>
double batch_pseudo_sum(const Evaluator& eval, const BrokenBatch& b) {
  const std::size_t m = b.size();
  numerics::CompensatedSum s;
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = b.x(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double lp = eval.log_density(x, b.y(j));
      check_log_density(lp, m);
      s.add(mixed_log(lp, m));
    }
  }
  return s.value();
}

}  // namespace detail

/// Negative pseudo log-likelihood
///   f(theta) = -(1/N) sum_k sum_{i,j} log(p^theta(X_i^k, Y_j^k)/M + (M-1)/M).
template <DensityModel Model>
LossReport pseudo_loss(const Model& model, const ParamPoint& theta, const Dataset& data) {
  detail::check_inputs(model, theta, data);
  const auto eval = model.at(theta);
  numerics::CompensatedSum total;
  for (const auto& b : data.batches) total.add(detail::batch_pseudo_sum(eval, b));
  const std::size_t m = data.batch_size();
  return LossReport{detail::finish(total, data.num_batches()), std::nullopt, data.num_batches() * m * m};
}

/// Pseudo-loss together with its analytic gradient
///   d_l f = -(1/N) sum_k sum_{i,j} (d_l p_ij / M) / (p_ij/M + (M-1)/M).
template <DensityModel Model>
LossReport pseudo_loss_grad(const Model& model, const ParamPoint& theta, const Dataset& data) {
  detail::check_inputs(model, theta, data);
  const auto eval = model.at(theta);
  const std::size_t m = data.batch_size();
  const std::size_t d = model.domain().dim();
  numerics::CompensatedSum total;
  std::vector<numerics::CompensatedSum> grad_total(d);
  std::vector<double> g(d);
  std::vector<numerics::CompensatedSum> gb(d);
  for (const auto& b : data.batches) {
    numerics::CompensatedSum s;
    for (auto& acc : gb) acc = {};
    for (std::size_t i = 0; i < m; ++i) {
      const auto x = b.x(i);
      for (std::size_t j = 0; j < m; ++j) {
        const auto y = b.y(j);
        const double lp = eval.log_density(x, y);
        detail::check_log_density(lp, m);
        s.add(detail::mixed_log(lp, m));
        eval.grad_log_density(x, y, g);
        const double w = detail::mixed_weight(lp, m);
        for (std::size_t l = 0; l < d; ++l) gb[l].add(w * g[l]);
      }
    }
    total.add(s.value());
    for (std::size_t l = 0; l < d; ++l) grad_total[l].add(gb[l].value());
  }
  LossReport r{detail::finish(total, data.num_batches()), std::vector<double>(d), data.num_batches() * m * m};
  for (std::size_t l = 0; l < d; ++l) (*r.gradient)[l] = -grad_total[l].value() / static_cast<double>(data.num_batches());
  return r;
}

/// Mixture pseudo-likelihood
///   -(1/N) sum_k sum_j log((1/M) sum_i p^theta(X_i^k, Y_j^k)).
template <DensityModel Model>
LossReport mixture_pseudo_loss(const Model& model, const ParamPoint& theta, const Dataset& data) {
  detail::check_inputs(model, theta, data);
  const auto eval = model.at(theta);
  const std::size_t m = data.batch_size();
  const double log_m = std::log(static_cast<double>(m));
  std::vector<double> column(m);
  numerics::CompensatedSum total;
  for (const auto& b : data.batches) {
    numerics::CompensatedSum s;
    for (std::size_t j = 0; j < m; ++j) {
      const auto y = b.y(j);
      for (std::size_t i = 0; i < m; ++i) {
        column[i] = eval.log_density(b.x(i), y);
        if (std::isnan(column[i])) throw Error(ErrorCode::NonFiniteLoss, "density is NaN");
      }
      const double mix = numerics::log_sum_exp(column) - log_m;
      if (!(mix >= detail::kLogMinDensity)) throw Error(ErrorCode::NonFiniteLoss, "mixture density underflow");
      s.add(mix);
    }
    total.add(s.value());
  }
  return LossReport{detail::finish(total, data.num_batches()), std::nullopt, data.num_batches() * m * m};
}

/// Exact broken-sample negative log-likelihood
///   -(1/N) sum_k log(perm(A_k) / M!),  A_k[i][j] = p^theta(X_i^k, Y_j^k).
template <DensityModel Model>
LossReport full_nll_permanent(const Model& model, const ParamPoint& theta, const Dataset& data) {
  detail::check_inputs(model, theta, data);
  const std::size_t m = data.batch_size();
  if (m > kMaxPermanentSize) throw Error(ErrorCode::BatchTooLarge, "permanent evaluation is limited to M <= 12");
  const auto eval = model.at(theta);
  const double log_m_factorial = std::lgamma(static_cast<double>(m) + 1.0);
  std::vector<double> log_a(m * m);
  numerics::CompensatedSum total;
  for (const auto& b : data.batches) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        log_a[i * m + j] = eval.log_density(b.x(i), b.y(j));
        if (std::isnan(log_a[i * m + j])) throw Error(ErrorCode::NonFiniteLoss, "density is NaN");
      }
    }
    numerics::CompensatedSum s;
    s.add(log_permanent_of_exp(log_a, m) - log_m_factorial);
    total.add(s.value());
  }
  return LossReport{detail::finish(total, data.num_batches()), std::nullopt, data.num_batches() * m * m};
}

/// M -> infinity limit of the expected pseudo-loss:
///   (||p^theta - p*||^2 - ||p*||^2 + 1) / 2.
template <DensityModel Model>
double limit_loss(const Model& model, const ParamPoint& theta) {
  return 0.5 * (l2_dist_sq(model, theta) - l2_norm_sq_true(model) + 1.0);
}

/// E f_M(theta) on a finite alphabet, via the single-pair reduction
///   E f = -M^2 sum_{a,b} mu nu log(1 + (p^theta - 1)/M) (p*/M + (M-1)/M).
/// At M = 1 this is the expected negative log-likelihood.
inline double expected_loss_exact(const DiscreteTabularModel& model, const ParamPoint& theta, std::size_t m) {
  model.domain().require(theta);
  if (m == 0) throw Error(ErrorCode::InvalidSize, "batch size must be positive");
  const auto eval = model.at(theta);
  const auto& pstar = model.true_table();
  const double md = static_cast<double>(m);
  const double sum = model.product_sum([&](std::size_t a, std::size_t b) {
    const double weight = pstar[a * model.ny() + b] / md + (md - 1.0) / md;
    return detail::mixed_log(eval.log_density_at(a, b), m) * weight;
  });
  return -md * md * sum;
}

/// Largest number of M-tuples expected_loss_bruteforce will enumerate.
inline constexpr std::uint64_t kMaxBruteForceStates = 1000000;

/// E f_M(theta) by enumerating every batch of M cells, weighting each by its
/// probability under pi^M and evaluating the single-batch pseudo-loss on it.
inline double expected_loss_bruteforce(const DiscreteTabularModel& model, const ParamPoint& theta, std::size_t m) {
  model.domain().require(theta);
  if (m == 0) throw Error(ErrorCode::InvalidSize, "batch size must be positive");
  const std::size_t cells = model.nx() * model.ny();
  std::uint64_t states = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (states > kMaxBruteForceStates / cells) throw Error(ErrorCode::StateSpaceTooLarge, "(nx*ny)^M exceeds 1e6");
    states *= cells;
  }
  const auto eval = model.at(theta);
  const auto& pstar = model.true_table();
  std::vector<double> cell_prob(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    cell_prob[c] = model.mu()[c / model.ny()] * model.nu()[c % model.ny()] * pstar[c];
  }
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> xs(m), ys(m);
  numerics::CompensatedSum expectation;
  for (std::uint64_t s = 0; s < states; ++s) {
    double prob = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      prob *= cell_prob[idx[i]];
      xs[i] = static_cast<double>(idx[i] / model.ny());
      ys[i] = static_cast<double>(idx[i] % model.ny());
    }
    const BrokenBatch batch(1, 1, xs, ys);
    expectation.add(-prob * detail::batch_pseudo_sum(eval, batch));
    for (std::size_t i = 0; i < m; ++i) {
      if (++idx[i] < cells) break;
      idx[i] = 0;
    }
  }
  return expectation.value();
}

/// KL((p*/M + (M-1)/M) mu x nu || (p^theta/M + (M-1)/M) mu x nu).
inline double mixture_kl(const DiscreteTabularModel& model, const ParamPoint& theta, std::size_t m) {
  model.domain().require(theta);
  if (m == 0) throw Error(ErrorCode::InvalidSize, "batch size must be positive");
  const auto eval = model.at(theta);
  const auto truth = model.at(model.true_param());
  return model.product_sum([&](std::size_t a, std::size_t b) {
    const double log_star = detail::mixed_log(truth.log_density_at(a, b), m);
    const double log_theta = detail::mixed_log(eval.log_density_at(a, b), m);
    return std::exp(log_star) * (log_star - log_theta);
  });
}

}  // namespace bbs
