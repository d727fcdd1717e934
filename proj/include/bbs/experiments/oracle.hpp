#pragma once

// Cross-checks between independent computations of the same quantity.
// Each check reports its worst deviation against a fixed tolerance.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bbs/experiments/csv.hpp"
#include "bbs/experiments/parallel.hpp"
#include "bbs/experiments/runner.hpp"
#include "bbs/loss.hpp"
#include "bbs/numerics.hpp"
#include "bbs/optimize.hpp"
#include "bbs/sampling.hpp"

namespace bbs::experiments {

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct OracleReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

using ExactLossFn = std::function<double(const DiscreteTabularModel&, const ParamPoint&, std::size_t)>;

struct OracleOptions {
  SeedSpec seed{2024};
  std::size_t threads = 1;
  /// Implementation of the exact expected loss under test.
  ExactLossFn exact_loss = [](const DiscreteTabularModel& m, const ParamPoint& t, std::size_t mm) {
    return expected_loss_exact(m, t, mm);
  };
};

namespace tolerance {
inline constexpr double kExactVsBruteForce = 1e-12;
inline constexpr double kLimitDecayRatio = 0.25;
inline constexpr double kLimitSlopeLo = -1.5;
inline constexpr double kLimitSlopeHi = -0.7;
inline constexpr double kKlIdentity = 1e-10;
inline constexpr double kGradientRel = 1e-6;
inline constexpr double kGradientStep = 1e-5;
inline constexpr double kPermutationRel = 1e-10;
inline constexpr double kQuadrature = 1e-6;
inline constexpr double kSpotValue = 1e-12;
inline constexpr double kTorusInnerProduct = 1e-8;
}  // namespace tolerance

namespace oracle {

inline CheckResult make(std::string name, double dev, double tol) {
  return CheckResult{std::move(name), dev, tol, dev <= tol};
}

inline const std::vector<double> kOracleThetas{-1.5, -0.4, 0.3, 0.8, 1.7};

inline CheckResult exact_vs_bruteforce(const ExactLossFn& exact) {
  double dev = 0.0;
  for (const auto& m : {default_discrete_model_2x2(), default_discrete_model_3x3()}) {
    for (std::size_t mm : {2, 3}) {
      for (double t : kOracleThetas) {
        const ParamPoint p{t};
        dev = std::max(dev, std::abs(exact(m, p, mm) - expected_loss_bruteforce(m, p, mm)));
      }
    }
  }
  return make("exact_vs_bruteforce", dev, tolerance::kExactVsBruteForce);
}

/// |E f_64 - limit| / |E f_8 - limit|, worst over the theta grid.
inline CheckResult limit_decay_ratio(const ExactLossFn& exact) {
  const auto m = default_discrete_model_3x3();
  double worst = 0.0;
  for (double t : kDefaultLimitTheta) {
    const ParamPoint p{t};
    const double lim = limit_loss(m, p);
    worst = std::max(worst, std::abs(exact(m, p, 64) - lim) / std::abs(exact(m, p, 8) - lim));
  }
  return make("limit_decay_ratio", worst, tolerance::kLimitDecayRatio);
}

/// Distance of the fitted log-log slopes from [-1.5, -0.7]; 0 when inside.
inline CheckResult limit_decay_slope(const ExactLossFn& exact) {
  const auto m = default_discrete_model_3x3();
  double worst = 0.0;
  for (double t : kDefaultLimitTheta) {
    const ParamPoint p{t};
    const double lim = limit_loss(m, p);
    std::vector<double> lx, ly;
    for (std::size_t mm : kDefaultLimitM) {
      lx.push_back(std::log(static_cast<double>(mm)));
      ly.push_back(std::log(std::abs(exact(m, p, mm) - lim)));
    }
    const double s = numerics::ols_slope(lx, ly);
    const double outside = std::isfinite(s) ? std::max({0.0, s - tolerance::kLimitSlopeHi, tolerance::kLimitSlopeLo - s})
                                            : std::numeric_limits<double>::infinity();
    worst = std::max(worst, outside);
  }
  return make("limit_decay_slope", worst, 0.0);
}

inline CheckResult kl_identity(const ExactLossFn& exact) {
  double dev = 0.0;
  const std::vector<std::pair<double, double>> pairs{{-1.0, 0.9}, {0.3, 1.6}, {-0.4, 0.8}};
  for (const auto& m : {default_discrete_model_2x2(), default_discrete_model_3x3()}) {
    for (std::size_t mm : {2, 3, 5}) {
      const double md = static_cast<double>(mm);
      for (const auto& [a, b] : pairs) {
        const ParamPoint ta{a}, tb{b};
        const double lhs = exact(m, ta, mm) - exact(m, tb, mm);
        const double rhs = md * md * (mixture_kl(m, ta, mm) - mixture_kl(m, tb, mm));
        dev = std::max(dev, std::abs(lhs - rhs));
      }
    }
  }
  return make("kl_identity", dev, tolerance::kKlIdentity);
}

/// Relative gap between the analytic gradient and central differences at 10
/// random interior points on a fixed M = 10, N = 5 dataset. The denominator
/// is floored at 1e-3 so a gradient that happens to vanish is not divided by
/// a rounding-sized number.
template <class Model>
double gradient_gap(const Model& model, RandomStream& rng) {
  const Dataset d = break_batches(generate_dataset(model, 10, 5, rng), rng);
  const double lo = model.domain().lower()[0] + 0.01;
  const double hi = model.domain().upper()[0] - 0.01;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const ParamPoint t{lo + (hi - lo) * rng.uniform()};
    const double g = (*pseudo_loss_grad(model, t, d).gradient)[0];
    const double fd = finite_diff_grad([&](const ParamPoint& p) { return pseudo_loss(model, p, d).value; },
                                       model.domain(), t, tolerance::kGradientStep)[0];
    worst = std::max(worst, std::abs(g - fd) / std::max(std::abs(fd), 1e-3));
  }
  return worst;
}

inline CheckResult gradient_vs_fd(const SeedSpec& seed) {
  RandomStream a = seed.stream(0, 101), b = seed.stream(0, 102);
  const double dev = std::max(gradient_gap(TorusWrappedGaussianModel(0.1), a),
                              gradient_gap(BivariateNormalRatioModel(-0.5), b));
  return make("gradient_vs_finite_difference", dev, tolerance::kGradientRel);
}

inline Dataset shuffle_within_batches(const Dataset& d, RandomStream& rng) {
  Dataset out;
  for (const auto& b : d.batches) {
    out.batches.emplace_back(b.x_dim(), b.y_dim(),
                             permute_points(b.xs_flat(), b.x_dim(), random_permutation(b.size(), rng)),
                             permute_points(b.ys_flat(), b.y_dim(), random_permutation(b.size(), rng)));
  }
  return out;
}

template <class Model>
double permutation_gap(const Model& model, const ParamPoint& theta, RandomStream& rng) {
  const Dataset d = break_batches(generate_dataset(model, 8, 4, rng), rng);
  const double p = pseudo_loss(model, theta, d).value;
  const double x = mixture_pseudo_loss(model, theta, d).value;
  const double f = full_nll_permanent(model, theta, d).value;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    const Dataset s = shuffle_within_batches(d, rng);
    worst = std::max({worst, rel(pseudo_loss(model, theta, s).value, p),
                      rel(mixture_pseudo_loss(model, theta, s).value, x),
                      rel(full_nll_permanent(model, theta, s).value, f)});
  }
  return worst;
}

inline CheckResult permutation_invariance(const SeedSpec& seed) {
  RandomStream a = seed.stream(0, 201), b = seed.stream(0, 202);
  const double dev = std::max(permutation_gap(TorusWrappedGaussianModel(0.1), ParamPoint{0.12}, a),
                              permutation_gap(BivariateNormalRatioModel(-0.5), ParamPoint{-0.4}, b));
  return make("permutation_invariance", dev, tolerance::kPermutationRel);
}

/// Largest |difference| among the three losses on singleton batches; the
/// required value is exactly 0.
inline CheckResult singleton_collapse(const SeedSpec& seed) {
  double dev = 0.0;
  const TorusWrappedGaussianModel torus(0.1);
  const BivariateNormalRatioModel biv(0.3);
  for (std::uint64_t s = 0; s < 100; ++s) {
    RandomStream rng = seed.stream(s, 301);
    auto check = [&](const auto& model, const ParamPoint& t, std::size_t n) {
      const Dataset d = generate_dataset(model, 1, n, rng);
      const double p = pseudo_loss(model, t, d).value;
      dev = std::max({dev, std::abs(p - mixture_pseudo_loss(model, t, d).value),
                      std::abs(p - full_nll_permanent(model, t, d).value)});
    };
    if (s % 2 == 0) {
      check(torus, ParamPoint{0.05 + 0.004 * static_cast<double>(s)}, 1 + s % 9);
    } else {
      check(biv, ParamPoint{-0.9 + 0.018 * static_cast<double>(s)}, 1 + s % 5);
    }
  }
  return make("singleton_collapse", dev, 0.0);
}

/// Bivariate closed forms against 60 x 60 Gauss-Hermite quadrature.
inline CheckResult bivariate_quadrature() {
  const auto rule = numerics::gauss_hermite_normal(60);
  const std::vector<double> rhos{-0.8, -0.5, 0.0, 0.3, 0.7};
  double dev = 0.0;
  for (double star : rhos) {
    const BivariateNormalRatioModel m(star);
    const auto es = m.at(m.true_param());
    double norm = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double x[1] = {rule.nodes[i]}, y[1] = {rule.nodes[j]};
        norm += rule.weights[i] * rule.weights[j] * std::exp(2.0 * es.log_density(x, y));
      }
    }
    dev = std::max(dev, std::abs(norm - m.l2_norm_sq_true()));
    for (double rho : rhos) {
      const auto e = m.at(ParamPoint{rho});
      double dist = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
          const double x[1] = {rule.nodes[i]}, y[1] = {rule.nodes[j]};
          const double diff = std::exp(e.log_density(x, y)) - std::exp(es.log_density(x, y));
          dist += rule.weights[i] * rule.weights[j] * diff * diff;
        }
      }
      dev = std::max(dev, std::abs(dist - m.l2_dist_sq_unchecked(ParamPoint{rho})));
    }
  }
  return make("bivariate_closed_form_vs_quadrature", dev, tolerance::kQuadrature);
}

inline CheckResult bivariate_spot_values() {
  const BivariateNormalRatioModel m(-0.5);
  const double dev = std::max(std::abs(m.l2_norm_sq_true() - 4.0 / 3.0),
                              std::abs(m.l2_dist_sq_unchecked(ParamPoint{0.0}) - 1.0 / 3.0));
  return make("bivariate_spot_values", dev, tolerance::kSpotValue);
}

/// <p^a, p^b> from the convolution identity against a 512 x 512 trapezoid
/// rule over the offset x - y on the torus.
inline CheckResult torus_inner_product() {
  constexpr int kGrid = 512;
  const std::vector<double> sig{0.05, 0.1, 0.2};
  const TorusWrappedGaussianModel model(0.1);
  const double zero[2] = {0.0, 0.0};
  double dev = 0.0;
  for (double a : sig) {
    for (double b : sig) {
      const auto ea = model.at(ParamPoint{a});
      const auto eb = model.at(ParamPoint{b});
      numerics::CompensatedSum s;
      for (int i = 0; i < kGrid; ++i) {
        for (int j = 0; j < kGrid; ++j) {
          const double z[2] = {static_cast<double>(i) / kGrid, static_cast<double>(j) / kGrid};
          s.add(std::exp(ea.log_density(zero, z) + eb.log_density(zero, z)));
        }
      }
      const double quad = s.value() / (static_cast<double>(kGrid) * kGrid);
      dev = std::max(dev, std::abs(quad - TorusWrappedGaussianModel::inner_product(a, b)));
    }
  }
  return make("torus_inner_product_vs_quadrature", dev, tolerance::kTorusInnerProduct);
}

}  // namespace oracle

/// Runs every check. Checks are independent and run on the worker pool;
/// the report lists them in a fixed order.
inline OracleReport run_oracle_checks(const OracleOptions& opts = {}) {
  const std::vector<std::function<CheckResult()>> checks{
      [&] { return oracle::exact_vs_bruteforce(opts.exact_loss); },
      [&] { return oracle::limit_decay_ratio(opts.exact_loss); },
      [&] { return oracle::limit_decay_slope(opts.exact_loss); },
      [&] { return oracle::kl_identity(opts.exact_loss); },
      [&] { return oracle::gradient_vs_fd(opts.seed); },
      [&] { return oracle::permutation_invariance(opts.seed); },
      [&] { return oracle::singleton_collapse(opts.seed); },
      [&] { return oracle::bivariate_quadrature(); },
      [&] { return oracle::bivariate_spot_values(); },
      [&] { return oracle::torus_inner_product(); },
  };
  OracleReport report;
  report.checks.resize(checks.size());
  parallel_for(checks.size(), opts.threads, [&](std::size_t i) { report.checks[i] = checks[i](); });
  return report;
}

inline void write_oracle_report(const OracleReport& r, const std::filesystem::path& dir) {
  CsvWriter w({"check", "max_deviation", "tolerance", "passed"});
  for (const auto& c : r.checks) {
    w.field(c.name).field(c.max_deviation).field(c.tolerance).field(c.passed);
    w.end_row();
  }
  w.save(dir / "oracle_checks.csv");
}

}  // namespace bbs::experiments
