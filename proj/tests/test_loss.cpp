#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bbs/loss.hpp"
#include "bbs/models.hpp"
#include "bbs/optimize.hpp"
#include "bbs/sampling.hpp"
#include "test_helpers.hpp"

using namespace bbs;
using bbs::check::rel_err;

namespace {

/// Density given directly as a table over integer coordinates; theta is
/// ignored. Lets the hand-computed examples be written down literally.
struct TableModel {
  std::vector<std::vector<double>> table;
  ParamDomain dom = ParamDomain::interval(-1.0, 1.0);

  const ParamDomain& domain() const { return dom; }
  std::size_t x_dim() const { return 1; }
  std::size_t y_dim() const { return 1; }

  struct Evaluator {
    const TableModel* m;
    double log_density(std::span<const double> x, std::span<const double> y) const {
      return std::log(m->table[std::size_t(x[0])][std::size_t(y[0])]);
    }
    void grad_log_density(std::span<const double>, std::span<const double>, std::span<double> out) const {
      out[0] = 0.0;
    }
  };
  Evaluator at(const ParamPoint&) const { return Evaluator{this}; }
};
static_assert(DensityModel<TableModel>);
static_assert(!ClosedFormGeometry<TableModel>);
static_assert(GenerativeModel<TorusWrappedGaussianModel>);
static_assert(ClosedFormGeometry<BivariateNormalRatioModel>);
static_assert(ClosedFormGeometry<DiscreteTabularModel>);

const Dataset kIndexBatch{{BrokenBatch(1, 1, {0, 1}, {0, 1})}};
const TableModel kHandTable{{{2.0, 0.5}, {1.5, 1.0}}};

Dataset shuffled(const Dataset& d, RandomStream& rng) {
  Dataset out;
  for (const auto& b : d.batches) {
    out.batches.emplace_back(b.x_dim(), b.y_dim(),
                             permute_points(b.xs_flat(), b.x_dim(), random_permutation(b.size(), rng)),
                             permute_points(b.ys_flat(), b.y_dim(), random_permutation(b.size(), rng)));
  }
  return out;
}

}  // namespace

// ---- hand-evaluated examples ----------------------------------------------

TEST(PseudoLoss, HandTableM2) {
  // -(log 1.5 + log 0.75 + log 1.25 + log 1)
  EXPECT_NEAR(pseudo_loss(kHandTable, ParamPoint{0.0}, kIndexBatch).value, -0.34092658697059325, 1e-15);
}

TEST(MixturePseudoLoss, HandTableM2) {
  // -(log 1.75 + log 0.75)
  EXPECT_NEAR(mixture_pseudo_loss(kHandTable, ParamPoint{0.0}, kIndexBatch).value, -0.27193371548364176, 1e-15);
}

TEST(FullNllPermanent, HandTableM2) {
  // -log((2*1 + 0.5*1.5) / 2!)
  EXPECT_NEAR(full_nll_permanent(kHandTable, ParamPoint{0.0}, kIndexBatch).value, -0.3184537311185346, 1e-15);
}

TEST(PseudoLoss, SingletonIsNegativeLogDensity) {
  const TableModel m{{{3.0}}};
  const Dataset d{{BrokenBatch(1, 1, {0}, {0})}};
  EXPECT_DOUBLE_EQ(pseudo_loss(m, ParamPoint{0.0}, d).value, -std::log(3.0));
  const TableModel one{{{1.0}}};
  EXPECT_EQ(pseudo_loss(one, ParamPoint{0.0}, d).value, 0.0);
}

TEST(PseudoLoss, IndependenceParameterGivesZero) {
  const BivariateNormalRatioModel m(-0.5);
  RandomStream rng(4);
  for (std::size_t mm : {1, 2, 7, 30}) {
    const Dataset d = generate_dataset(m, mm, 5, rng);
    EXPECT_EQ(pseudo_loss(m, ParamPoint{0.0}, d).value, 0.0);
    EXPECT_EQ(mixture_pseudo_loss(m, ParamPoint{0.0}, d).value, 0.0);
  }
}

TEST(PseudoLoss, ReportsEvalCount) {
  const BivariateNormalRatioModel m(-0.5);
  RandomStream rng(4);
  const Dataset d = generate_dataset(m, 6, 3, rng);
  EXPECT_EQ(pseudo_loss(m, ParamPoint{0.1}, d).eval_count, 108u);
}

TEST(PseudoLoss, Errors) {
  const BivariateNormalRatioModel m(-0.5);
  RandomStream rng(4);
  const Dataset d = generate_dataset(m, 3, 2, rng);
  try {
    pseudo_loss(m, ParamPoint{0.99}, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamOutOfDomain);
  }
  const TableModel tiny{{{1e-305}}};
  const Dataset one{{BrokenBatch(1, 1, {0}, {0})}};
  try {
    pseudo_loss(tiny, ParamPoint{0.0}, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
  // Torus points fed to a 1-d model.
  const Dataset wrong = generate_dataset(TorusWrappedGaussianModel(0.1), 2, 2, rng);
  EXPECT_THROW(pseudo_loss(m, ParamPoint{0.0}, wrong), Error);
}

TEST(PseudoLoss, SmallSigmaStaysFiniteForLargeBatches) {
  // Far-apart pairs underflow p, which is harmless once M >= 2.
  const TorusWrappedGaussianModel m(0.01, ParamDomain::interval(0.005, 0.5), 8);
  RandomStream rng(4);
  const Dataset d = generate_dataset(m, 20, 3, rng);
  EXPECT_TRUE(std::isfinite(pseudo_loss(m, ParamPoint{0.005}, d).value));
}

// ---- gradient -------------------------------------------------------------

TEST(PseudoLossGrad, AtIndependenceReducesToMeanDerivative) {
  const BivariateNormalRatioModel m(-0.5);
  RandomStream rng(21);
  const Dataset d = generate_dataset(m, 6, 4, rng);
  // d p / d rho at rho = 0 is x * y, and the denominator is exactly 1.
  double s = 0.0;
  for (const auto& b : d.batches) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) s += b.x(i)[0] * b.y(j)[0];
    }
  }
  const double expected = -s / (4.0 * 6.0);
  EXPECT_NEAR((*pseudo_loss_grad(m, ParamPoint{0.0}, d).gradient)[0], expected, 1e-13);
}

TEST(PseudoLossGrad, SingletonIsNllGradient) {
  const TorusWrappedGaussianModel m(0.1);
  RandomStream rng(22);
  const Dataset d = generate_dataset(m, 1, 7, rng);
  const ParamPoint t{0.13};
  const auto e = m.at(t);
  double s = 0.0;
  std::vector<double> g(1);
  for (const auto& b : d.batches) {
    e.grad_log_density(b.x(0), b.y(0), g);
    s += g[0];
  }
  EXPECT_NEAR((*pseudo_loss_grad(m, t, d).gradient)[0], -s / 7.0, 1e-12);
}

template <class Model>
void check_gradient_against_fd(const Model& m, double lo, double hi, std::uint64_t seed) {
  RandomStream rng(seed);
  const Dataset d = generate_dataset(m, 10, 5, rng);
  for (int t = 0; t < 10; ++t) {
    const ParamPoint theta{lo + (hi - lo) * rng.uniform()};
    const auto rep = pseudo_loss_grad(m, theta, d);
    const auto fd = finite_diff_grad([&](const ParamPoint& p) { return pseudo_loss(m, p, d).value; }, m.domain(),
                                     theta, 1e-5);
    EXPECT_NEAR(rep.value, pseudo_loss(m, theta, d).value, 0.0);
    EXPECT_LT(rel_err((*rep.gradient)[0], fd[0], 1e-3), 1e-6) << "theta=" << theta[0];
  }
}

TEST(PseudoLossGrad, MatchesFiniteDifferencesTorus) {
  check_gradient_against_fd(TorusWrappedGaussianModel(0.1), 0.03, 0.49, 1);
}

TEST(PseudoLossGrad, MatchesFiniteDifferencesBivariate) {
  check_gradient_against_fd(BivariateNormalRatioModel(-0.5), -0.94, 0.94, 2);
}

TEST(PseudoLossGrad, MatchesFiniteDifferencesDiscrete) {
  check_gradient_against_fd(default_discrete_model_3x3(), -1.9, 1.9, 3);
}

// ---- invariances ----------------------------------------------------------

TEST(Losses, InvariantUnderWithinBatchShuffles) {
  const TorusWrappedGaussianModel torus(0.1);
  const BivariateNormalRatioModel biv(-0.5);
  RandomStream rng(77);
  const Dataset dt = generate_dataset(torus, 8, 4, rng);
  const Dataset db = generate_dataset(biv, 8, 4, rng);
  const ParamPoint st{0.12}, sb{-0.4};
  const double pt = pseudo_loss(torus, st, dt).value, mt = mixture_pseudo_loss(torus, st, dt).value,
               ft = full_nll_permanent(torus, st, dt).value;
  const double pb = pseudo_loss(biv, sb, db).value, mb = mixture_pseudo_loss(biv, sb, db).value,
               fb = full_nll_permanent(biv, sb, db).value;
  for (int r = 0; r < 20; ++r) {
    const Dataset t2 = shuffled(dt, rng), b2 = shuffled(db, rng);
    EXPECT_LT(rel_err(pseudo_loss(torus, st, t2).value, pt), 1e-10);
    EXPECT_LT(rel_err(mixture_pseudo_loss(torus, st, t2).value, mt), 1e-10);
    EXPECT_LT(rel_err(full_nll_permanent(torus, st, t2).value, ft), 1e-10);
    EXPECT_LT(rel_err(pseudo_loss(biv, sb, b2).value, pb), 1e-10);
    EXPECT_LT(rel_err(mixture_pseudo_loss(biv, sb, b2).value, mb), 1e-10);
    EXPECT_LT(rel_err(full_nll_permanent(biv, sb, b2).value, fb), 1e-10);
  }
}

TEST(Losses, SingletonBatchesCollapseBitExactly) {
  const TorusWrappedGaussianModel torus(0.1);
  const BivariateNormalRatioModel biv(0.3);
  for (std::uint64_t s = 0; s < 50; ++s) {
    RandomStream rng(SeedSpec{s}.derive(0));
    const Dataset dt = generate_dataset(torus, 1, 1 + s % 9, rng);
    const ParamPoint t{0.05 + 0.009 * s};
    const double a = pseudo_loss(torus, t, dt).value;
    EXPECT_EQ(a, mixture_pseudo_loss(torus, t, dt).value);
    EXPECT_EQ(a, full_nll_permanent(torus, t, dt).value);
    const Dataset db = generate_dataset(biv, 1, 1 + s % 5, rng);
    const ParamPoint r{-0.9 + 0.036 * s};
    const double b = pseudo_loss(biv, r, db).value;
    EXPECT_EQ(b, mixture_pseudo_loss(biv, r, db).value);
    EXPECT_EQ(b, full_nll_permanent(biv, r, db).value);
  }
}

// ---- permanent ------------------------------------------------------------

TEST(Permanent, SmallMatrices) {
  EXPECT_DOUBLE_EQ(permanent(std::vector<double>{2.0, 0.5, 1.5, 1.0}, 2), 2.75);
  // perm of the all-ones n x n matrix is n!
  for (std::size_t n = 1; n <= 8; ++n) {
    const std::vector<double> ones(n * n, 1.0);
    EXPECT_NEAR(permanent(ones, n), std::tgamma(double(n) + 1.0), 1e-9 * std::tgamma(double(n) + 1.0));
  }
  // 3x3 against the six-term expansion.
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 10};
  const double brute = 1 * 5 * 10 + 1 * 6 * 8 + 2 * 4 * 10 + 2 * 6 * 7 + 3 * 4 * 8 + 3 * 5 * 7;
  EXPECT_DOUBLE_EQ(permanent(a, 3), brute);
}

TEST(Permanent, RyserMatchesPermutationSumOnRandomMatrices) {
  RandomStream rng(55);
  for (std::size_t n = 1; n <= 7; ++n) {
    std::vector<double> a(n * n);
    for (auto& v : a) v = rng.uniform() * 2.0;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    double brute = 0.0;
    do {
      double prod = 1.0;
      for (std::size_t i = 0; i < n; ++i) prod *= a[i * n + perm[i]];
      brute += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_LT(rel_err(permanent(a, n), brute), 1e-12) << "n=" << n;
  }
}

TEST(FullNllPermanent, UnitDensityGivesZero) {
  const BivariateNormalRatioModel m(-0.5);
  RandomStream rng(9);
  for (std::size_t mm : {1, 4, 12}) {
    const Dataset d = generate_dataset(m, mm, 2, rng);
    EXPECT_NEAR(full_nll_permanent(m, ParamPoint{0.0}, d).value, 0.0, 1e-12);
  }
}

TEST(FullNllPermanent, RejectsLargeBatches) {
  const BivariateNormalRatioModel m(-0.5);
  RandomStream rng(9);
  const Dataset d = generate_dataset(m, 13, 1, rng);
  try {
    full_nll_permanent(m, ParamPoint{0.0}, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BatchTooLarge);
  }
}

// ---- population quantities ------------------------------------------------

TEST(LimitLoss, BivariateValues) {
  const BivariateNormalRatioModel m(-0.5);
  EXPECT_NEAR(limit_loss(m, ParamPoint{-0.5}), -1.0 / 6.0, 1e-15);
  EXPECT_NEAR(limit_loss(m, ParamPoint{0.0}), 0.0, 1e-15);
}

TEST(LimitLoss, TorusAtTruth) {
  const TorusWrappedGaussianModel m(0.1);
  EXPECT_NEAR(limit_loss(m, ParamPoint{0.1}), 0.5 * (1.0 - TorusWrappedGaussianModel::inner_product(0.1, 0.1)),
              1e-14);
}

TEST(LimitLoss, NeedsClosedForm) {
  try {
    limit_loss(kHandTable, ParamPoint{0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoClosedForm);
  }
}

TEST(ExpectedLoss, IndependenceGivesZero) {
  const auto m = default_discrete_model_3x3();
  for (std::size_t mm : {1, 2, 5}) {
    EXPECT_NEAR(expected_loss_exact(m, ParamPoint{0.0}, mm), 0.0, 1e-13);
    EXPECT_NEAR(expected_loss_bruteforce(m, ParamPoint{0.0}, std::min<std::size_t>(mm, 3)), 0.0, 1e-13);
  }
}

TEST(ExpectedLoss, TruthIsTheStrictMinimizer) {
  const auto m = default_discrete_model_3x3();
  for (std::size_t mm : {1, 2, 8, 64}) {
    const double at_truth = expected_loss_exact(m, m.true_param(), mm);
    for (double t : {-2.0, -1.0, 0.0, 0.5, 0.79, 0.81, 1.2, 2.0}) {
      EXPECT_LT(at_truth, expected_loss_exact(m, ParamPoint{t}, mm)) << "M=" << mm << " theta=" << t;
    }
  }
}

TEST(ExpectedLoss, ExactMatchesBruteForceTwoByTwo) {
  const auto m = default_discrete_model_2x2();
  const ParamPoint theta{std::atanh(0.2)};  // p^theta = [[1.2, 0.8], [0.8, 1.2]]
  EXPECT_NEAR(expected_loss_exact(m, theta, 2), expected_loss_bruteforce(m, theta, 2), 1e-12);
}

TEST(ExpectedLoss, ExactMatchesBruteForceGrid) {
  for (const auto& m : {default_discrete_model_2x2(), default_discrete_model_3x3()}) {
    for (std::size_t mm : {1, 2, 3}) {
      for (double t : {-1.5, -0.4, 0.3, 0.8, 1.7}) {
        EXPECT_NEAR(expected_loss_exact(m, ParamPoint{t}, mm), expected_loss_bruteforce(m, ParamPoint{t}, mm), 1e-12);
      }
    }
  }
}

TEST(ExpectedLoss, SingletonIsExpectedNll) {
  const auto m = default_discrete_model_3x3();
  const ParamPoint t{-0.6};
  const auto e = m.at(t);
  const double nll = -exact_expectation(m, [&](std::size_t a, std::size_t b) { return e.log_density_at(a, b); });
  EXPECT_NEAR(expected_loss_bruteforce(m, t, 1), nll, 1e-14);
  EXPECT_NEAR(expected_loss_exact(m, t, 1), nll, 1e-14);
}

TEST(ExpectedLoss, BruteForceGate) {
  const auto m = default_discrete_model_3x3();
  EXPECT_NO_THROW(expected_loss_bruteforce(m, ParamPoint{0.1}, 6));  // 9^6 = 531441
  try {
    expected_loss_bruteforce(m, ParamPoint{0.1}, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateSpaceTooLarge);
  }
}

TEST(ExpectedLoss, MonteCarloMeanAgrees) {
  // Averaging pseudo_loss over simulated datasets approaches the exact value.
  const auto m = default_discrete_model_3x3();
  const ParamPoint t{0.2};
  RandomStream rng(8);
  const Dataset d = generate_dataset(m, 4, 20000, rng);
  const double mc = pseudo_loss(m, t, d).value;
  EXPECT_NEAR(mc, expected_loss_exact(m, t, 4), 0.01);
}

TEST(LimitLoss, DiscreteErrorDecaysLikeOneOverM) {
  const auto m = default_discrete_model_3x3();
  for (double t : {-1.0, -0.4, 0.2, 0.8, 1.2}) {
    const ParamPoint theta{t};
    const double lim = limit_loss(m, theta);
    const double e8 = std::abs(expected_loss_exact(m, theta, 8) - lim);
    const double e64 = std::abs(expected_loss_exact(m, theta, 64) - lim);
    EXPECT_LE(e64, e8 / 4.0) << "theta=" << t;
  }
}

TEST(MixtureKl, ZeroAtTruthAndNonNegative) {
  const auto m = default_discrete_model_3x3();
  for (std::size_t mm : {1, 2, 5, 50}) {
    EXPECT_NEAR(mixture_kl(m, m.true_param(), mm), 0.0, 1e-16);
    for (double t : {-2.0, -0.5, 0.0, 1.0, 2.0}) EXPECT_GE(mixture_kl(m, ParamPoint{t}, mm), 0.0);
  }
}

TEST(MixtureKl, DifferencesMatchExpectedLoss) {
  for (const auto& m : {default_discrete_model_2x2(), default_discrete_model_3x3()}) {
    for (std::size_t mm : {2, 3, 5}) {
      const double md = double(mm);
      for (double a : {-1.0, 0.3}) {
        for (double b : {0.9, 1.6}) {
          const ParamPoint ta{a}, tb{b};
          const double lhs = expected_loss_exact(m, ta, mm) - expected_loss_exact(m, tb, mm);
          const double rhs = md * md * (mixture_kl(m, ta, mm) - mixture_kl(m, tb, mm));
          EXPECT_NEAR(lhs, rhs, 1e-10);
        }
      }
    }
  }
}

// ---- concentration --------------------------------------------------------

namespace {

double sd_of_loss(std::size_t m, std::size_t n, int replicates, std::uint64_t seed) {
  const TorusWrappedGaussianModel model(0.1);
  const SeedSpec s{seed};
  std::vector<double> v;
  for (int r = 0; r < replicates; ++r) {
    auto rng = s.stream(static_cast<std::uint64_t>(r), m * 1000 + n);
    v.push_back(pseudo_loss(model, ParamPoint{0.1}, generate_dataset(model, m, n, rng)).value);
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

TEST(Concentration, StandardDeviationShrinksWithNAndIsStableInM) {
  const double sd20 = sd_of_loss(5, 20, 200, 1);
  const double sd80 = sd_of_loss(5, 80, 200, 1);
  EXPECT_GE(sd20 / sd80, 1.6);
  EXPECT_LE(sd20 / sd80, 2.6);
  const double sd80_large_m = sd_of_loss(100, 80, 200, 1);
  EXPECT_LE(sd80_large_m, 2.0 * sd80);
  EXPECT_GE(sd80_large_m, 0.5 * sd80);
}
