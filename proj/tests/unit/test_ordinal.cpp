#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <sprinter/errors.hpp>
#include <sprinter/ordinal.hpp>
#include <sprinter/penalized_glm.hpp>
#include <sprinter/random.hpp>
#include <sprinter/simulate.hpp>

#include "ordinal_naive.hpp"
#include "test_data.hpp"

using namespace sprinter;
using namespace sprinter::testing;

namespace {

// Labels of the frozen unpenalized reference fit.
std::vector<int> frozen_labels(const Matrix& x) {
  std::vector<int> y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = x(i, 0) - 0.5 * x(i, 1) + std::sin(2.3 * double(i));
    y[i] = 1 + (s > -0.4) + (s > 0.6);
  }
  return y;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Ordinal, ScoreAndInformationMatchTheNaiveLoop) {
  Rng rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 5 + rng.uniform_int(30), p = 1 + rng.uniform_int(5);
    const int k = 1 + int(rng.uniform_int(4));
    Matrix x(n, p);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < n; ++i) x(i, j) = rng.normal();
    std::vector<int> y(n);
    for (auto& v : y) v = 1 + int(rng.uniform_int(std::size_t(k) + 1));
    std::vector<double> c(static_cast<std::size_t>(k)), b(p), off(n);
    double cur = -1.5 + rng.normal() * 0.3;
    for (auto& v : c) {
      v = cur;
      cur += 0.2 + rng.uniform();
    }
    for (auto& v : b) v = 0.7 * rng.normal();
    for (auto& v : off) v = rep % 2 ? 0.3 * rng.normal() : 0.0;
    const OrdinalScoreInfo fast = ordinal_score_info(x, y, c, b, off);
    const NaiveOrdinal ref = naive_ordinal(x, y, c, b, off);
    ASSERT_EQ(fast.score.size(), ref.score.size());
    for (std::size_t j = 0; j < ref.score.size(); ++j) ASSERT_LT(rel(fast.score[j], ref.score[j]), 1e-10);
    const Matrix info = fast.dense_info();
    for (std::size_t r = 0; r < info.rows(); ++r)
      for (std::size_t s = 0; s < info.cols(); ++s) ASSERT_LT(rel(info(r, s), ref.info(r, s)), 1e-10);
    EXPECT_LT(rel(fast.loglik, ref.loglik), 1e-10);
  }
}

TEST(Ordinal, InformationWithoutBBlockLeavesItEmpty) {
  const Matrix x = smooth_design(20, 3);
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = 1 + int(i % 3);
  const std::vector<double> c = {-0.5, 0.5}, b = {0.1, 0.2, -0.3};
  const OrdinalScoreInfo s = ordinal_score_info(x, y, c, b, {}, false);
  EXPECT_EQ(s.info_bb.rows(), 0u);
  EXPECT_THROW(s.dense_info(), DimensionError);
  EXPECT_THROW(ordinal_score_info(x, y, std::vector<double>{}, b), InputError);
}

TEST(Ordinal, UnpenalizedFitMatchesStatsmodels) {
  const Matrix x = smooth_design(80, 2);
  const std::vector<int> y = frozen_labels(x);
  EXPECT_EQ(std::count(y.begin(), y.end(), 1), 32);
  EXPECT_EQ(std::count(y.begin(), y.end(), 2), 26);
  OrdinalOptions opt;
  opt.tol = 1e-20;
  opt.kkt_tol = 1e-10;
  const std::vector<double> grid = {0.0};
  const auto path = fit_ordinal_path(x, y, 3, {}, grid, opt);
  ASSERT_EQ(path.size(), 1u);
  const OrdinalFit& f = path[0];
  EXPECT_TRUE(f.converged);
  // statsmodels OrderedModel (logit), Newton to 1e-14
  EXPECT_NEAR(f.coef(0), 1.9210347446281053, 1e-6);
  EXPECT_NEAR(f.coef(1), -0.93425760908192257, 1e-6);
  ASSERT_EQ(f.cutpoints.size(), 2u);
  EXPECT_NEAR(f.cutpoints[0], -0.65395410642523466, 1e-6);
  EXPECT_NEAR(f.cutpoints[1], 1.5210354540181128, 1e-6);
  EXPECT_NEAR(f.deviance, 2.0 * 65.472508935458109, 1e-6);
  const OrdinalScoreInfo s = ordinal_score_info(x, y, f.cutpoints, f.dense(2));
  for (double g : s.score) EXPECT_LT(std::abs(g), 1e-6);
}

TEST(Ordinal, TwoCategoriesReduceToTheBinomialLasso) {
  const Matrix x = smooth_design(60, 5);
  const auto yb = binomial_response(x);
  std::vector<int> y(yb.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = yb[i] == 1.0 ? 2 : 1;
  OrdinalOptions oo;
  oo.tol = 1e-20;
  oo.kkt_tol = 1e-10;
  PathOptions po;
  po.tol = 1e-14;
  po.kkt_tol = 1e-10;
  const std::vector<double> grid = {0.05, 0.02};
  const auto ord = fit_ordinal_path(x, y, 2, {}, grid, oo);
  const auto glm = fit_path(Family::binomial(), x, yb, {}, grid, po);
  ASSERT_EQ(ord.size(), 2u);
  for (std::size_t l = 0; l < 2; ++l) {
    // P(Y = 2) = sigmoid(x'b - c), so the binomial intercept is -c.
    EXPECT_NEAR(ord[l].cutpoints[0], -glm[l].intercept, 1e-6);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(ord[l].coef(j), glm[l].coef(j), 1e-6);
    EXPECT_NEAR(ord[l].deviance, glm[l].deviance, 1e-6);
  }
}

TEST(Ordinal, NullModelCutpointsAreCumulativeLogits) {
  const Matrix x = smooth_design(80, 2);
  const std::vector<int> y = frozen_labels(x);
  const OrdinalOptions opt;
  const double lmax = ordinal_lambda_max(x, y, 3, {}, {}, opt);
  const std::vector<double> grid = {lmax * 1.0001};
  const OrdinalFit f = fit_ordinal_path(x, y, 3, {}, grid, opt)[0];
  EXPECT_TRUE(f.coefs.empty());
  EXPECT_NEAR(f.cutpoints[0], std::log(32.0 / 48.0), 1e-8);
  EXPECT_NEAR(f.cutpoints[1], std::log(58.0 / 22.0), 1e-8);
  const std::vector<double> below = {lmax * 0.95};
  EXPECT_FALSE(fit_ordinal_path(x, y, 3, {}, below, opt)[0].coefs.empty());
}

TEST(Ordinal, PathIsMonotoneAndSatisfiesOrdering) {
  const OrdinalSimData s = simulate_ordinal(OrdinalDesign{400, 8, 5, 1.0, 1.0, 3, 0});
  const OrdinalOptions opt;
  const auto grid = ordinal_lambda_grid(s.train.x, s.train.y, 5, {}, {}, opt, 20);
  const auto path = fit_ordinal_path(s.train.x, s.train.y, 5, {}, grid, opt);
  ASSERT_EQ(path.size(), 20u);
  for (std::size_t l = 1; l < path.size(); ++l) EXPECT_LE(path[l].deviance, path[l - 1].deviance + 1e-8);
  for (const auto& f : path) {
    EXPECT_TRUE(f.converged);
    for (std::size_t t = 1; t < f.cutpoints.size(); ++t) EXPECT_LT(f.cutpoints[t - 1], f.cutpoints[t]);
  }
  // Positive true effects push toward higher categories.
  EXPECT_GT(path.back().coef(0), 0.5);
  EXPECT_GT(path.back().coef(1), 0.5);
}

TEST(Ordinal, MissingCategoryIsRejected) {
  const Matrix x = smooth_design(10, 2);
  const std::vector<int> gap = {1, 1, 3, 3, 1, 3, 1, 3, 1, 3};
  EXPECT_THROW(ordinal_categories(gap), InputError);
  const std::vector<int> zero = {0, 1, 2, 1, 2, 1, 2, 1, 2, 1};
  EXPECT_THROW(ordinal_categories(zero), InputError);
  const std::vector<int> one = std::vector<int>(10, 1);
  EXPECT_THROW(ordinal_categories(one), InputError);
  const std::vector<double> grid = {0.1};
  EXPECT_THROW(fit_ordinal_path(x, gap, 3, {}, grid, {}), InputError);
}

TEST(Ordinal, SprinterRecoversThePlantedInteraction) {
  OrdinalDesign d;
  d.n = 600;
  d.p = 10;
  d.gamma_value = 1.5;
  const OrdinalSimData s = simulate_ordinal(d);
  SprinterConfig cfg;
  cfg.n_lambda = 40;
  const OrdinalSprinterModel m = sprinter_ordinal(s.train.x, s.train.y, cfg);
  ASSERT_FALSE(m.screen.selected.empty());
  EXPECT_EQ(m.screen.selected[0].pair, make_pair_index(2, 3, 10));
  bool found = false;
  for (const auto& t : m.model.interactions) found |= (t.a == 2 && t.b == 3 && t.coef > 0.5);
  EXPECT_TRUE(found);
  const Matrix prob = ordinal_probabilities(m.model, s.eval.x);
  ASSERT_EQ(prob.cols(), 4u);
  double loglik = 0.0;
  for (std::size_t i = 0; i < prob.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_GE(prob(i, c), 0.0);
      sum += prob(i, c);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    loglik += std::log(prob(i, std::size_t(s.eval.y[i] - 1)));
  }
  // Better than the marginal category frequencies.
  std::vector<double> freq(4, 0.0);
  for (int y : s.train.y) freq[std::size_t(y - 1)] += 1.0 / double(s.train.y.size());
  double base = 0.0;
  for (int y : s.eval.y) base += std::log(freq[std::size_t(y - 1)]);
  EXPECT_GT(loglik, base);
}

TEST(Ordinal, ScreenRanksByFixedCutpointLikelihood) {
  OrdinalDesign d;
  d.n = 500;
  d.p = 6;
  d.beta_value = 0.0;
  d.gamma_value = 2.0;
  const OrdinalSimData s = simulate_ordinal(d);
  const Matrix xs = Standardizer::fit(s.train.x).apply(s.train.x);
  const std::vector<double> cuts = ordinal_design_cutpoints(4), offset(500, 0.0);
  for (unsigned w : {1u, 4u}) {
    ScreenOptions so;
    so.workers = w;
    const ScreenResult r = ordinal_screen(xs, s.train.y, cuts, offset, ScreenMode::top_m(3), so);
    ASSERT_EQ(r.selected.size(), 3u);
    EXPECT_EQ(r.selected[0].pair, make_pair_index(2, 3, 6));
    EXPECT_GT(r.selected[0].gamma, 1.0);
  }
}
