#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <sprinter/errors.hpp>
#include <sprinter/penalized_glm.hpp>
#include <sprinter/random.hpp>

#include "test_data.hpp"

using namespace sprinter;
using namespace sprinter::testing;

namespace {

struct Reference {
  const char* name;
  double lambda;
  double alpha;
  double intercept;
  std::vector<double> coefs;
};

// Accelerated proximal gradient run to machine precision
// (tests/support/freeze_oracles.py).
const Reference kReferences[] = {
    {"gaussian_lasso", 0.05, 1.0, 0.013634509254439653, {1.4434908054091422, 0, -0.9351545698764745, -0, 0}},
    {"gaussian_enet", 0.05, 0.5, 0.01246613997094187,
     {1.4404181871453816, 0, -0.94166183806633608, -0, 0.013534728579149969}},
    {"binomial_lasso", 0.02, 1.0, -0.60021836046373822,
     {3.1076283508303666, 0.11661595207540822, -0.5921598901265186, -0.99930653219789789, 1.0074047149415466}},
    {"poisson_offset", 0.03, 1.0, 0.31030932053010751,
     {0.014316624771134077, 0.5062555207056888, 0.0089706773864902806, -0, -0.032887456194907731}},
};

PathOptions tight() {
  PathOptions o;
  o.tol = 1e-13;
  o.kkt_tol = 1e-10;
  o.max_iter = 100000;
  return o;
}

struct Problem {
  Family family;
  Matrix x;
  std::vector<double> y;
  std::vector<double> offset;
};

Problem problem_for(const std::string& name) {
  Problem pr{Family::gaussian(), smooth_design(40, 5), {}, {}};
  if (name.rfind("gaussian", 0) == 0) {
    pr.y = gaussian_response(pr.x);
  } else if (name.rfind("binomial", 0) == 0) {
    pr.family = Family::binomial();
    pr.y = binomial_response(pr.x);
  } else {
    pr.family = Family::poisson();
    pr.y = poisson_response(pr.x);
    pr.offset = smooth_offset(40);
  }
  return pr;
}

Problem random_problem(FamilyKind kind, std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng r(seed);
  Problem pr{Family::of(kind), Matrix(n, p), std::vector<double>(n), {}};
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) pr.x(i, j) = r.normal() * (1.0 + double(j % 3));
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = 0.8 * pr.x(i, 0) - 0.4 * pr.x(i, 1) + 0.3 * pr.x(i, 2 % p);
    switch (kind) {
      case FamilyKind::kGaussian: pr.y[i] = eta + r.normal(); break;
      case FamilyKind::kBinomial: pr.y[i] = r.bernoulli(1.0 / (1.0 + std::exp(-eta))); break;
      case FamilyKind::kPoisson: pr.y[i] = double(r.poisson(std::exp(0.3 * eta))); break;
    }
  }
  return pr;
}

}  // namespace

TEST(PenalizedGlm, MatchesProximalGradientReference) {
  for (const auto& ref : kReferences) {
    SCOPED_TRACE(ref.name);
    const Problem pr = problem_for(ref.name);
    PathOptions o = tight();
    o.alpha = ref.alpha;
    const std::vector<double> grid = {ref.lambda};
    const auto path = fit_path(pr.family, pr.x, pr.y, pr.offset, grid, o);
    ASSERT_EQ(path.size(), 1u);
    EXPECT_TRUE(path[0].converged);
    EXPECT_NEAR(path[0].intercept, ref.intercept, 1e-7);
    const auto b = path[0].dense(5);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(b[k], ref.coefs[k], 1e-7) << "column " << k;
  }
}

TEST(PenalizedGlm, LambdaMaxIsTheFirstZeroSolution) {
  for (auto kind : {FamilyKind::kGaussian, FamilyKind::kBinomial, FamilyKind::kPoisson}) {
    const Problem pr = random_problem(kind, 80, 6, 5);
    const PathOptions o = tight();
    const double lmax = lambda_max(pr.family, pr.x, pr.y, {}, {}, o);
    const std::vector<double> grid = {lmax * 1.0000001, lmax * 0.98};
    const auto path = fit_path(pr.family, pr.x, pr.y, {}, grid, o);
    EXPECT_EQ(path[0].nnz(), 0u);
    EXPECT_GE(path[1].nnz(), 1u);
  }
}

TEST(PenalizedGlm, GridIsDescendingLogSpaced) {
  const Problem pr = random_problem(FamilyKind::kGaussian, 50, 80, 2);
  const auto grid = make_lambda_grid(pr.family, pr.x, pr.y, {}, {}, PathOptions{}, 20);
  ASSERT_EQ(grid.size(), 20u);
  EXPECT_NEAR(grid.back() / grid.front(), 1e-2, 1e-12);  // n <= p
  for (std::size_t l = 2; l < grid.size(); ++l) {
    EXPECT_NEAR(std::log(grid[l - 1] / grid[l]), std::log(grid[0] / grid[1]), 1e-12);
  }
  const Problem tall = random_problem(FamilyKind::kGaussian, 100, 5, 2);
  const auto g2 = make_lambda_grid(tall.family, tall.x, tall.y, {}, {}, PathOptions{}, 10);
  EXPECT_NEAR(g2.back() / g2.front(), 1e-4, 1e-12);
}

TEST(PenalizedGlm, EveryPathFitSatisfiesKkt) {
  for (auto kind : {FamilyKind::kGaussian, FamilyKind::kBinomial, FamilyKind::kPoisson}) {
    for (double alpha : {1.0, 0.4}) {
      const Problem pr = random_problem(kind, 60, 25, 17);
      PathOptions o;
      o.alpha = alpha;
      const auto grid = make_lambda_grid(pr.family, pr.x, pr.y, {}, {}, o, 30);
      const auto path = fit_path(pr.family, pr.x, pr.y, {}, grid, o);
      for (const auto& f : path) {
        if (!f.converged) continue;
        const KktReport k = kkt_residual(pr.family, f, pr.x, pr.y, {}, {}, o);
        EXPECT_LE(k.max_violation, 1e-6) << family_name(kind) << " lambda " << f.lambda;
      }
    }
  }
}

TEST(PenalizedGlm, ZeroWeightsEqualDroppingRows) {
  const Problem pr = random_problem(FamilyKind::kBinomial, 70, 8, 23);
  std::vector<double> w(70, 1.0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < 70; ++i) {
    if (i % 4 == 1) w[i] = 0.0;
    else keep.push_back(i);
  }
  const Matrix xs = Matrix::select_rows(pr.x, keep);
  std::vector<double> ys;
  for (auto i : keep) ys.push_back(pr.y[i]);
  const PathOptions o = tight();
  const std::vector<double> grid = {0.05, 0.02};
  const auto a = fit_path(pr.family, pr.x, pr.y, {}, grid, o, w);
  const auto b = fit_path(pr.family, xs, ys, {}, grid, o);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    EXPECT_NEAR(a[l].intercept, b[l].intercept, 1e-9);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(a[l].coef(k), b[l].coef(k), 1e-9);
  }
}

TEST(PenalizedGlm, ZeroPenaltyFactorLeavesColumnUnpenalized) {
  const Problem pr = random_problem(FamilyKind::kGaussian, 60, 5, 8);
  PathOptions o = tight();
  o.penalty_factors = {1, 1, 1, 1, 0};
  const double lmax = lambda_max(pr.family, pr.x, pr.y, {}, {}, o);
  const std::vector<double> grid = {lmax * 2.0};
  const auto path = fit_path(pr.family, pr.x, pr.y, {}, grid, o);
  ASSERT_EQ(path[0].nnz(), 1u);
  EXPECT_EQ(path[0].coefs[0].first, 4u);
  // Least-squares slope of y on the single free column.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    mx += pr.x(i, 4);
    my += pr.y[i];
  }
  mx /= 60;
  my /= 60;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    sxy += (pr.x(i, 4) - mx) * (pr.y[i] - my);
    sxx += (pr.x(i, 4) - mx) * (pr.x(i, 4) - mx);
  }
  EXPECT_NEAR(path[0].coefs[0].second, sxy / sxx, 1e-9);
}

TEST(PenalizedGlm, OffsetShiftsTheSolutionLikeAKnownTerm) {
  Problem pr = random_problem(FamilyKind::kPoisson, 90, 4, 31);
  std::vector<double> off(90);
  for (std::size_t i = 0; i < 90; ++i) off[i] = 0.2 * pr.x(i, 3);
  const PathOptions o = tight();
  const std::vector<double> grid = {0.01};
  const auto f = fit_path(pr.family, pr.x, pr.y, off, grid, o);
  EXPECT_TRUE(f[0].offset_used);
  const auto pred = predict(pr.family, f[0], pr.x, off);
  for (std::size_t i = 0; i < 90; ++i) {
    double t = f[0].intercept + off[i];
    for (std::size_t k = 0; k < 4; ++k) t += f[0].coef(k) * pr.x(i, k);
    ASSERT_NEAR(pred.theta[i], t, 1e-12);
    ASSERT_NEAR(pred.mean[i], std::exp(t), 1e-12 * std::exp(t));
  }
}

TEST(PenalizedGlm, SolutionMinimizesThePenalizedObjective) {
  const Problem pr = random_problem(FamilyKind::kBinomial, 80, 6, 41);
  PathOptions o = tight();
  o.alpha = 0.7;
  const std::vector<double> grid = {0.03};
  const GlmFit best = fit_path(pr.family, pr.x, pr.y, {}, grid, o)[0];
  const double f0 = penalized_objective(pr.family, best, pr.x, pr.y, {}, {}, o);
  Rng r(4);
  for (int t = 0; t < 50; ++t) {
    GlmFit probe = best;
    probe.intercept += 0.01 * r.normal();
    probe.coefs.clear();
    for (std::size_t k = 0; k < 6; ++k) probe.coefs.emplace_back(k, best.coef(k) + 0.01 * r.normal());
    EXPECT_GE(penalized_objective(pr.family, probe, pr.x, pr.y, {}, {}, o), f0 - 1e-12);
  }
}

TEST(PenalizedGlm, EarlyStopTruncatesTheGaussianPath) {
  Problem pr = random_problem(FamilyKind::kGaussian, 60, 10, 3);
  for (std::size_t i = 0; i < 60; ++i) pr.y[i] = 2.0 * pr.x(i, 0) + 1e-4 * std::sin(double(i));
  PathOptions o;
  o.early_stop = true;
  const auto grid = make_lambda_grid(pr.family, pr.x, pr.y, {}, {}, o, 100);
  const auto path = fit_path(pr.family, pr.x, pr.y, {}, grid, o);
  EXPECT_LT(path.size(), grid.size());
  EXPECT_GT(1.0 - path.back().deviance / path.back().null_deviance, 0.999);
}

TEST(PenalizedGlm, InvalidInputsThrow) {
  Problem pr = random_problem(FamilyKind::kBinomial, 30, 3, 1);
  std::vector<double> ones(30, 1.0);
  const std::vector<double> grid = {0.1};
  EXPECT_THROW(fit_path(pr.family, pr.x, ones, {}, grid, PathOptions{}), InputError);
  std::vector<double> bad = pr.y;
  bad[3] = 0.5;
  EXPECT_THROW(fit_path(pr.family, pr.x, bad, {}, grid, PathOptions{}), InputError);
  std::vector<double> shortv(10, 0.0);
  EXPECT_THROW(fit_path(pr.family, pr.x, shortv, {}, grid, PathOptions{}), DimensionError);
}

TEST(CrossValidation, FoldsAreBalancedAndSeeded) {
  const auto a = assign_folds(103, 5, 7), b = assign_folds(103, 5, 7), c = assign_folds(103, 5, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::vector<int> counts(5, 0);
  for (int f : a) ++counts[f];
  for (int k : counts) EXPECT_TRUE(k == 20 || k == 21);
}

TEST(CrossValidation, PicksTheMinimumAndIsDeterministic) {
  const Problem pr = random_problem(FamilyKind::kBinomial, 120, 15, 12);
  CvOptions o;
  o.n_lambda = 30;
  o.seed = 3;
  const CvResult r1 = cv_fit(pr.family, pr.x, pr.y, {}, o);
  o.workers = 3;
  const CvResult r2 = cv_fit(pr.family, pr.x, pr.y, {}, o);
  ASSERT_EQ(r1.cv_deviance.size(), r1.path.size());
  const auto it = std::min_element(r1.cv_deviance.begin(), r1.cv_deviance.end());
  EXPECT_EQ(r1.best_index, std::size_t(it - r1.cv_deviance.begin()));
  EXPECT_EQ(r1.lambda_min, r1.lambda_grid[r1.best_index]);
  EXPECT_EQ(r1.cv_deviance, r2.cv_deviance);
  EXPECT_EQ(r1.best().coefs, r2.best().coefs);
  EXPECT_GE(r1.best().nnz(), 1u);
}

TEST(FitAudit, CountsConvergedFits) {
  const Problem pr = random_problem(FamilyKind::kGaussian, 50, 6, 9);
  FitAudit audit;
  PathOptions o;
  o.audit = &audit;
  const auto grid = make_lambda_grid(pr.family, pr.x, pr.y, {}, {}, o, 12);
  const auto path = fit_path(pr.family, pr.x, pr.y, {}, grid, o);
  EXPECT_EQ(audit.converged_fits() + audit.unconverged_fits(), path.size());
  EXPECT_EQ(audit.failures(), 0u);
  EXPECT_LE(audit.worst_violation(), 1e-6);
}
