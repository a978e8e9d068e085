#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <sprinter/newton1d.hpp>
#include <sprinter/random.hpp>
#include <sprinter/screen.hpp>

#include "golden.hpp"

using namespace sprinter;
using namespace sprinter::testing;

namespace {

struct OneDim {
  std::vector<double> z, y, offset;
};

// Deterministic instance shared with freeze_oracles.py.
OneDim smooth_instance(FamilyKind kind) {
  const std::size_t m = 30;
  OneDim d;
  d.z.resize(m);
  for (std::size_t i = 0; i < m; ++i) d.z[i] = std::sin(0.9 * double(i) + 0.3);
  const double mean = std::accumulate(d.z.begin(), d.z.end(), 0.0) / double(m);
  for (double& v : d.z) v -= mean;
  for (std::size_t i = 0; i < m; ++i) {
    d.offset.push_back(0.3 * std::cos(0.4 * double(i)));
    if (kind == FamilyKind::kBinomial) {
      d.y.push_back(std::sin(1.9 * double(i)) + d.z[i] > 0.0 ? 1.0 : 0.0);
    } else {
      const double v = 2.0 + 2.0 * std::sin(0.7 * double(i)) + d.z[i];
      d.y.push_back(v > 0.0 ? double(int(v)) : 0.0);
    }
  }
  return d;
}

double mean_loss(const Family& f, const OneDim& d, double g) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.z.size(); ++i) s += f.loss(d.offset[i] + d.z[i] * g, d.y[i]);
  return s / double(d.z.size());
}

}  // namespace

TEST(Newton1d, MatchesBrentReference) {
  const OneDim b = smooth_instance(FamilyKind::kBinomial);
  const OneDim p = smooth_instance(FamilyKind::kPoisson);
  EXPECT_NEAR(fit_1d_offset_mle(Family::binomial(), b.z, b.y, b.offset), 1.4161049264351986, 1e-7);
  EXPECT_NEAR(fit_1d_offset_mle(Family::poisson(), p.z, p.y, p.offset), 0.59547901011343374, 1e-7);
}

TEST(Newton1d, GaussianClosedForm) {
  Rng r(6);
  std::vector<double> z(50), y(50), o(50);
  for (std::size_t i = 0; i < 50; ++i) {
    z[i] = r.normal();
    o[i] = r.normal();
    y[i] = o[i] + 0.7 * z[i] + r.normal();
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    num += z[i] * (y[i] - o[i]);
    den += z[i] * z[i];
  }
  EXPECT_NEAR(fit_1d_offset_mle(Family::gaussian(), z, y, o), num / den, 1e-12);
}

TEST(Newton1d, AgreesWithGoldenSectionOnRandomInstances) {
  Rng r(12);
  for (int t = 0; t < 60; ++t) {
    const Family f = t % 2 ? Family::binomial() : Family::poisson();
    const std::size_t n = 20 + r.uniform_int(60);
    OneDim d;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = r.normal(), o = 0.5 * r.normal();
      d.z.push_back(z);
      d.offset.push_back(o);
      const double th = o + 0.6 * z;
      d.y.push_back(f.kind == FamilyKind::kBinomial ? double(r.bernoulli(f.mean(th))) : double(r.poisson(f.mean(th))));
    }
    bool failed = false;
    const double g = fit_1d_offset_mle(f, d.z, d.y, d.offset, {}, &failed);
    if (failed) continue;
    const double ref = golden_section([&](double v) { return mean_loss(f, d, v); }, -50.0, 50.0, 1e-14);
    EXPECT_NEAR(g, ref, 1e-5);
  }
}

TEST(Newton1d, SeparableDataIsReportedAsFailure) {
  std::vector<double> z = {-2, -1, -0.5, 0.5, 1, 2}, y = {0, 0, 0, 1, 1, 1}, o(6, 0.0);
  bool failed = false;
  const double g = fit_1d_offset_mle(Family::binomial(), z, y, o, {}, &failed);
  EXPECT_TRUE(failed);
  EXPECT_GT(g, 10.0);
  EXPECT_TRUE(std::isfinite(g));
}

TEST(Newton1d, ZeroColumnGivesZero) {
  std::vector<double> z(5, 0.0), y = {0, 1, 0, 1, 1}, o(5, 0.0);
  bool failed = true;
  EXPECT_EQ(fit_1d_offset_mle(Family::binomial(), z, y, o, {}, &failed), 0.0);
  EXPECT_EQ(fit_1d_offset_mle(Family::gaussian(), z, y, o), 0.0);
}

TEST(Newton1d, GenericSolverHandlesFlatAndSteepObjectives) {
  // exp(x) - 3x has its minimum at log 3.
  auto eval = [](double x) { return NewtonPoint{std::exp(x) - 3.0 * x, std::exp(x) - 3.0, std::exp(x)}; };
  const auto r = newton1d(eval, Newton1dOptions{}, 8.0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x, std::log(3.0), 1e-9);
  // Minimum outside the bracket is not converged and stays on the boundary side.
  auto linear = [](double x) { return NewtonPoint{-x, -1.0, 0.0}; };
  Newton1dOptions opt;
  opt.bound = 5.0;
  const auto s = newton1d(linear, opt);
  EXPECT_FALSE(s.converged);
  EXPECT_GT(s.x, 4.9);
}
