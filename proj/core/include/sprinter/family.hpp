#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>

namespace sprinter {

enum class FamilyKind { kGaussian, kBinomial, kPoisson };

/// Exponential family with canonical link. The natural parameter theta is
/// clamped to [-theta_clamp, theta_clamp] before every evaluation so that
/// exp() cannot overflow; the default clamps leave double-precision fitted
/// values unchanged for any realistic linear predictor.
struct Family {
  FamilyKind kind = FamilyKind::kGaussian;
  double theta_clamp = std::numeric_limits<double>::infinity();

  static Family gaussian() { return {FamilyKind::kGaussian, std::numeric_limits<double>::infinity()}; }
  static Family binomial() { return {FamilyKind::kBinomial, 30.0}; }
  static Family poisson() { return {FamilyKind::kPoisson, 30.0}; }
  static Family of(FamilyKind kind);

  double clamp(double theta) const { return std::clamp(theta, -theta_clamp, theta_clamp); }

  /// b(theta)
  double cumulant(double theta) const {
    theta = clamp(theta);
    switch (kind) {
      case FamilyKind::kGaussian: return 0.5 * theta * theta;
      case FamilyKind::kBinomial: return std::max(theta, 0.0) + std::log1p(std::exp(-std::abs(theta)));
      case FamilyKind::kPoisson: return std::exp(theta);
    }
    return 0.0;
  }

  /// b'(theta), the mean.
  double mean(double theta) const {
    theta = clamp(theta);
    switch (kind) {
      case FamilyKind::kGaussian: return theta;
      case FamilyKind::kBinomial: return 1.0 / (1.0 + std::exp(-theta));
      case FamilyKind::kPoisson: return std::exp(theta);
    }
    return 0.0;
  }

  /// b''(theta), the variance function.
  double variance(double theta) const {
    theta = clamp(theta);
    switch (kind) {
      case FamilyKind::kGaussian: return 1.0;
      case FamilyKind::kBinomial: {
        const double mu = 1.0 / (1.0 + std::exp(-theta));
        return mu * (1.0 - mu);
      }
      case FamilyKind::kPoisson: return std::exp(theta);
    }
    return 1.0;
  }

  /// Canonical link g = (b')^{-1}; requires mu inside the mean domain.
  double link(double mu) const;

  /// Unit negative log-likelihood l(theta, y) = b(theta) - theta*y.
  double loss(double theta, double y) const { return cumulant(theta) - clamp(theta) * y; }

  /// True when y is an admissible response value for the family.
  bool valid_response(double y) const;
  /// True when mu lies in the open mean domain.
  bool valid_mean(double mu) const;
};

/// Mean over observations of b(theta_i) - theta_i * y_i.
double neg_loglik(const Family& family, std::span<const double> theta, std::span<const double> y);

/// 2 * sum_i [l(theta(mu_i), y_i) - l(theta(y_i), y_i)], using 0*log(0) = 0
/// for the saturated term.
double deviance(const Family& family, std::span<const double> mu, std::span<const double> y);

/// Unit deviance contribution of a single observation.
double unit_deviance(const Family& family, double mu, double y);

Family parse_family(std::string_view token);
std::string_view family_name(FamilyKind kind);

}  // namespace sprinter
