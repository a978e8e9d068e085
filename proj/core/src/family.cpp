#include "sprinter/family.hpp"

#include <string>

#include "sprinter/errors.hpp"

namespace sprinter {

Family Family::of(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kGaussian: return gaussian();
    case FamilyKind::kBinomial: return binomial();
    case FamilyKind::kPoisson: return poisson();
  }
  return gaussian();
}

double Family::link(double mu) const {
  if (!valid_mean(mu)) throw DomainError("link: mean " + std::to_string(mu) + " outside domain");
  switch (kind) {
    case FamilyKind::kGaussian: return mu;
    case FamilyKind::kBinomial: return std::log(mu / (1.0 - mu));
    case FamilyKind::kPoisson: return std::log(mu);
  }
  return mu;
}

bool Family::valid_response(double y) const {
  if (!std::isfinite(y)) return false;
  switch (kind) {
    case FamilyKind::kGaussian: return true;
    case FamilyKind::kBinomial: return y == 0.0 || y == 1.0;
    case FamilyKind::kPoisson: return y >= 0.0 && y == std::floor(y);
  }
  return false;
}

bool Family::valid_mean(double mu) const {
  if (!std::isfinite(mu)) return false;
  switch (kind) {
    case FamilyKind::kGaussian: return true;
    case FamilyKind::kBinomial: return mu > 0.0 && mu < 1.0;
    case FamilyKind::kPoisson: return mu > 0.0;
  }
  return false;
}

double neg_loglik(const Family& family, std::span<const double> theta, std::span<const double> y) {
  if (theta.size() != y.size()) {
    throw DimensionError("neg_loglik: theta has " + std::to_string(theta.size()) +
                         " entries, y has " + std::to_string(y.size()));
  }
  if (y.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += family.loss(theta[i], y[i]);
  return total / static_cast<double>(y.size());
}

namespace {

// y * log(y / mu) with the 0 * log(0) = 0 convention.
double ylogy_over(double y, double mu) { return y > 0.0 ? y * std::log(y / mu) : 0.0; }

}  // namespace

double unit_deviance(const Family& family, double mu, double y) {
  if (!family.valid_mean(mu)) {
    throw DomainError("deviance: mean " + std::to_string(mu) + " outside the " +
                      std::string(family_name(family.kind)) + " mean domain");
  }
  switch (family.kind) {
    case FamilyKind::kGaussian: return (y - mu) * (y - mu);
    case FamilyKind::kBinomial:
      return 2.0 * (ylogy_over(y, mu) + ylogy_over(1.0 - y, 1.0 - mu));
    case FamilyKind::kPoisson: return 2.0 * (ylogy_over(y, mu) - (y - mu));
  }
  return 0.0;
}

double deviance(const Family& family, std::span<const double> mu, std::span<const double> y) {
  if (mu.size() != y.size()) {
    throw DimensionError("deviance: mu has " + std::to_string(mu.size()) + " entries, y has " +
                         std::to_string(y.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += unit_deviance(family, mu[i], y[i]);
  return std::max(total, 0.0);
}

Family parse_family(std::string_view token) {
  if (token == "gaussian") return Family::gaussian();
  if (token == "binomial") return Family::binomial();
  if (token == "poisson") return Family::poisson();
  throw InputError("unknown family '" + std::string(token) +
                   "' (expected gaussian | binomial | poisson)");
}

std::string_view family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kGaussian: return "gaussian";
    case FamilyKind::kBinomial: return "binomial";
    case FamilyKind::kPoisson: return "poisson";
  }
  return "unknown";
}

}  // namespace sprinter
