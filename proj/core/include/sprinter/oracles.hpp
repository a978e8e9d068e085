#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sprinter/family.hpp"
#include "sprinter/matrix.hpp"
#include "sprinter/pair_index.hpp"
#include "sprinter/random.hpp"

namespace sprinter {

/// Law of one standardized latent source (mean 0, variance 1).
struct SourceLaw {
  enum class Kind { kGaussian, kGamma, kTwoPoint };
  Kind kind = Kind::kGaussian;
  /// Gamma: shape. Two-point: probability of the upper atom.
  double param = 0.0;

  static SourceLaw gaussian() { return {Kind::kGaussian, 0.0}; }
  static SourceLaw gamma(double shape) { return {Kind::kGamma, shape}; }
  static SourceLaw two_point(double prob) { return {Kind::kTwoPoint, prob}; }

  double kappa3() const;  // third cumulant
  double kappa4() const;  // fourth cumulant (excess kurtosis)
  double sample(Rng& rng) const;
};

/// X = L W with independent standardized sources W_k.
struct XLaw {
  Matrix loading;  // p x p
  std::vector<SourceLaw> sources;

  static XLaw standard_gaussian(std::size_t p);
  std::size_t p() const { return loading.rows(); }
  void sample(Rng& rng, std::size_t n, Matrix& out) const;
};

struct PopulationSpec {
  XLaw x;
  std::vector<double> beta_star;
  std::vector<std::pair<PairIndex, double>> gamma_star;
  Family family = Family::gaussian();
  double noise_sd = 1.0;  // gaussian only
};

/// Randomized spec for identity checks: loading I + lower-triangular
/// noise, a mix of gaussian, gamma and two-point sources, and (when
/// `planted`) one or two nonzero interactions.
PopulationSpec random_population_spec(std::size_t p, FamilyKind family, bool planted, Rng& rng);

/// Population moments of X and the centered interactions Z_j - E[Z_j].
struct Moments {
  std::vector<PairIndex> pairs;  // all q pairs in flat order
  Matrix sigma;                  // Cov(X), p x p
  Matrix phi;                    // Cov(X, Z), p x q
  Matrix psi;                    // Cov(Z), q x q
  std::vector<double> z_mean;    // E[X_a X_b]
};

Moments population_moments(const XLaw& law);

/// Natural parameter of the spec for sampled X (interactions centered).
std::vector<double> spec_theta(const PopulationSpec& spec, MatrixView x, const Moments& moments);

struct LinearPopulation {
  std::vector<PairIndex> pairs;
  std::vector<double> beta_M;
  std::vector<double> gamma_M;      // closed form via Sigma, Phi, Psi
  std::vector<double> gamma_check;  // joint (p+1)-dimensional least squares
  std::vector<double> cov_L;        // linear conditional covariance by definition
  std::vector<double> psi_diag;
  std::vector<double> condition;    // 1 - Psi_jj^-1 Phi_j Sigma^-1 Phi_j
  std::vector<char> excluded;       // condition below tolerance
  double max_cov_identity_error = 0.0;    // |cov_L - Psi_jj gamma_M|
  double max_check_identity_error = 0.0;  // |gamma_check - gamma_M / condition|
  std::size_t n_excluded = 0;
};

/// Gaussian-response population quantities from analytic moments.
LinearPopulation linear_population_quantities(const PopulationSpec& spec, double condition_tol = 1e-8);

struct GlmPairQuantities {
  PairIndex pair;
  double gamma_M = 0.0, gamma_M_se = 0.0;
  double gamma_check = 0.0, gamma_check_se = 0.0;
  double cov_L = 0.0, cov_L_se = 0.0;
  double mean_m_z2 = 0.0;  // E[m_j Z_j^2]
  double condition = 0.0;  // 1 - Psi_jj^-1 Phi_j Sigma^-1 Phi_j
  bool excluded = false;   // condition below 1e-8; gamma_check is NaN
};

struct GlmPopulation {
  std::vector<double> beta_M;
  std::vector<GlmPairQuantities> pairs;
  std::size_t draws = 0;
  std::size_t batches = 0;
};

/// Monte Carlo population quantities for a binomial or poisson spec.
/// Expectations over Y are taken analytically given X; standard errors
/// come from batch means.
GlmPopulation glm_population_quantities(const PopulationSpec& spec, const std::vector<PairIndex>& pairs,
                                        std::size_t mc_draws = 1000000, std::size_t batches = 20,
                                        std::uint64_t seed = 1);

struct ConvergenceReport {
  std::vector<std::size_t> n_grid;
  std::vector<double> mean_max_error;  // mean over seeds of max_j |gamma_hat_j - gamma_M_j|
  double slope = 0.0;                  // log-log regression slope (negative when decaying)
};

/// Gaussian design with the oracle step-1 offset X beta_M.
ConvergenceReport empirical_convergence_check(const PopulationSpec& spec, const std::vector<std::size_t>& n_grid,
                                              std::size_t seeds, std::uint64_t seed = 1);

struct GrowthReport {
  std::vector<std::size_t> n_grid;
  std::vector<double> eta;
  std::vector<double> mean_selected;
  bool monotone = true;
};

/// Size of the threshold-selected set with eta = c * n^-kappa.
GrowthReport threshold_growth_check(const PopulationSpec& spec, const std::vector<std::size_t>& n_grid,
                                    double kappa, double c, std::size_t seeds, std::uint64_t seed = 1);

struct TopHReport {
  std::vector<PairIndex> population_top;
  double gap = 0.0;  // |gamma_M| gap after position h
  std::size_t contained = 0;
  std::size_t runs = 0;
};

/// Whether the population top-h pairs by |gamma_M| are inside the
/// empirical top-m screen (oracle offset).
TopHReport top_h_check(const PopulationSpec& spec, std::size_t n, std::size_t h, std::size_t m,
                       std::size_t seeds, std::uint64_t seed = 1);

/// JSON rendering and a plain-text table of a linear population.
std::string to_json(const LinearPopulation& pop);
std::string to_json(const GlmPopulation& pop);
std::string to_json(const ConvergenceReport& rep);
std::string to_table(const LinearPopulation& pop);

}  // namespace sprinter
