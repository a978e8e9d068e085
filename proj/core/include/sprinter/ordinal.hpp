#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sprinter/matrix.hpp"
#include "sprinter/pipeline.hpp"
#include "sprinter/screen.hpp"

namespace sprinter {

// Proportional-odds model with K = k + 1 ordered categories 1..K:
//   P(Y <= t | x) = sigmoid(c_t - x'b - offset),  t = 1..k,
// so a larger x'b moves probability toward higher categories.

constexpr double kOrdinalProbFloor = 1e-12;

/// Score (gradient of the log-likelihood) and Fisher information with
/// respect to (c, b), assembled from per-observation k-vectors V_i and
/// tridiagonal k x k matrices W_i without forming the stacked design.
struct OrdinalScoreInfo {
  std::vector<double> score;  // length k + p: cutpoint block, then b block
  Matrix info_cc;             // k x k
  Matrix info_cb;             // k x p
  Matrix info_bb;             // p x p (empty unless requested)
  double loglik = 0.0;
  std::size_t floored = 0;    // category probabilities raised to the floor

  /// Full (k+p) x (k+p) information; requires info_bb.
  Matrix dense_info() const;
};

OrdinalScoreInfo ordinal_score_info(MatrixView x, std::span<const int> y, std::span<const double> c,
                                    std::span<const double> b, std::span<const double> offset = {},
                                    bool with_bb = true);

struct OrdinalOptions {
  /// Penalty lambda * (alpha |b|_1 + (1 - alpha) |b|_2^2).
  double alpha = 1.0;
  int max_outer = 200;
  int max_sweeps = 1000;
  double tol = 1e-12;  // coordinate descent: max H_jj * step^2
  double kkt_tol = 1e-7;
  bool early_stop = false;
};

struct OrdinalFit {
  std::vector<double> cutpoints;
  std::vector<std::pair<std::size_t, double>> coefs;
  double lambda = 0.0;
  double alpha = 1.0;
  bool converged = false;
  int n_iter = 0;
  double objective = 0.0;  // weighted mean NLL + penalty
  double deviance = 0.0;   // -2 * weighted log-likelihood

  double coef(std::size_t k) const;
  std::vector<double> dense(std::size_t p) const;
};

/// Number of categories K implied by the response (max label), validated.
int ordinal_categories(std::span<const int> y);

double ordinal_lambda_max(MatrixView x, std::span<const int> y, int n_categories, std::span<const double> offset,
                          std::span<const double> weights, const OrdinalOptions& options);

std::vector<double> ordinal_lambda_grid(MatrixView x, std::span<const int> y, int n_categories,
                                        std::span<const double> offset, std::span<const double> weights,
                                        const OrdinalOptions& options, std::size_t n_lambda = 100);

std::vector<OrdinalFit> fit_ordinal_path(MatrixView x, std::span<const int> y, int n_categories,
                                         std::span<const double> offset, std::span<const double> lambda_grid,
                                         const OrdinalOptions& options, std::span<const double> weights = {});

struct OrdinalCvOptions {
  int n_folds = 5;
  std::uint64_t seed = 1;
  std::size_t n_lambda = 100;
  std::vector<double> lambda_grid;
  std::vector<int> fold_ids;
  unsigned workers = 1;
  OrdinalOptions path;
};

struct OrdinalCvResult {
  std::vector<double> lambda_grid;
  std::vector<double> cv_deviance;
  double lambda_min = 0.0;
  std::size_t best_index = 0;
  std::vector<OrdinalFit> path;
  std::size_t skipped_folds = 0;

  const OrdinalFit& best() const { return path[best_index]; }
};

/// Cross-validated elastic-net proportional-odds fit (ordinalNet-style).
OrdinalCvResult fit_ordinalnet(MatrixView x, std::span<const int> y, std::span<const double> offset,
                               const OrdinalCvOptions& options);

/// Linear predictor x'b + offset for an ordinal fit.
std::vector<double> ordinal_eta(const OrdinalFit& fit, MatrixView x, std::span<const double> offset = {});

/// Category probabilities (n x K) of an ordinal LinearModel.
Matrix ordinal_probabilities(const LinearModel& model, MatrixView x);

/// Screening pass with the cutpoints held fixed.
ScreenResult ordinal_screen(MatrixView xs, std::span<const int> y, std::span<const double> cutpoints,
                            std::span<const double> offset, const ScreenMode& mode,
                            const ScreenOptions& options = {});

struct OrdinalSprinterModel {
  LinearModel model;  // cutpoints non-empty
  OrdinalFit step1;
  ScreenResult screen;
  OrdinalFit step4;
  std::vector<PairIndex> pairs;
  std::vector<double> interaction_centers;
  bool degenerate = false;
};

/// Sequentially tuned sprinter for ordinal responses labelled 1..K.
OrdinalSprinterModel sprinter_ordinal(MatrixView x, std::span<const int> y, const SprinterConfig& config = {});

}  // namespace sprinter
