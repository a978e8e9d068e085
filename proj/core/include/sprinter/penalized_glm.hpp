#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "sprinter/family.hpp"
#include "sprinter/matrix.hpp"

namespace sprinter {

/// One point on a regularization path. Coefficients are on the scale of the
/// design matrix that was passed in; only nonzeros are stored.
struct GlmFit {
  double intercept = 0.0;
  std::vector<std::pair<std::size_t, double>> coefs;  // sorted by column
  double lambda = 0.0;
  double alpha = 1.0;
  bool offset_used = false;
  int n_iter = 0;
  bool converged = false;
  double deviance = 0.0;       // training deviance, weighted sum
  double null_deviance = 0.0;  // intercept-only (plus offset) deviance

  double coef(std::size_t k) const;
  std::size_t nnz() const { return coefs.size(); }
  std::vector<double> dense(std::size_t p) const;
};

struct KktReport {
  double max_violation = 0.0;
  std::size_t worst_column = 0;  // p means the intercept
  bool ok = true;
};

/// Thread-safe collector used to audit the optimality of every converged
/// fit produced during a run (see PathOptions::audit).
class FitAudit {
 public:
  void record(const GlmFit& fit, const KktReport& kkt);

  std::size_t converged_fits() const;
  std::size_t failures() const;
  std::size_t unconverged_fits() const;
  double worst_violation() const;

 private:
  mutable std::mutex mutex_;
  std::size_t converged_ = 0;
  std::size_t failures_ = 0;
  std::size_t unconverged_ = 0;
  double worst_ = 0.0;
};

struct PathOptions {
  /// Elastic-net mixing: penalty is lambda * pf_k * (alpha|b| + (1-alpha) b^2 / 2).
  double alpha = 1.0;
  /// Per-column penalty factors; empty means all ones. Zero = unpenalized.
  std::vector<double> penalty_factors;
  /// Standardize columns internally (coefficients are still reported on
  /// the input scale). When false, columns are centered but not scaled.
  bool standardize = true;
  int max_iter = 1000;          // coordinate sweeps per lambda
  int max_irls = 100;           // quadratic approximations per lambda
  double tol = 1e-7;            // max coefficient change, standardized scale
  double kkt_tol = 1e-6;
  double weight_floor = 1e-5;   // lower bound on IRLS weights
  /// Truncate the path once the deviance ratio saturates (> 0.999) or
  /// stops improving (relative gain < 1e-5).
  bool early_stop = false;
  /// When set, each converged fit is re-verified with kkt_residual.
  FitAudit* audit = nullptr;
};

/// Largest penalty at which every coefficient is zero.
double lambda_max(const Family& family, MatrixView x, std::span<const double> y,
                  std::span<const double> offset, std::span<const double> weights,
                  const PathOptions& options);

/// Descending, log-spaced grid from lambda_max down to ratio * lambda_max;
/// ratio 0 selects 1e-4 when n > p and 1e-2 otherwise.
std::vector<double> make_lambda_grid(const Family& family, MatrixView x, std::span<const double> y,
                                     std::span<const double> offset, std::span<const double> weights,
                                     const PathOptions& options, std::size_t n_lambda = 100,
                                     double min_ratio = 0.0);

/// Fits the penalized GLM at every lambda of a descending grid with warm
/// starts. `offset` and `weights` may be empty (zero offset, unit weights).
/// Observations with zero weight are ignored, which is how CV folds are fit
/// without copying the design.
std::vector<GlmFit> fit_path(const Family& family, MatrixView x, std::span<const double> y,
                             std::span<const double> offset, std::span<const double> lambda_grid,
                             const PathOptions& options, std::span<const double> weights = {});

/// Post-hoc stationarity check of a fit on the internally standardized
/// problem. Recomputes everything from the data.
KktReport kkt_residual(const Family& family, const GlmFit& fit, MatrixView x,
                       std::span<const double> y, std::span<const double> offset,
                       std::span<const double> weights, const PathOptions& options);

/// Penalized objective (mean loss + penalty) of a fit, standardized scale.
double penalized_objective(const Family& family, const GlmFit& fit, MatrixView x,
                           std::span<const double> y, std::span<const double> offset,
                           std::span<const double> weights, const PathOptions& options);

struct Prediction {
  std::vector<double> theta;
  std::vector<double> mean;
};

Prediction predict(const Family& family, const GlmFit& fit, MatrixView x,
                   std::span<const double> offset = {});

/// Balanced fold ids in [0, n_folds), shuffled deterministically by seed.
std::vector<int> assign_folds(std::size_t n, int n_folds, std::uint64_t seed);

struct CvOptions {
  int n_folds = 5;
  std::uint64_t seed = 1;
  std::size_t n_lambda = 100;
  /// Optional explicit grid; computed from the full data when empty.
  std::vector<double> lambda_grid;
  /// Optional explicit fold ids (overrides seed-based assignment).
  std::vector<int> fold_ids;
  unsigned workers = 1;
  PathOptions path;
};

struct CvResult {
  std::vector<double> lambda_grid;
  std::vector<double> cv_deviance;  // fold-averaged mean held-out deviance
  std::vector<double> cv_se;
  double lambda_min = 0.0;
  std::size_t best_index = 0;
  std::vector<int> fold_assignment;
  std::vector<GlmFit> path;  // full-data fits along lambda_grid
  std::size_t skipped_folds = 0;

  const GlmFit& best() const { return path[best_index]; }
};

/// K-fold cross-validation over the lambda path; lambda_min rule.
CvResult cv_fit(const Family& family, MatrixView x, std::span<const double> y,
                std::span<const double> offset, const CvOptions& options);

}  // namespace sprinter
