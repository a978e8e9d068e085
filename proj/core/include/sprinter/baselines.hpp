#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sprinter/pipeline.hpp"

namespace sprinter {

/// Result of a comparator method. `fit` is expressed on the standardized
/// design, with interaction columns (if any) appended in `pairs` order.
struct BaselineFit {
  LinearModel model;
  GlmFit fit;
  std::vector<PairIndex> pairs;
  std::vector<double> interaction_centers;
  ScreenResult screen;  // SIS only
};

/// Main-effects lasso: CV-tuned penalized fit on the main effects. Uses the
/// same standardization, folds and grid as step 1 of sprinter_fit.
BaselineFit fit_mel(const Family& family, MatrixView x, std::span<const double> y,
                    const SprinterConfig& config = {});

/// All-pairs lasso over [X | every interaction]. Refuses when p > p_cap.
BaselineFit fit_apl(const Family& family, MatrixView x, std::span<const double> y,
                    const SprinterConfig& config = {}, std::size_t p_cap = 600);

/// Marginal interaction screening: each pair gets its own intercept-plus-
/// slope GLM with no main-effect offset; the top-m are refit together with
/// the main effects (no offset).
BaselineFit fit_sis(const Family& family, MatrixView x, std::span<const double> y,
                    const SprinterConfig& config = {});

struct MarginalFit {
  double intercept = 0.0;
  double gamma = 0.0;
  bool converged = false;
};

/// Two-parameter GLM MLE of y on (1, z).
MarginalFit fit_marginal(const Family& family, std::span<const double> z, std::span<const double> y,
                         const Newton1dOptions& options = {});

/// Screening pass of SIS on a standardized design.
ScreenResult sis_screen(const Family& family, MatrixView xs, std::span<const double> y,
                        const ScreenMode& mode, const ScreenOptions& options = {});

}  // namespace sprinter
