#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sprinter/family.hpp"
#include "sprinter/matrix.hpp"
#include "sprinter/penalized_glm.hpp"
#include "sprinter/screen.hpp"

namespace sprinter {

struct InteractionTerm {
  std::size_t a = 0;
  std::size_t b = 0;
  double coef = 0.0;
};

/// Predictive form of a fitted interaction model. Inputs are mapped to
/// xs = (x - x_center) / x_scale and
///   theta = intercept + sum_k main[k] xs_k + sum_j coef_j xs_a xs_b.
/// Interaction centering is folded into the intercept. For ordinal models
/// `cutpoints` is non-empty and theta is the shared linear predictor.
struct LinearModel {
  Family family = Family::gaussian();
  std::vector<double> x_center;
  std::vector<double> x_scale;
  double intercept = 0.0;
  std::vector<double> main;
  std::vector<InteractionTerm> interactions;
  std::vector<double> cutpoints;

  std::size_t p() const { return x_center.size(); }
  /// Linear predictor for raw inputs.
  std::vector<double> theta(MatrixView x) const;
  /// b'(theta) for the GLM families.
  std::vector<double> mean(MatrixView x) const;
};

enum class Tuning { kSequential, kJoint };

struct SprinterConfig {
  /// Top-m selection; 0 means default_m(n).
  std::size_t m = 0;
  /// Threshold selection (|gamma| > eta) instead of top-m.
  bool use_threshold = false;
  double eta = 0.0;
  double alpha = 1.0;
  int cv_folds = 5;
  Tuning tuning = Tuning::kSequential;
  std::uint64_t seed = 1;
  std::size_t n_lambda = 100;
  /// Number of step-1 penalties examined by joint tuning.
  std::size_t joint_lambda1 = 10;
  bool include_squares = true;
  bool early_stop = true;
  unsigned workers = 0;
  FitAudit* audit = nullptr;
};

struct SprinterModel {
  LinearModel model;
  GlmFit step1;        // main effects on the standardized design
  ScreenResult screen;
  GlmFit step4;        // columns [Xs | Z_selected], offset from step1
  std::vector<PairIndex> pairs;         // selected pairs, step-4 column order
  std::vector<double> interaction_centers;
  double lambda1 = 0.0;
  double lambda4 = 0.0;
  double cv_deviance = 0.0;
  bool degenerate = false;  // no interaction survived screening
  Tuning tuning = Tuning::kSequential;
};

SprinterModel sprinter_fit(const Family& family, MatrixView x, std::span<const double> y,
                           const SprinterConfig& config = {});

/// Fitted means for new raw inputs.
std::vector<double> sprinter_predict(const SprinterModel& model, MatrixView x_new);

/// Folds the step-4 fit into a LinearModel on the standardized design.
LinearModel assemble_model(const Family& family, const Standardizer& standardizer,
                           const GlmFit& step1, const GlmFit& step4,
                           std::span<const PairIndex> pairs, std::span<const double> centers);

}  // namespace sprinter
