#include "sprinter/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sprinter/errors.hpp"
#include "sprinter/parallel.hpp"

namespace sprinter {

std::vector<double> LinearModel::theta(MatrixView x) const {
  if (x.cols() != p()) {
    throw DimensionError("model expects " + std::to_string(p()) + " columns, got " + std::to_string(x.cols()));
  }
  const std::size_t n = x.rows();
  std::vector<double> out(n, intercept);
  std::vector<std::vector<double>> cache(p());
  auto column = [&](std::size_t k) -> const std::vector<double>& {
    auto& c = cache[k];
    if (c.empty() && n > 0) {
      c.resize(n);
      auto src = x.col(k);
      for (std::size_t i = 0; i < n; ++i) c[i] = (src[i] - x_center[k]) / x_scale[k];
    }
    return c;
  };
  for (std::size_t k = 0; k < p(); ++k) {
    if (main[k] == 0.0) continue;
    const auto& c = column(k);
    for (std::size_t i = 0; i < n; ++i) out[i] += main[k] * c[i];
  }
  for (const auto& t : interactions) {
    if (t.a >= p() || t.b >= p()) throw DimensionError("interaction references a column beyond the model");
    const auto& ca = column(t.a);
    const auto& cb = column(t.b);
    for (std::size_t i = 0; i < n; ++i) out[i] += t.coef * (ca[i] * cb[i]);
  }
  return out;
}

std::vector<double> LinearModel::mean(MatrixView x) const {
  auto t = theta(x);
  for (double& v : t) v = family.mean(v);
  return t;
}

LinearModel assemble_model(const Family& family, const Standardizer& standardizer, const GlmFit& step1,
                           const GlmFit& step4, std::span<const PairIndex> pairs,
                           std::span<const double> centers) {
  const std::size_t p = standardizer.size();
  LinearModel lm;
  lm.family = family;
  lm.x_center = standardizer.center;
  lm.x_scale = standardizer.scale;
  lm.main.assign(p, 0.0);
  lm.intercept = step1.intercept + step4.intercept;
  for (const auto& [k, v] : step1.coefs) lm.main[k] += v;
  for (const auto& [k, v] : step4.coefs) {
    if (k < p) {
      lm.main[k] += v;
    } else {
      const std::size_t j = k - p;
      lm.interactions.push_back({pairs[j].a, pairs[j].b, v});
      lm.intercept -= v * centers[j];
    }
  }
  return lm;
}

namespace {

struct Prepared {
  Standardizer standardizer;
  Matrix xs;
  std::vector<int> folds;
  CvOptions cv;
  ScreenOptions screen;
  ScreenMode mode;
};

Prepared prepare(const Family& family, MatrixView x, std::span<const double> y, const SprinterConfig& cfg) {
  const std::size_t n = x.rows(), p = x.cols();
  if (y.size() != n) throw DimensionError("sprinter_fit: response length does not match the design");
  if (n < 10) throw InputError("sprinter_fit: need at least 10 observations");
  if (p < 2) throw InputError("sprinter_fit: need at least 2 predictors");
  require_finite(x, "design matrix");
  require_finite(y, "response");
  for (std::size_t i = 0; i < n; ++i) {
    if (!family.valid_response(y[i])) {
      throw InputError("response value at row " + std::to_string(i + 1) + " is invalid for the " +
                       std::string(family_name(family.kind)) + " family");
    }
  }
  Prepared pr;
  pr.standardizer = Standardizer::fit(x);
  pr.xs = pr.standardizer.apply(x);
  pr.folds = assign_folds(n, cfg.cv_folds, cfg.seed);
  pr.cv.n_folds = cfg.cv_folds;
  pr.cv.seed = cfg.seed;
  pr.cv.n_lambda = cfg.n_lambda;
  pr.cv.fold_ids = pr.folds;
  pr.cv.workers = cfg.workers;
  pr.cv.path.alpha = cfg.alpha;
  pr.cv.path.early_stop = cfg.early_stop;
  pr.cv.path.audit = cfg.audit;
  pr.screen.include_squares = cfg.include_squares;
  pr.screen.workers = cfg.workers;
  pr.mode = cfg.use_threshold ? ScreenMode::threshold(cfg.eta)
                              : ScreenMode::top_m(cfg.m == 0 ? default_m(n) : cfg.m);
  return pr;
}

std::vector<PairIndex> pairs_of(const ScreenResult& s) {
  std::vector<PairIndex> out;
  out.reserve(s.selected.size());
  for (const auto& e : s.selected) out.push_back(e.pair);
  return out;
}

Matrix with_interactions(MatrixView xs, std::span<const PairIndex> pairs, std::vector<double>* centers) {
  Matrix d(xs.rows(), xs.cols());
  std::copy(xs.data(), xs.data() + xs.rows() * xs.cols(), d.data());
  if (!pairs.empty()) d.append_cols(interaction_matrix(xs, pairs, centers));
  else if (centers) centers->clear();
  return d;
}

bool degenerate_training(const Family& family, std::span<const double> y, std::span<const double> w) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] > 0.0) {
      s += y[i];
      c += 1.0;
    }
  }
  if (c == 0.0) return true;
  const double m = s / c;
  if (family.kind == FamilyKind::kBinomial) return m <= 0.0 || m >= 1.0;
  if (family.kind == FamilyKind::kPoisson) return m <= 0.0;
  return false;
}

double heldout_deviance(const Family& family, const GlmFit& fit, MatrixView d, std::span<const double> y,
                        std::span<const double> offset, std::span<const double> w) {
  double dev = 0.0, cnt = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] != 0.0) continue;
    double t = fit.intercept + (offset.empty() ? 0.0 : offset[i]);
    for (const auto& [k, v] : fit.coefs) t += v * d(i, k);
    dev += unit_deviance(family, family.mean(t), y[i]);
    cnt += 1.0;
  }
  return cnt > 0.0 ? dev / cnt : 0.0;
}

SprinterModel finish(const Family& family, const Prepared& pr, const GlmFit& step1, ScreenResult scr,
                     const GlmFit& step4, std::vector<double> centers) {
  SprinterModel out;
  out.step1 = step1;
  out.pairs = pairs_of(scr);
  out.screen = std::move(scr);
  out.step4 = step4;
  out.interaction_centers = std::move(centers);
  out.lambda1 = step1.lambda;
  out.lambda4 = step4.lambda;
  out.degenerate = out.pairs.empty();
  out.model = assemble_model(family, pr.standardizer, step1, step4, out.pairs, out.interaction_centers);
  return out;
}

SprinterModel fit_sequential(const Family& family, const Prepared& pr, std::span<const double> y) {
  const MatrixView xs = pr.xs.view();
  CvResult cv1 = cv_fit(family, xs, y, {}, pr.cv);
  const GlmFit step1 = cv1.best();
  const std::vector<double> offset = predict(family, step1, xs).theta;
  ScreenResult scr = screen(family, xs, y, offset, pr.mode, pr.screen);
  std::vector<double> centers;
  const auto pairs = pairs_of(scr);
  const Matrix d = with_interactions(xs, pairs, &centers);
  CvResult cv4 = cv_fit(family, d, y, offset, pr.cv);
  SprinterModel out = finish(family, pr, step1, std::move(scr), cv4.best(), std::move(centers));
  out.cv_deviance = cv4.cv_deviance[cv4.best_index];
  out.tuning = Tuning::kSequential;
  return out;
}

SprinterModel fit_joint(const Family& family, const Prepared& pr, std::span<const double> y,
                        const SprinterConfig& cfg) {
  const MatrixView xs = pr.xs.view();
  const std::size_t n = xs.rows();
  PathOptions fold_opt = pr.cv.path;
  fold_opt.early_stop = false;

  const auto grid1_full = make_lambda_grid(family, xs, y, {}, {}, pr.cv.path, cfg.n_lambda);
  const auto path1 = fit_path(family, xs, y, {}, grid1_full, pr.cv.path);
  std::vector<double> grid1(grid1_full.begin(), grid1_full.begin() + static_cast<std::ptrdiff_t>(path1.size()));

  // Evenly spaced subset of the step-1 path.
  std::vector<std::size_t> cand;
  const std::size_t n_cand = std::max<std::size_t>(1, std::min(cfg.joint_lambda1, path1.size()));
  for (std::size_t c = 0; c < n_cand; ++c) {
    const std::size_t idx = n_cand == 1 ? path1.size() - 1 : c * (path1.size() - 1) / (n_cand - 1);
    if (cand.empty() || cand.back() != idx) cand.push_back(idx);
  }

  struct Candidate {
    std::vector<double> offset;
    ScreenResult scr;
    std::vector<double> centers;
    std::vector<double> grid4;
    std::vector<GlmFit> path4;
  };
  std::vector<Candidate> full(cand.size());
  for (std::size_t c = 0; c < cand.size(); ++c) {
    auto& fc = full[c];
    fc.offset = predict(family, path1[cand[c]], xs).theta;
    fc.scr = screen(family, xs, y, fc.offset, pr.mode, pr.screen);
    const auto pairs = pairs_of(fc.scr);
    const Matrix d = with_interactions(xs, pairs, &fc.centers);
    fc.grid4 = make_lambda_grid(family, d, y, fc.offset, {}, pr.cv.path, cfg.n_lambda);
    fc.path4 = fit_path(family, d, y, fc.offset, fc.grid4, pr.cv.path);
    fc.grid4.resize(fc.path4.size());
  }

  const int n_folds = cfg.cv_folds;
  std::vector<std::vector<std::vector<double>>> dev(static_cast<std::size_t>(n_folds));
  std::vector<double> fold_size(static_cast<std::size_t>(n_folds), 0.0);
  std::vector<char> skipped(static_cast<std::size_t>(n_folds), 0);
  ScreenOptions inner_screen = pr.screen;
  inner_screen.workers = 1;

  parallel_for(static_cast<std::size_t>(n_folds), cfg.workers, [&](std::size_t f) {
    std::vector<double> w(n, 0.0);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (pr.folds[i] != static_cast<int>(f)) {
        w[i] = 1.0;
        train.push_back(i);
      } else {
        fold_size[f] += 1.0;
      }
    }
    if (fold_size[f] == 0.0 || degenerate_training(family, y, w)) {
      skipped[f] = 1;
      return;
    }
    const Matrix xs_train = Matrix::select_rows(xs, train);
    std::vector<double> y_train(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) y_train[r] = y[train[r]];
    const auto fold_path1 = fit_path(family, xs_train, y_train, {}, grid1, fold_opt);
    dev[f].resize(cand.size());
    for (std::size_t c = 0; c < cand.size(); ++c) {
      const auto offset = predict(family, fold_path1[cand[c]], xs).theta;
      std::vector<double> off_train(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) off_train[r] = offset[train[r]];
      const ScreenResult scr = screen(family, xs_train, y_train, off_train, pr.mode, inner_screen);
      const auto pairs = pairs_of(scr);
      std::vector<double> centers;
      if (!pairs.empty()) interaction_matrix(xs_train.view(), pairs, &centers);
      Matrix d(n, xs.cols());
      std::copy(xs.data(), xs.data() + n * xs.cols(), d.data());
      if (!pairs.empty()) d.append_cols(interaction_matrix(xs, pairs, std::span<const double>(centers)));
      const auto fits = fit_path(family, Matrix::select_rows(d, train), y_train, off_train, full[c].grid4, fold_opt);
      dev[f][c].resize(fits.size());
      for (std::size_t l = 0; l < fits.size(); ++l) dev[f][c][l] = heldout_deviance(family, fits[l], d, y, offset, w);
    }
  });

  double total = 0.0;
  for (int f = 0; f < n_folds; ++f) {
    if (!skipped[static_cast<std::size_t>(f)]) total += fold_size[static_cast<std::size_t>(f)];
  }
  if (total == 0.0) throw InputError("sprinter_fit: every fold is degenerate (single response class)");

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_c = 0, best_l = 0;
  for (std::size_t c = 0; c < cand.size(); ++c) {
    for (std::size_t l = 0; l < full[c].grid4.size(); ++l) {
      double mean = 0.0;
      for (int f = 0; f < n_folds; ++f) {
        const auto uf = static_cast<std::size_t>(f);
        if (!skipped[uf]) mean += fold_size[uf] * dev[uf][c][l];
      }
      mean /= total;
      if (mean < best) {
        best = mean;
        best_c = c;
        best_l = l;
      }
    }
  }
  auto& win = full[best_c];
  SprinterModel out = finish(family, pr, path1[cand[best_c]], std::move(win.scr), win.path4[best_l],
                             std::move(win.centers));
  out.cv_deviance = best;
  out.tuning = Tuning::kJoint;
  return out;
}

}  // namespace

SprinterModel sprinter_fit(const Family& family, MatrixView x, std::span<const double> y,
                           const SprinterConfig& config) {
  const Prepared pr = prepare(family, x, y, config);
  return config.tuning == Tuning::kJoint ? fit_joint(family, pr, y, config) : fit_sequential(family, pr, y);
}

std::vector<double> sprinter_predict(const SprinterModel& model, MatrixView x_new) {
  return model.model.mean(x_new);
}

}  // namespace sprinter
