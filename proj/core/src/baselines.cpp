#include "sprinter/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sprinter/errors.hpp"

namespace sprinter {

namespace {

Matrix standardized(MatrixView x, Standardizer& st) {
  st = Standardizer::fit(x);
  return st.apply(x);
}

CvOptions cv_options(const SprinterConfig& cfg, std::size_t n) {
  CvOptions cv;
  cv.n_folds = cfg.cv_folds;
  cv.seed = cfg.seed;
  cv.n_lambda = cfg.n_lambda;
  cv.fold_ids = assign_folds(n, cfg.cv_folds, cfg.seed);
  cv.workers = cfg.workers;
  cv.path.alpha = cfg.alpha;
  cv.path.early_stop = cfg.early_stop;
  cv.path.audit = cfg.audit;
  return cv;
}

void check(const Family& family, MatrixView x, std::span<const double> y) {
  if (y.size() != x.rows()) throw DimensionError("response length does not match the design");
  require_finite(x, "design matrix");
  require_finite(y, "response");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!family.valid_response(y[i])) {
      throw InputError("response value at row " + std::to_string(i + 1) + " is invalid for the " +
                       std::string(family_name(family.kind)) + " family");
    }
  }
}

BaselineFit with_pairs(const Family& family, MatrixView x, std::span<const double> y, const SprinterConfig& cfg,
                       std::vector<PairIndex> pairs, ScreenResult scr) {
  Standardizer st;
  const Matrix xs = standardized(x, st);
  BaselineFit out;
  out.pairs = std::move(pairs);
  out.screen = std::move(scr);
  Matrix d = xs;
  if (!out.pairs.empty()) d.append_cols(interaction_matrix(xs, out.pairs, &out.interaction_centers));
  CvResult cv = cv_fit(family, d, y, {}, cv_options(cfg, x.rows()));
  out.fit = cv.best();
  out.model = assemble_model(family, st, GlmFit{}, out.fit, out.pairs, out.interaction_centers);
  return out;
}

class MarginalScorer {
 public:
  MarginalScorer(const Family& family, std::span<const double> y, const Newton1dOptions& opt)
      : family_(family), y_(y), opt_(opt) {}
  double operator()(std::span<const double> z, bool& failed) const {
    const MarginalFit f = fit_marginal(family_, z, y_, opt_);
    failed = !f.converged;
    return f.gamma;
  }

 private:
  const Family& family_;
  std::span<const double> y_;
  Newton1dOptions opt_;
};

}  // namespace

MarginalFit fit_marginal(const Family& family, std::span<const double> z, std::span<const double> y,
                         const Newton1dOptions& options) {
  if (z.size() != y.size()) throw DimensionError("fit_marginal: length mismatch");
  const std::size_t n = z.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double ybar = 0.0, zbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ybar += y[i];
    zbar += z[i];
  }
  ybar *= inv_n;
  zbar *= inv_n;
  double szz = 0.0, szy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    szz += (z[i] - zbar) * (z[i] - zbar);
    szy += (z[i] - zbar) * (y[i] - ybar);
  }
  MarginalFit out;
  if (szz * inv_n < 1e-20) {
    out.intercept = family.kind == FamilyKind::kGaussian ? ybar : 0.0;
    out.converged = true;
    return out;
  }
  if (family.kind == FamilyKind::kGaussian) {
    out.gamma = szy / szz;
    out.intercept = ybar - out.gamma * zbar;
    out.converged = true;
    return out;
  }
  if ((family.kind == FamilyKind::kBinomial && (ybar <= 0.0 || ybar >= 1.0)) ||
      (family.kind == FamilyKind::kPoisson && ybar <= 0.0)) {
    return out;
  }

  auto objective = [&](double b0, double g) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += family.loss(b0 + g * z[i], y[i]);
    return f * inv_n;
  };
  double b0 = family.link(ybar), g = 0.0;
  double f = objective(b0, g);
  const double bound = options.bound;
  for (int it = 0; it < options.max_iter; ++it) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = b0 + g * z[i];
      const double r = family.mean(t) - y[i];
      const double v = family.variance(t);
      g0 += r;
      g1 += z[i] * r;
      h00 += v;
      h01 += v * z[i];
      h11 += v * z[i] * z[i];
    }
    g0 *= inv_n;
    g1 *= inv_n;
    h00 *= inv_n;
    h01 *= inv_n;
    h11 *= inv_n;
    if (std::max(std::abs(g0), std::abs(g1)) < options.grad_tol) {
      out.converged = std::abs(g) < bound;
      break;
    }
    const double det = h00 * h11 - h01 * h01;
    double d0, d1;
    if (det > 1e-300 && std::isfinite(det)) {
      d0 = -(h11 * g0 - h01 * g1) / det;
      d1 = -(h00 * g1 - h01 * g0) / det;
    } else {
      d0 = -g0;
      d1 = -g1;
    }
    double step = 1.0;
    double nb = b0 + d0, ng = std::clamp(g + d1, -bound, bound);
    double nf = objective(nb, ng);
    for (int h = 0; h < 40 && !(nf <= f); ++h) {
      step *= 0.5;
      nb = b0 + step * d0;
      ng = std::clamp(g + step * d1, -bound, bound);
      nf = objective(nb, ng);
    }
    if (!(nf <= f)) break;
    const bool stalled = nb == b0 && ng == g;
    b0 = nb;
    g = ng;
    f = nf;
    if (stalled) break;
  }
  out.intercept = b0;
  out.gamma = g;
  return out;
}

ScreenResult sis_screen(const Family& family, MatrixView xs, std::span<const double> y, const ScreenMode& mode,
                        const ScreenOptions& options) {
  if (y.size() != xs.rows()) throw DimensionError("sis_screen: response length mismatch");
  MarginalScorer scorer(family, y, options.newton);
  return detail::scan_pairs(xs, mode, options, [&] { return std::cref(scorer); });
}

BaselineFit fit_mel(const Family& family, MatrixView x, std::span<const double> y, const SprinterConfig& config) {
  check(family, x, y);
  return with_pairs(family, x, y, config, {}, {});
}

BaselineFit fit_apl(const Family& family, MatrixView x, std::span<const double> y, const SprinterConfig& config,
                    std::size_t p_cap) {
  check(family, x, y);
  const std::size_t p = x.cols();
  if (p > p_cap) {
    throw InputError("APL needs all " + std::to_string(pair_count(p)) + " interaction columns; p = " +
                     std::to_string(p) + " exceeds p_cap = " + std::to_string(p_cap) +
                     ". Use sprinter for this problem size.");
  }
  std::vector<PairIndex> pairs;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = config.include_squares ? a : a + 1; b < p; ++b) pairs.push_back({a, b, pair_flat(a, b, p)});
  }
  return with_pairs(family, x, y, config, std::move(pairs), {});
}

BaselineFit fit_sis(const Family& family, MatrixView x, std::span<const double> y, const SprinterConfig& config) {
  check(family, x, y);
  const Matrix xs = Standardizer::fit(x).apply(x);
  ScreenOptions so;
  so.include_squares = config.include_squares;
  so.workers = config.workers;
  const ScreenMode mode = config.use_threshold ? ScreenMode::threshold(config.eta)
                                               : ScreenMode::top_m(config.m == 0 ? default_m(x.rows()) : config.m);
  ScreenResult scr = sis_screen(family, xs, y, mode, so);
  std::vector<PairIndex> pairs;
  for (const auto& e : scr.selected) pairs.push_back(e.pair);
  return with_pairs(family, x, y, config, std::move(pairs), std::move(scr));
}

}  // namespace sprinter
