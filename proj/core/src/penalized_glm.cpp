#include "sprinter/penalized_glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sprinter/errors.hpp"
#include "sprinter/parallel.hpp"
#include "sprinter/random.hpp"

namespace sprinter {

double GlmFit::coef(std::size_t k) const {
  auto it = std::lower_bound(coefs.begin(), coefs.end(), k,
                             [](const auto& e, std::size_t key) { return e.first < key; });
  return (it != coefs.end() && it->first == k) ? it->second : 0.0;
}

std::vector<double> GlmFit::dense(std::size_t p) const {
  std::vector<double> out(p, 0.0);
  for (const auto& [k, v] : coefs) {
    if (k < p) out[k] = v;
  }
  return out;
}

void FitAudit::record(const GlmFit& fit, const KktReport& kkt) {
  std::lock_guard lock(mutex_);
  if (!fit.converged) {
    ++unconverged_;
    return;
  }
  ++converged_;
  if (!kkt.ok) ++failures_;
  worst_ = std::max(worst_, kkt.max_violation);
}

std::size_t FitAudit::converged_fits() const {
  std::lock_guard lock(mutex_);
  return converged_;
}
std::size_t FitAudit::failures() const {
  std::lock_guard lock(mutex_);
  return failures_;
}
std::size_t FitAudit::unconverged_fits() const {
  std::lock_guard lock(mutex_);
  return unconverged_;
}
double FitAudit::worst_violation() const {
  std::lock_guard lock(mutex_);
  return worst_;
}

namespace {

double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

// Shared preprocessing: normalized weights, standardization, penalty factors.
struct Setup {
  const Family& family;
  MatrixView x;
  std::span<const double> y;
  std::vector<double> offset;  // materialized (zeros when absent)
  std::vector<double> raw_w;   // caller weights (ones when absent)
  std::vector<double> w;       // normalized to sum 1
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<char> usable;
  std::vector<double> pf;
  double alpha;
  std::size_t n_obs = 0;  // rows with positive weight

  Setup(const Family& fam, MatrixView xm, std::span<const double> yv, std::span<const double> off,
        std::span<const double> weights, const PathOptions& opt)
      : family(fam), x(xm), y(yv), alpha(opt.alpha) {
    const std::size_t n = x.rows(), p = x.cols();
    if (y.size() != n) {
      throw DimensionError("penalized_glm: y has " + std::to_string(y.size()) + " entries, X has " +
                           std::to_string(n) + " rows");
    }
    if (!off.empty() && off.size() != n) throw DimensionError("penalized_glm: offset length mismatch");
    if (!weights.empty() && weights.size() != n) throw DimensionError("penalized_glm: weights length mismatch");
    if (!opt.penalty_factors.empty() && opt.penalty_factors.size() != p) {
      throw DimensionError("penalized_glm: penalty_factors length mismatch");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("penalized_glm: alpha must be in [0, 1]");
    require_finite(x, "design matrix");
    require_finite(y, "response");
    offset.assign(n, 0.0);
    if (!off.empty()) {
      require_finite(off, "offset");
      std::copy(off.begin(), off.end(), offset.begin());
    }
    raw_w.assign(n, 1.0);
    if (!weights.empty()) std::copy(weights.begin(), weights.end(), raw_w.begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (raw_w[i] < 0.0 || !std::isfinite(raw_w[i])) throw InputError("penalized_glm: invalid weight");
      total += raw_w[i];
      if (raw_w[i] > 0.0) {
        ++n_obs;
        if (!family.valid_response(y[i])) {
          throw InputError("penalized_glm: response value " + std::to_string(y[i]) + " at row " +
                           std::to_string(i) + " invalid for the " +
                           std::string(family_name(family.kind)) + " family");
        }
      }
    }
    if (total <= 0.0) throw InputError("penalized_glm: all weights are zero");
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = raw_w[i] / total;

    pf = opt.penalty_factors.empty() ? std::vector<double>(p, 1.0) : opt.penalty_factors;
    center.assign(p, 0.0);
    scale.assign(p, 1.0);
    usable.assign(p, 1);
    for (std::size_t k = 0; k < p; ++k) {
      auto c = x.col(k);
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += w[i] * c[i];
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += w[i] * (c[i] - m) * (c[i] - m);
      const double sd = std::sqrt(v);
      center[k] = m;
      if (!(sd > 1e-10 * std::max(1.0, std::abs(m)))) {
        usable[k] = 0;
      } else if (opt.standardize) {
        scale[k] = sd;
      }
    }
  }

  std::size_t n() const { return x.rows(); }
  std::size_t p() const { return x.cols(); }

  // Intercept of the intercept-only model with offset.
  double null_intercept() const {
    const std::size_t n = this->n();
    double ybar = 0.0, obar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ybar += w[i] * y[i];
      obar += w[i] * offset[i];
    }
    if (family.kind == FamilyKind::kGaussian) return ybar - obar;
    if (family.kind == FamilyKind::kBinomial) {
      bool zero = false, one = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        (y[i] == 0.0 ? zero : one) = true;
      }
      if (!zero || !one) throw InputError("binomial response has a single class");
      ybar = std::clamp(ybar, 1e-300, 1.0 - 1e-16);
    }
    if (family.kind == FamilyKind::kPoisson && ybar <= 0.0) {
      throw InputError("poisson response is identically zero");
    }
    double b0 = family.link(ybar) - obar;
    for (int it = 0; it < 100; ++it) {
      double g = 0.0, h = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (w[i] == 0.0) continue;
        const double t = b0 + offset[i];
        g += w[i] * (family.mean(t) - y[i]);
        h += w[i] * family.variance(t);
      }
      const double step = g / std::max(h, 1e-300);
      b0 -= step;
      if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(b0))) break;
    }
    return b0;
  }

  // Gradient of the mean log-likelihood w.r.t. standardized column k given
  // residual weights wr_i = w_i (y_i - mu_i).
  double std_gradient(std::size_t k, std::span<const double> wr, double wr_sum) const {
    auto c = x.col(k);
    double dot = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) dot += wr[i] * c[i];
    return (dot - center[k] * wr_sum) / scale[k];
  }

  double penalty(std::span<const double> beta, double lambda) const {
    double pen = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
      if (beta[k] == 0.0) continue;
      pen += pf[k] * (alpha * std::abs(beta[k]) + 0.5 * (1.0 - alpha) * beta[k] * beta[k]);
    }
    return lambda * pen;
  }

  double total_deviance(std::span<const double> eta) const {
    double dev = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      if (raw_w[i] == 0.0) continue;
      dev += raw_w[i] * unit_deviance(family, family.mean(eta[i] + offset[i]), y[i]);
    }
    return dev;
  }

  double mean_loss(std::span<const double> eta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      if (w[i] == 0.0) continue;
      s += w[i] * family.loss(eta[i] + offset[i], y[i]);
    }
    return s;
  }

  // Standardized coefficients and intercept from an input-scale fit.
  void to_standardized(const GlmFit& fit, std::vector<double>& beta, double& b0) const {
    beta.assign(p(), 0.0);
    b0 = fit.intercept;
    for (const auto& [k, v] : fit.coefs) {
      if (k >= p()) throw DimensionError("fit references column beyond the design");
      beta[k] = v * scale[k];
      b0 += v * center[k];
    }
  }

  GlmFit to_fit(std::span<const double> beta, double b0) const {
    GlmFit fit;
    double intercept = b0;
    for (std::size_t k = 0; k < p(); ++k) {
      if (beta[k] == 0.0) continue;
      const double v = beta[k] / scale[k];
      fit.coefs.emplace_back(k, v);
      intercept -= v * center[k];
    }
    fit.intercept = intercept;
    fit.alpha = alpha;
    return fit;
  }
};

// Linear predictor (without offset) in standardized coordinates.
void compute_eta(const Setup& s, std::span<const double> beta, double b0, std::vector<double>& eta) {
  const std::size_t n = s.n();
  double shift = b0;
  for (std::size_t k = 0; k < s.p(); ++k) {
    if (beta[k] != 0.0) shift -= beta[k] * s.center[k] / s.scale[k];
  }
  eta.assign(n, shift);
  for (std::size_t k = 0; k < s.p(); ++k) {
    if (beta[k] == 0.0) continue;
    const double coef = beta[k] / s.scale[k];
    auto c = s.x.col(k);
    for (std::size_t i = 0; i < n; ++i) eta[i] += coef * c[i];
  }
}

KktReport kkt_check(const Setup& s, std::span<const double> beta, std::span<const double> eta,
                    double lambda, double tol, std::vector<double>* gradient_out) {
  const std::size_t n = s.n();
  std::vector<double> wr(n);
  double wr_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wr[i] = s.w[i] == 0.0 ? 0.0 : s.w[i] * (s.y[i] - s.family.mean(eta[i] + s.offset[i]));
    wr_sum += wr[i];
  }
  KktReport rep;
  rep.worst_column = s.p();
  rep.max_violation = std::abs(wr_sum);
  if (gradient_out) gradient_out->assign(s.p(), 0.0);
  for (std::size_t k = 0; k < s.p(); ++k) {
    if (!s.usable[k]) continue;
    const double g = s.std_gradient(k, wr, wr_sum);
    if (gradient_out) (*gradient_out)[k] = g;
    const double l1 = lambda * s.alpha * s.pf[k];
    double viol;
    if (beta[k] != 0.0) {
      const double sgn = beta[k] > 0.0 ? 1.0 : -1.0;
      viol = std::abs(g - lambda * (1.0 - s.alpha) * s.pf[k] * beta[k] - l1 * sgn);
    } else {
      viol = std::max(0.0, std::abs(g) - l1);
    }
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_column = k;
    }
  }
  rep.ok = rep.max_violation <= tol;
  return rep;
}

// Coordinate-descent state for one quadratic approximation.
class QuadraticSolver {
 public:
  QuadraticSolver(const Setup& s, const PathOptions& opt) : s_(s), opt_(opt) {
    xv_.assign(s.p(), 0.0);
    stamp_.assign(s.p(), 0);
  }

  // Prepares IRLS weights at the current linear predictor.
  void prepare(std::span<const double> eta) {
    const std::size_t n = s_.n();
    W_.resize(n);
    wr_.resize(n);
    sw_ = 0.0;
    wr_sum_ = 0.0;
    const bool gaussian = s_.family.kind == FamilyKind::kGaussian;
    for (std::size_t i = 0; i < n; ++i) {
      if (s_.w[i] == 0.0) {
        W_[i] = 0.0;
        wr_[i] = 0.0;
        continue;
      }
      const double t = eta[i] + s_.offset[i];
      const double v = gaussian ? 1.0 : std::max(s_.family.variance(t), opt_.weight_floor);
      W_[i] = s_.w[i] * v;
      wr_[i] = s_.w[i] * (s_.y[i] - s_.family.mean(t));
      sw_ += W_[i];
      wr_sum_ += wr_[i];
    }
    ++generation_;
  }

  // Runs CD sweeps with active-set cycling; returns sweeps used.
  int solve(std::vector<double>& beta, double& b0, const std::vector<std::size_t>& strong,
            double lambda, double tol, int budget) {
    int sweeps = 0;
    std::vector<std::size_t> active;
    while (sweeps < budget) {
      double change = sweep(beta, b0, strong, lambda);
      ++sweeps;
      if (change < tol) break;
      active.clear();
      for (std::size_t k : strong) {
        if (beta[k] != 0.0) active.push_back(k);
      }
      while (sweeps < budget) {
        change = sweep(beta, b0, active, lambda);
        ++sweeps;
        if (change < tol) break;
      }
    }
    return sweeps;
  }

 private:
  double xv(std::size_t k) {
    if (stamp_[k] == generation_) return xv_[k];
    auto c = s_.x.col(k);
    double swx = 0.0, swxx = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double wx = W_[i] * c[i];
      swx += wx;
      swxx += wx * c[i];
    }
    const double m = s_.center[k], sc = s_.scale[k];
    xv_[k] = (swxx - 2.0 * m * swx + m * m * sw_) / (sc * sc);
    sumwx_.resize(s_.p());
    sumwx_[k] = (swx - m * sw_) / sc;
    stamp_[k] = generation_;
    return xv_[k];
  }

  double update_intercept(double& b0) {
    if (sw_ <= 0.0) return 0.0;
    const double d = wr_sum_ / sw_;
    if (d == 0.0) return 0.0;
    b0 += d;
    for (std::size_t i = 0; i < W_.size(); ++i) wr_[i] -= d * W_[i];
    wr_sum_ = 0.0;
    for (double v : wr_) wr_sum_ += v;
    return std::abs(d);
  }

  double sweep(std::vector<double>& beta, double& b0, const std::vector<std::size_t>& cols,
               double lambda) {
    double max_change = update_intercept(b0);
    for (std::size_t k : cols) {
      const double xvk = xv(k);
      if (xvk <= 0.0) continue;
      const double g = s_.std_gradient(k, wr_, wr_sum_);
      const double old = beta[k];
      const double u = g + xvk * old;
      const double l1 = lambda * s_.alpha * s_.pf[k];
      const double l2 = lambda * (1.0 - s_.alpha) * s_.pf[k];
      const double updated = soft_threshold(u, l1) / (xvk + l2);
      if (updated == old) continue;
      const double d = updated - old;
      beta[k] = updated;
      max_change = std::max(max_change, std::abs(d));
      const double coef = d / s_.scale[k];
      const double m = s_.center[k];
      auto c = s_.x.col(k);
      for (std::size_t i = 0; i < c.size(); ++i) wr_[i] -= coef * W_[i] * (c[i] - m);
      wr_sum_ -= d * sumwx_[k];
    }
    max_change = std::max(max_change, update_intercept(b0));
    return max_change;
  }

  const Setup& s_;
  const PathOptions& opt_;
  std::vector<double> W_, wr_, xv_, sumwx_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t generation_ = 0;
  double sw_ = 0.0;
  double wr_sum_ = 0.0;
};

GlmFit solve_one_lambda(const Setup& s, const PathOptions& opt, double lambda, double prev_lambda,
                        std::vector<double>& beta, double& b0, std::vector<double>& gradient,
                        bool first) {
  const std::size_t p = s.p();
  const bool gaussian = s.family.kind == FamilyKind::kGaussian;

  // Sequential strong rule.
  std::vector<char> in_strong(p, 0);
  std::vector<std::size_t> strong;
  for (std::size_t k = 0; k < p; ++k) {
    if (!s.usable[k]) continue;
    const double thresh = s.alpha * s.pf[k] * (2.0 * lambda - prev_lambda);
    if (beta[k] != 0.0 || first || s.pf[k] == 0.0 || std::abs(gradient[k]) >= thresh) {
      in_strong[k] = 1;
      strong.push_back(k);
    }
  }

  QuadraticSolver qs(s, opt);
  std::vector<double> eta, eta_new, old_beta;
  compute_eta(s, beta, b0, eta);
  double objective = s.mean_loss(eta) + s.penalty(beta, lambda);
  int sweeps = 0;
  double tol = opt.tol;
  KktReport kkt;
  bool done = false;
  while (!done) {
    for (int it = 0; it < opt.max_irls && sweeps < opt.max_iter; ++it) {
      qs.prepare(eta);
      old_beta = beta;
      const double old_b0 = b0;
      sweeps += qs.solve(beta, b0, strong, lambda, tol, opt.max_iter - sweeps);
      compute_eta(s, beta, b0, eta_new);
      double new_obj = s.mean_loss(eta_new) + s.penalty(beta, lambda);
      // Step halving keeps the penalized objective monotone across passes.
      for (int h = 0; h < 30 && !gaussian && new_obj > objective + 1e-14 * std::abs(objective); ++h) {
        for (std::size_t k = 0; k < p; ++k) beta[k] = 0.5 * (beta[k] + old_beta[k]);
        b0 = 0.5 * (b0 + old_b0);
        compute_eta(s, beta, b0, eta_new);
        new_obj = s.mean_loss(eta_new) + s.penalty(beta, lambda);
      }
      eta.swap(eta_new);
      objective = new_obj;
      double change = std::abs(b0 - old_b0);
      for (std::size_t k : strong) change = std::max(change, std::abs(beta[k] - old_beta[k]));
      if (gaussian || change < tol) break;
    }
    kkt = kkt_check(s, beta, eta, lambda, opt.kkt_tol, &gradient);
    // Strong-rule violators outside the working set force another round.
    bool added = false;
    for (std::size_t k = 0; k < p; ++k) {
      if (!s.usable[k] || in_strong[k]) continue;
      if (std::abs(gradient[k]) > lambda * s.alpha * s.pf[k]) {
        in_strong[k] = 1;
        strong.push_back(k);
        added = true;
      }
    }
    if (added && sweeps < opt.max_iter) {
      std::sort(strong.begin(), strong.end());
      continue;
    }
    if (!kkt.ok && sweeps < opt.max_iter && tol > 1e-13) {
      tol *= 0.1;
      continue;
    }
    done = true;
  }

  GlmFit fit = s.to_fit(beta, b0);
  fit.lambda = lambda;
  fit.n_iter = sweeps;
  fit.converged = kkt.ok && sweeps < opt.max_iter;
  fit.deviance = s.total_deviance(eta);
  return fit;
}

std::vector<GlmFit> run_path(const Setup& s, const PathOptions& opt, std::span<const double> grid,
                             bool any_offset) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] < grid[i - 1])) throw InputError("lambda grid must be strictly decreasing");
  }
  const std::size_t p = s.p();
  std::vector<double> beta(p, 0.0);
  double b0 = s.null_intercept();
  std::vector<double> eta;
  compute_eta(s, beta, b0, eta);
  const double null_dev = s.total_deviance(eta);
  std::vector<double> gradient;
  kkt_check(s, beta, eta, 0.0, 0.0, &gradient);

  std::vector<GlmFit> out;
  out.reserve(grid.size());
  double prev_lambda = grid.empty() ? 0.0 : grid[0];
  double prev_ratio = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    GlmFit fit = solve_one_lambda(s, opt, grid[l], prev_lambda, beta, b0, gradient, l == 0);
    fit.offset_used = any_offset;
    fit.null_deviance = null_dev;
    if (opt.audit) {
      GlmFit copy = fit;
      opt.audit->record(copy, kkt_residual(s.family, copy, s.x, s.y,
                                           any_offset ? std::span<const double>(s.offset)
                                                      : std::span<const double>(),
                                           s.raw_w, opt));
    }
    prev_lambda = grid[l];
    const double ratio = null_dev > 0.0 ? 1.0 - fit.deviance / null_dev : 1.0;
    out.push_back(std::move(fit));
    if (opt.early_stop && l > 0 && (ratio > 0.999 || ratio - prev_ratio < 1e-5 * ratio)) break;
    prev_ratio = ratio;
  }
  return out;
}

bool has_nonzero(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [](double d) { return d != 0.0; });
}

}  // namespace

double lambda_max(const Family& family, MatrixView x, std::span<const double> y,
                  std::span<const double> offset, std::span<const double> weights,
                  const PathOptions& options) {
  Setup s(family, x, y, offset, weights, options);
  std::vector<double> beta(s.p(), 0.0), eta, gradient;
  compute_eta(s, beta, s.null_intercept(), eta);
  kkt_check(s, beta, eta, 0.0, 0.0, &gradient);
  const double a = std::max(options.alpha, 1e-3);
  double lmax = 0.0;
  for (std::size_t k = 0; k < s.p(); ++k) {
    if (!s.usable[k] || s.pf[k] <= 0.0) continue;
    lmax = std::max(lmax, std::abs(gradient[k]) / (a * s.pf[k]));
  }
  return lmax;
}

std::vector<double> make_lambda_grid(const Family& family, MatrixView x, std::span<const double> y,
                                     std::span<const double> offset, std::span<const double> weights,
                                     const PathOptions& options, std::size_t n_lambda,
                                     double min_ratio) {
  if (n_lambda == 0) throw InputError("lambda grid needs at least one point");
  double lmax = lambda_max(family, x, y, offset, weights, options);
  if (!(lmax > 0.0)) lmax = 1e-6;
  if (min_ratio <= 0.0) {
    std::size_t n_obs = y.size();
    if (!weights.empty()) {
      n_obs = static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(),
                                                     [](double v) { return v > 0.0; }));
    }
    min_ratio = n_obs > x.cols() ? 1e-4 : 1e-2;
  }
  std::vector<double> grid(n_lambda);
  if (n_lambda == 1) {
    grid[0] = lmax;
    return grid;
  }
  const double step = std::log(min_ratio) / static_cast<double>(n_lambda - 1);
  for (std::size_t l = 0; l < n_lambda; ++l) grid[l] = lmax * std::exp(step * static_cast<double>(l));
  return grid;
}

std::vector<GlmFit> fit_path(const Family& family, MatrixView x, std::span<const double> y,
                             std::span<const double> offset, std::span<const double> lambda_grid,
                             const PathOptions& options, std::span<const double> weights) {
  Setup s(family, x, y, offset, weights, options);
  return run_path(s, options, lambda_grid, has_nonzero(offset));
}

KktReport kkt_residual(const Family& family, const GlmFit& fit, MatrixView x,
                       std::span<const double> y, std::span<const double> offset,
                       std::span<const double> weights, const PathOptions& options) {
  Setup s(family, x, y, offset, weights, options);
  std::vector<double> beta, eta;
  double b0;
  s.to_standardized(fit, beta, b0);
  compute_eta(s, beta, b0, eta);
  return kkt_check(s, beta, eta, fit.lambda, options.kkt_tol, nullptr);
}

double penalized_objective(const Family& family, const GlmFit& fit, MatrixView x,
                           std::span<const double> y, std::span<const double> offset,
                           std::span<const double> weights, const PathOptions& options) {
  Setup s(family, x, y, offset, weights, options);
  std::vector<double> beta, eta;
  double b0;
  s.to_standardized(fit, beta, b0);
  compute_eta(s, beta, b0, eta);
  return s.mean_loss(eta) + s.penalty(beta, fit.lambda);
}

Prediction predict(const Family& family, const GlmFit& fit, MatrixView x,
                   std::span<const double> offset) {
  const std::size_t n = x.rows();
  if (!offset.empty() && offset.size() != n) throw DimensionError("predict: offset length mismatch");
  for (const auto& [k, v] : fit.coefs) {
    if (k >= x.cols()) {
      throw DimensionError("predict: fit uses column " + std::to_string(k) + " but X has " +
                           std::to_string(x.cols()) + " columns");
    }
  }
  Prediction out;
  out.theta.assign(n, fit.intercept);
  for (const auto& [k, v] : fit.coefs) {
    auto c = x.col(k);
    for (std::size_t i = 0; i < n; ++i) out.theta[i] += v * c[i];
  }
  if (!offset.empty()) {
    for (std::size_t i = 0; i < n; ++i) out.theta[i] += offset[i];
  }
  out.mean.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.mean[i] = family.mean(out.theta[i]);
  return out;
}

std::vector<int> assign_folds(std::size_t n, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw InputError("cross-validation needs at least 2 folds");
  if (n < static_cast<std::size_t>(n_folds)) throw InputError("fewer observations than folds");
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  Rng rng = Rng::derived(seed, 0xf01d);
  shuffle(ids, rng);
  return ids;
}

CvResult cv_fit(const Family& family, MatrixView x, std::span<const double> y,
                std::span<const double> offset, const CvOptions& options) {
  const std::size_t n = x.rows();
  CvResult res;
  res.fold_assignment = options.fold_ids.empty() ? assign_folds(n, options.n_folds, options.seed)
                                                 : options.fold_ids;
  if (res.fold_assignment.size() != n) throw DimensionError("cv_fit: fold id length mismatch");
  const int n_folds = *std::max_element(res.fold_assignment.begin(), res.fold_assignment.end()) + 1;
  if (n_folds < 2) throw InputError("cross-validation needs at least 2 folds");

  res.lambda_grid = options.lambda_grid.empty()
                        ? make_lambda_grid(family, x, y, offset, {}, options.path, options.n_lambda)
                        : options.lambda_grid;
  res.path = fit_path(family, x, y, offset, res.lambda_grid, options.path);
  res.lambda_grid.resize(res.path.size());
  const std::size_t L = res.lambda_grid.size();

  PathOptions fold_opt = options.path;
  fold_opt.early_stop = false;
  std::vector<std::vector<double>> fold_dev(static_cast<std::size_t>(n_folds));
  std::vector<double> fold_size(static_cast<std::size_t>(n_folds), 0.0);
  std::vector<char> skipped(static_cast<std::size_t>(n_folds), 0);

  parallel_for(static_cast<std::size_t>(n_folds), options.workers, [&](std::size_t f) {
    std::vector<std::size_t> train;
    double y_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (res.fold_assignment[i] != static_cast<int>(f)) {
        train.push_back(i);
        y_sum += y[i];
      } else {
        fold_size[f] += 1.0;
      }
    }
    if (fold_size[f] == 0.0 || train.empty()) {
      skipped[f] = 1;
      return;
    }
    const double ybar = y_sum / static_cast<double>(train.size());
    if ((family.kind == FamilyKind::kBinomial && (ybar <= 0.0 || ybar >= 1.0)) ||
        (family.kind == FamilyKind::kPoisson && ybar <= 0.0)) {
      skipped[f] = 1;
      return;
    }
    const Matrix x_train = Matrix::select_rows(x, train);
    std::vector<double> y_train(train.size()), off_train;
    for (std::size_t r = 0; r < train.size(); ++r) y_train[r] = y[train[r]];
    if (!offset.empty()) {
      off_train.resize(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) off_train[r] = offset[train[r]];
    }
    auto fits = fit_path(family, x_train, y_train, off_train, res.lambda_grid, fold_opt);
    fold_dev[f].assign(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
      const GlmFit& fit = fits[l];
      double dev = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.fold_assignment[i] != static_cast<int>(f)) continue;
        double t = fit.intercept + (offset.empty() ? 0.0 : offset[i]);
        for (const auto& [k, v] : fit.coefs) t += v * x(i, k);
        dev += unit_deviance(family, family.mean(t), y[i]);
      }
      fold_dev[f][l] = dev / fold_size[f];
    }
  });

  double total = 0.0;
  int used = 0;
  for (int f = 0; f < n_folds; ++f) {
    if (skipped[static_cast<std::size_t>(f)]) {
      ++res.skipped_folds;
    } else {
      total += fold_size[static_cast<std::size_t>(f)];
      ++used;
    }
  }
  if (used == 0) throw InputError("cv_fit: every fold is degenerate (single response class)");

  res.cv_deviance.assign(L, 0.0);
  res.cv_se.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    double mean = 0.0;
    for (int f = 0; f < n_folds; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      if (!skipped[uf]) mean += fold_size[uf] * fold_dev[uf][l];
    }
    mean /= total;
    double var = 0.0;
    for (int f = 0; f < n_folds; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      if (!skipped[uf]) var += fold_size[uf] * (fold_dev[uf][l] - mean) * (fold_dev[uf][l] - mean);
    }
    var /= total;
    res.cv_deviance[l] = mean;
    res.cv_se[l] = used > 1 ? std::sqrt(var / (used - 1)) : 0.0;
  }
  res.best_index = static_cast<std::size_t>(
      std::min_element(res.cv_deviance.begin(), res.cv_deviance.end()) - res.cv_deviance.begin());
  res.lambda_min = res.lambda_grid[res.best_index];
  return res;
}

}  // namespace sprinter
