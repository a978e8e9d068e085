#include "sprinter/screen.hpp"

#include <cmath>
#include <string>

#include "sprinter/errors.hpp"

namespace sprinter {

std::size_t default_m(std::size_t n) {
  if (n < 2) return 1;
  const double v = std::floor(static_cast<double>(n) / std::log(static_cast<double>(n)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

void interaction_column(MatrixView xs, std::size_t a, std::size_t b, std::span<double> out,
                        double* mean_out) {
  auto ca = xs.col(a), cb = xs.col(b);
  const std::size_t n = xs.rows();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ca[i] * cb[i];
    sum += out[i];
  }
  const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < n; ++i) out[i] -= mean;
  if (mean_out) *mean_out = mean;
}

Matrix interaction_matrix(MatrixView xs, std::span<const PairIndex> pairs, std::vector<double>* centers) {
  Matrix z(xs.rows(), pairs.size());
  if (centers) centers->assign(pairs.size(), 0.0);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    if (pairs[j].a >= xs.cols() || pairs[j].b >= xs.cols()) {
      throw DimensionError("interaction references a column beyond the design");
    }
    double mean = 0.0;
    interaction_column(xs, pairs[j].a, pairs[j].b, z.col(j), &mean);
    if (centers) (*centers)[j] = mean;
  }
  return z;
}

Matrix interaction_matrix(MatrixView xs, std::span<const PairIndex> pairs, std::span<const double> centers) {
  if (centers.size() != pairs.size()) throw DimensionError("interaction centers length mismatch");
  Matrix z(xs.rows(), pairs.size());
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    if (pairs[j].a >= xs.cols() || pairs[j].b >= xs.cols()) {
      throw DimensionError("interaction references a column beyond the design");
    }
    auto ca = xs.col(pairs[j].a), cb = xs.col(pairs[j].b);
    auto out = z.col(j);
    for (std::size_t i = 0; i < xs.rows(); ++i) out[i] = ca[i] * cb[i] - centers[j];
  }
  return z;
}

namespace {

constexpr double kZeroColumn = 1e-20;

// Per-screen precomputation of the offset-only fit, shared by every pair.
class OffsetScorer {
 public:
  OffsetScorer(const Family& family, std::span<const double> y, std::span<const double> offset,
               const Newton1dOptions& opt)
      : family_(family), y_(y), offset_(offset), opt_(opt) {
    const std::size_t n = y.size();
    inv_n_ = 1.0 / static_cast<double>(n);
    resid_.resize(n);
    var_.resize(n);
    value0_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double o = offset.empty() ? 0.0 : offset[i];
      if (family.kind == FamilyKind::kGaussian) {
        resid_[i] = y[i] - o;
      } else {
        resid_[i] = family.mean(o) - y[i];
        var_[i] = family.variance(o);
        value0_ += family.loss(o, y[i]);
      }
    }
    value0_ *= inv_n_;
  }

  double operator()(std::span<const double> z, bool& failed) const {
    const std::size_t n = z.size();
    failed = false;
    if (family_.kind == FamilyKind::kGaussian) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += z[i] * resid_[i];
        den += z[i] * z[i];
      }
      if (den * inv_n_ < kZeroColumn) return 0.0;
      return num / den;
    }
    double g0 = 0.0, h0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g0 += z[i] * resid_[i];
      h0 += z[i] * z[i] * var_[i];
    }
    double zz = 0.0;
    for (std::size_t i = 0; i < n; ++i) zz += z[i] * z[i];
    if (zz * inv_n_ < kZeroColumn) return 0.0;
    NewtonPoint start{value0_, g0 * inv_n_, h0 * inv_n_};
    Newton1dResult r;
    if (family_.kind == FamilyKind::kBinomial) {
      r = newton1d([&](double g) { return eval_binomial(z, g); }, opt_, 0.0, start);
    } else {
      r = newton1d([&](double g) { return eval_poisson(z, g); }, opt_, 0.0, start);
    }
    failed = !r.converged || saturated(z, r.x);
    return r.x;
  }

 private:
  double off(std::size_t i) const { return offset_.empty() ? 0.0 : offset_[i]; }

  // A stationary point reached only through the theta clamp is a diverging MLE.
  bool saturated(std::span<const double> z, double g) const {
    const double clamp = family_.theta_clamp;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::abs(off(i) + z[i] * g) >= clamp) return true;
    }
    return false;
  }

  NewtonPoint eval_binomial(std::span<const double> z, double g) const {
    const double clamp = family_.theta_clamp;
    double value = 0.0, grad = 0.0, hess = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double t = std::clamp(off(i) + z[i] * g, -clamp, clamp);
      const double e = std::exp(-std::abs(t));
      const double mu = t >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      value += std::max(t, 0.0) + std::log1p(e) - t * y_[i];
      grad += z[i] * (mu - y_[i]);
      hess += z[i] * z[i] * mu * (1.0 - mu);
    }
    return {value * inv_n_, grad * inv_n_, hess * inv_n_};
  }

  NewtonPoint eval_poisson(std::span<const double> z, double g) const {
    const double clamp = family_.theta_clamp;
    double value = 0.0, grad = 0.0, hess = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double t = std::clamp(off(i) + z[i] * g, -clamp, clamp);
      const double mu = std::exp(t);
      value += mu - t * y_[i];
      grad += z[i] * (mu - y_[i]);
      hess += z[i] * z[i] * mu;
    }
    return {value * inv_n_, grad * inv_n_, hess * inv_n_};
  }

  const Family& family_;
  std::span<const double> y_;
  std::span<const double> offset_;
  Newton1dOptions opt_;
  std::vector<double> resid_;
  std::vector<double> var_;
  double value0_ = 0.0;
  double inv_n_ = 0.0;
};

void check_inputs(const Family& family, std::size_t n, std::span<const double> y,
                  std::span<const double> offset) {
  if (y.size() != n) throw DimensionError("screen: response length does not match the design");
  if (!offset.empty() && offset.size() != n) throw DimensionError("screen: offset length mismatch");
  if (n == 0) throw InputError("screen: no observations");
  require_finite(y, "response");
  require_finite(offset, "offset");
  for (std::size_t i = 0; i < n; ++i) {
    if (!family.valid_response(y[i])) {
      throw InputError("screen: response value at row " + std::to_string(i) + " invalid for the " +
                       std::string(family_name(family.kind)) + " family");
    }
  }
}

}  // namespace

double fit_1d_offset_mle(const Family& family, std::span<const double> z, std::span<const double> y,
                         std::span<const double> offset, const Newton1dOptions& options, bool* failed) {
  check_inputs(family, z.size(), y, offset);
  require_finite(z, "interaction column");
  OffsetScorer scorer(family, y, offset, options);
  bool f = false;
  const double g = scorer(z, f);
  if (failed) *failed = f;
  return g;
}

ScreenResult screen(const Family& family, MatrixView xs, std::span<const double> y,
                    std::span<const double> offset, const ScreenMode& mode, const ScreenOptions& options) {
  check_inputs(family, xs.rows(), y, offset);
  require_finite(xs, "design matrix");
  if (mode.kind == ScreenMode::Kind::kThreshold && !(mode.eta >= 0.0)) {
    throw InputError("screen: threshold must be non-negative");
  }
  OffsetScorer shared(family, y, offset, options.newton);
  return detail::scan_pairs(xs, mode, options, [&] { return std::cref(shared); });
}

}  // namespace sprinter
