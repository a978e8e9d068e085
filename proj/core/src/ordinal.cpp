#include "sprinter/ordinal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "sprinter/errors.hpp"
#include "sprinter/parallel.hpp"
#include "sprinter/penalized_glm.hpp"

namespace sprinter {
namespace {

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double soft(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

// Per-observation blocks for one linear predictor. Categories are 0-based
// here (0..k); cutpoint t separates category t from t + 1.
struct ObsTerms {
  explicit ObsTerms(int k)
      : k(k), delta(k), d(k), prob(k + 1), V(k), Wd(k), Wo(k > 0 ? k - 1 : 0) {}

  int k;
  std::vector<double> delta, d, prob, V, Wd, Wo;
  std::size_t floored = 0;

  // Fills V, Wd, Wo and returns log p_y.
  double eval(const double* c, double eta, int y) {
    for (int t = 0; t < k; ++t) {
      delta[t] = sigmoid(c[t] - eta);
      d[t] = delta[t] * sigmoid(eta - c[t]);
    }
    prob[0] = delta[0];
    for (int s = 1; s < k; ++s) prob[s] = delta[s] - delta[s - 1];
    prob[k] = sigmoid(eta - c[k - 1]);
    for (int s = 0; s <= k; ++s) {
      if (!(prob[s] >= kOrdinalProbFloor)) {
        prob[s] = kOrdinalProbFloor;
        ++floored;
      }
    }
    for (int t = 0; t < k; ++t) {
      const double inv0 = 1.0 / prob[t], inv1 = 1.0 / prob[t + 1];
      V[t] = d[t] * ((y == t ? inv0 : 0.0) - (y == t + 1 ? inv1 : 0.0));
      Wd[t] = d[t] * d[t] * (inv0 + inv1);
      if (t + 1 < k) Wo[t] = -d[t] * d[t + 1] * inv1;
    }
    return std::log(prob[y]);
  }

  // (W 1)_t after eval.
  double w1(int t) const {
    double v = Wd[t];
    if (t > 0) v += Wo[t - 1];
    if (t + 1 < k) v += Wo[t];
    return v;
  }

  double sum_v() const {
    double s = 0.0;
    for (int t = 0; t < k; ++t) s += V[t];
    return s;
  }

  double sum_w() const {
    double s = 0.0;
    for (int t = 0; t < k; ++t) s += Wd[t];
    for (int t = 0; t + 1 < k; ++t) s += 2.0 * Wo[t];
    return s;
  }
};

double obs_loglik(const double* c, int k, double eta, int y) {
  double p;
  if (y == 0) {
    p = sigmoid(c[0] - eta);
  } else if (y == k) {
    p = sigmoid(eta - c[k - 1]);
  } else {
    p = sigmoid(c[y] - eta) - sigmoid(c[y - 1] - eta);
  }
  if (!(p >= kOrdinalProbFloor)) p = kOrdinalProbFloor;
  return std::log(p);
}

// Pool-adjacent-violators projection onto non-decreasing sequences.
void isotonic(std::vector<double>& v) {
  bool sorted = true;
  for (std::size_t i = 1; i < v.size(); ++i) sorted = sorted && v[i] > v[i - 1];
  if (sorted) return;
  std::vector<double> level;
  std::vector<std::size_t> count;
  for (double x : v) {
    level.push_back(x);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] >= level.back()) {
      const std::size_t c1 = count.back(), c0 = count[count.size() - 2];
      const double merged = (level[level.size() - 2] * c0 + level.back() * c1) / static_cast<double>(c0 + c1);
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() = c0 + c1;
    }
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < level.size(); ++b) {
    for (std::size_t r = 0; r < count[b]; ++r) v[pos++] = level[b];
  }
}

std::vector<int> zero_based(std::span<const int> y, int n_categories) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 1 || y[i] > n_categories) {
      throw InputError("ordinal response at row " + std::to_string(i + 1) + " is " + std::to_string(y[i]) +
                       "; expected a category in 1.." + std::to_string(n_categories));
    }
    out[i] = y[i] - 1;
  }
  return out;
}

// Weighted, internally standardized problem.
struct Problem {
  std::size_t n = 0, p = 0;
  int k = 0;
  std::vector<int> y;
  std::vector<double> offset;
  std::vector<double> w;      // normalized to sum 1
  std::vector<double> raw_w;
  Matrix xs;
  std::vector<double> center, scale;
  std::vector<char> usable;

  Problem(MatrixView x, std::span<const int> y1, int n_categories, std::span<const double> off,
          std::span<const double> weights)
      : n(x.rows()), p(x.cols()), k(n_categories - 1) {
    if (y1.size() != n) throw DimensionError("ordinal: response length does not match the design");
    if (!off.empty() && off.size() != n) throw DimensionError("ordinal: offset length mismatch");
    if (!weights.empty() && weights.size() != n) throw DimensionError("ordinal: weight length mismatch");
    if (n_categories < 2) throw InputError("ordinal: need at least two categories");
    require_finite(x, "design matrix");
    require_finite(off, "offset");
    y = zero_based(y1, n_categories);
    offset.assign(off.begin(), off.end());
    if (offset.empty()) offset.assign(n, 0.0);
    raw_w.assign(n, 1.0);
    if (!weights.empty()) raw_w.assign(weights.begin(), weights.end());
    double total = 0.0;
    std::vector<double> cat(static_cast<std::size_t>(n_categories), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(raw_w[i] >= 0.0) || !std::isfinite(raw_w[i])) throw InputError("ordinal: weights must be finite and >= 0");
      total += raw_w[i];
      cat[static_cast<std::size_t>(y[i])] += raw_w[i];
    }
    for (int c = 0; c < n_categories; ++c) {
      if (!(cat[static_cast<std::size_t>(c)] > 0.0)) {
        throw InputError("ordinal: category " + std::to_string(c + 1) + " has no training observations");
      }
    }
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = raw_w[i] / total;

    xs = Matrix(n, p);
    center.assign(p, 0.0);
    scale.assign(p, 1.0);
    usable.assign(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
      auto col = x.col(j);
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += w[i] * col[i];
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += w[i] * (col[i] - m) * (col[i] - m);
      const double sd = std::sqrt(v);
      center[j] = m;
      if (!(sd > 1e-12 * (1.0 + std::abs(m)))) continue;
      scale[j] = sd;
      usable[j] = 1;
      auto out = xs.col(j);
      for (std::size_t i = 0; i < n; ++i) out[i] = (col[i] - m) / sd;
    }
  }

  double mean_nll(std::span<const double> c, std::span<const double> eta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      s -= w[i] * obs_loglik(c.data(), k, eta[i], y[i]);
    }
    return s;
  }

  double deviance(std::span<const double> c, std::span<const double> eta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (raw_w[i] == 0.0) continue;
      s -= 2.0 * raw_w[i] * obs_loglik(c.data(), k, eta[i], y[i]);
    }
    return s;
  }
};

struct State {
  std::vector<double> c;    // standardized-scale cutpoints
  std::vector<double> b;    // standardized-scale coefficients
  std::vector<double> eta;  // offset + xs b
};

double penalty(const std::vector<double>& b, double lambda, double alpha) {
  double l1 = 0.0, l2 = 0.0;
  for (double v : b) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  return lambda * (alpha * l1 + (1.0 - alpha) * l2);
}

// Proximal Newton: a quadratic model in (c, b) whose cutpoint block is
// eliminated exactly, coordinate descent on b, then a backtracking step.
struct SolveInfo {
  int iterations = 0;
  bool converged = false;
};

SolveInfo solve(const Problem& pr, double lambda, const OrdinalOptions& opt, State& st, bool fix_b) {
  const std::size_t n = pr.n, p = pr.p;
  const int k = pr.k;
  const double la = lambda * opt.alpha, l2 = 2.0 * lambda * (1.0 - opt.alpha);
  ObsTerms ot(k);
  std::vector<double> r(n), s(n), w1(n * static_cast<std::size_t>(k)), g(p, 0.0);
  Eigen::VectorXd uc(k);
  Eigen::MatrixXd a_mat(k, k);
  std::vector<double> db(p), av(n), sx(n);
  std::vector<double> hjj(p), gt(p);
  std::vector<double> cand_c(static_cast<std::size_t>(k)), cand_b(p), cand_eta(n);
  double obj = pr.mean_nll(st.c, st.eta) + penalty(st.b, lambda, opt.alpha);
  SolveInfo info;
  int stalls = 0;

  for (int it = 0; it < opt.max_outer; ++it) {
    uc.setZero();
    a_mat.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = pr.w[i];
      if (wi == 0.0) {
        r[i] = s[i] = 0.0;
        for (int t = 0; t < k; ++t) w1[i * k + t] = 0.0;
        continue;
      }
      ot.eval(st.c.data(), st.eta[i], pr.y[i]);
      for (int t = 0; t < k; ++t) {
        uc[t] += wi * ot.V[t];
        a_mat(t, t) += wi * ot.Wd[t];
        if (t + 1 < k) {
          a_mat(t, t + 1) += wi * ot.Wo[t];
          a_mat(t + 1, t) += wi * ot.Wo[t];
        }
        w1[i * k + t] = wi * ot.w1(t);
      }
      r[i] = wi * ot.sum_v();
      s[i] = wi * ot.sum_w();
    }
    double kkt = uc.cwiseAbs().maxCoeff();
    if (!fix_b) {
      for (std::size_t j = 0; j < p; ++j) {
        if (!pr.usable[j]) continue;
        auto col = pr.xs.col(j);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += r[i] * col[i];
        g[j] = v;
        const double bj = st.b[j];
        const double viol = bj != 0.0 ? std::abs(v + l2 * bj + (bj > 0.0 ? la : -la))
                                       : std::max(0.0, std::abs(v) - la);
        kkt = std::max(kkt, viol);
      }
    }
    info.iterations = it;
    if (kkt <= opt.kkt_tol) {
      info.converged = true;
      return info;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(a_mat);
    if (llt.info() != Eigen::Success) {
      a_mat.diagonal().array() += 1e-10;
      llt.compute(a_mat);
      if (llt.info() != Eigen::Success) throw NumericalError("ordinal: cutpoint information is singular");
    }
    const Eigen::VectorXd ainv_uc = llt.solve(uc);
    std::fill(db.begin(), db.end(), 0.0);
    std::fill(av.begin(), av.end(), 0.0);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd bmat, ainv_b;

    if (!fix_b) {
      bmat = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(p));
      for (std::size_t j = 0; j < p; ++j) {
        if (!pr.usable[j]) continue;
        auto col = pr.xs.col(j);
        double hc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = col[i];
          hc += s[i] * x * x;
          for (int t = 0; t < k; ++t) bmat(t, static_cast<Eigen::Index>(j)) -= w1[i * k + t] * x;
        }
        hjj[j] = hc;
      }
      ainv_b = llt.solve(bmat);
      for (std::size_t j = 0; j < p; ++j) {
        if (!pr.usable[j]) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        hjj[j] = std::max(hjj[j] - bmat.col(jj).dot(ainv_b.col(jj)), 1e-12);
        gt[j] = g[j] + bmat.col(jj).dot(ainv_uc);
      }

      auto coord = [&](std::size_t j) {
        auto col = pr.xs.col(j);
        const auto jj = static_cast<Eigen::Index>(j);
        double grad = gt[j] - ainv_b.col(jj).dot(u);
        for (std::size_t i = 0; i < n; ++i) grad += s[i] * col[i] * av[i];
        const double cur = st.b[j] + db[j];
        const double v = soft(hjj[j] * cur - grad, la) / (hjj[j] + l2);
        const double t = v - cur;
        if (t == 0.0) return 0.0;
        db[j] += t;
        for (std::size_t i = 0; i < n; ++i) av[i] += t * col[i];
        u += t * bmat.col(jj);
        return hjj[j] * t * t;
      };

      std::vector<std::size_t> active;
      for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double change = 0.0;
        active.clear();
        for (std::size_t j = 0; j < p; ++j) {
          if (!pr.usable[j]) continue;
          change = std::max(change, coord(j));
          if (st.b[j] + db[j] != 0.0) active.push_back(j);
        }
        if (change < opt.tol) break;
        for (int inner = 0; inner < opt.max_sweeps; ++inner) {
          double ch = 0.0;
          for (std::size_t j : active) ch = std::max(ch, coord(j));
          if (ch < opt.tol) break;
        }
      }
    }

    const Eigen::VectorXd dc = llt.solve(uc - u);
    double step = 1.0;
    bool accepted = false;
    double cand_obj = obj;
    for (int h = 0; h < 40; ++h) {
      for (int t = 0; t < k; ++t) cand_c[t] = st.c[t] + step * dc[t];
      isotonic(cand_c);
      for (std::size_t j = 0; j < p; ++j) cand_b[j] = st.b[j] + step * db[j];
      for (std::size_t i = 0; i < n; ++i) cand_eta[i] = st.eta[i] + step * av[i];
      cand_obj = pr.mean_nll(cand_c, cand_eta) + penalty(cand_b, lambda, opt.alpha);
      if (cand_obj <= obj) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      info.iterations = it + 1;
      return info;
    }
    double move = 0.0;
    for (int t = 0; t < k; ++t) move = std::max(move, std::abs(cand_c[t] - st.c[t]));
    for (std::size_t j = 0; j < p; ++j) move = std::max(move, std::abs(cand_b[j] - st.b[j]));
    st.c = cand_c;
    st.b = cand_b;
    st.eta = cand_eta;
    obj = cand_obj;
    if (move < 1e-15) {
      if (++stalls > 3) {
        info.iterations = it + 1;
        return info;
      }
    } else {
      stalls = 0;
    }
  }
  info.iterations = opt.max_outer;
  return info;
}

State null_state(const Problem& pr, const OrdinalOptions& opt) {
  State st;
  st.b.assign(pr.p, 0.0);
  st.eta = pr.offset;
  st.c.assign(static_cast<std::size_t>(pr.k), 0.0);
  double cum = 0.0;
  std::vector<double> mass(static_cast<std::size_t>(pr.k) + 1, 0.0);
  for (std::size_t i = 0; i < pr.n; ++i) mass[static_cast<std::size_t>(pr.y[i])] += pr.w[i];
  for (int t = 0; t < pr.k; ++t) {
    cum += mass[static_cast<std::size_t>(t)];
    const double f = std::clamp(cum, 1e-10, 1.0 - 1e-10);
    st.c[t] = std::log(f / (1.0 - f));
  }
  solve(pr, 0.0, opt, st, true);
  return st;
}

std::vector<double> gradient_at(const Problem& pr, const State& st) {
  ObsTerms ot(pr.k);
  std::vector<double> r(pr.n, 0.0), g(pr.p, 0.0);
  for (std::size_t i = 0; i < pr.n; ++i) {
    if (pr.w[i] == 0.0) continue;
    ot.eval(st.c.data(), st.eta[i], pr.y[i]);
    r[i] = pr.w[i] * ot.sum_v();
  }
  for (std::size_t j = 0; j < pr.p; ++j) {
    if (!pr.usable[j]) continue;
    auto col = pr.xs.col(j);
    double v = 0.0;
    for (std::size_t i = 0; i < pr.n; ++i) v += r[i] * col[i];
    g[j] = v;
  }
  return g;
}

OrdinalFit to_fit(const Problem& pr, const State& st, double lambda, const OrdinalOptions& opt, SolveInfo si) {
  OrdinalFit f;
  f.lambda = lambda;
  f.alpha = opt.alpha;
  f.converged = si.converged;
  f.n_iter = si.iterations;
  f.objective = pr.mean_nll(st.c, st.eta) + penalty(st.b, lambda, opt.alpha);
  f.deviance = pr.deviance(st.c, st.eta);
  double shift = 0.0;
  for (std::size_t j = 0; j < pr.p; ++j) {
    if (st.b[j] == 0.0) continue;
    const double v = st.b[j] / pr.scale[j];
    f.coefs.emplace_back(j, v);
    shift += v * pr.center[j];
  }
  f.cutpoints = st.c;
  for (double& c : f.cutpoints) c += shift;
  return f;
}

double lambda_max_of(const Problem& pr, const State& null, const OrdinalOptions& opt) {
  const auto g = gradient_at(pr, null);
  double m = 0.0;
  for (std::size_t j = 0; j < pr.p; ++j) {
    if (pr.usable[j]) m = std::max(m, std::abs(g[j]));
  }
  return m / std::max(opt.alpha, 1e-3);
}

std::vector<double> grid_of(const Problem& pr, double lmax, std::size_t n_lambda) {
  if (n_lambda == 0) throw InputError("lambda grid needs at least one point");
  if (!(lmax > 0.0)) lmax = 1e-6;
  const std::size_t n_obs =
      static_cast<std::size_t>(std::count_if(pr.raw_w.begin(), pr.raw_w.end(), [](double v) { return v > 0.0; }));
  const double ratio = n_obs > pr.p ? 1e-4 : 1e-2;
  std::vector<double> grid(n_lambda, lmax);
  if (n_lambda == 1) return grid;
  const double step = std::log(ratio) / static_cast<double>(n_lambda - 1);
  for (std::size_t l = 0; l < n_lambda; ++l) grid[l] = lmax * std::exp(step * static_cast<double>(l));
  return grid;
}

std::vector<OrdinalFit> run_path(const Problem& pr, const OrdinalOptions& opt, std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] < grid[i - 1])) throw InputError("lambda grid must be strictly decreasing");
  }
  State st = null_state(pr, opt);
  const double null_dev = pr.deviance(st.c, st.eta);
  std::vector<OrdinalFit> out;
  out.reserve(grid.size());
  double prev_ratio = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    SolveInfo si = solve(pr, grid[l], opt, st, false);
    out.push_back(to_fit(pr, st, grid[l], opt, si));
    const double ratio = null_dev > 0.0 ? 1.0 - out.back().deviance / null_dev : 1.0;
    if (opt.early_stop && l > 0 && (ratio > 0.999 || ratio - prev_ratio < 1e-5 * ratio)) break;
    prev_ratio = ratio;
  }
  return out;
}

// Cutpoints fixed; the free scalar multiplies one interaction column.
struct ScreenShared {
  std::vector<double> c;
  std::vector<int> y;
  std::span<const double> offset;
  std::vector<double> r0, s0;
  double value0 = 0.0;
  double inv_n = 0.0;
  Newton1dOptions newton;
};

class OrdinalScorer {
 public:
  explicit OrdinalScorer(const ScreenShared& sh) : sh_(sh), ot_(static_cast<int>(sh.c.size())) {}

  double operator()(std::span<const double> z, bool& failed) {
    failed = false;
    const std::size_t n = z.size();
    double zz = 0.0, g0 = 0.0, h0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      zz += z[i] * z[i];
      g0 += z[i] * sh_.r0[i];
      h0 += z[i] * z[i] * sh_.s0[i];
    }
    if (zz * sh_.inv_n < 1e-20) return 0.0;
    NewtonPoint start{sh_.value0, g0 * sh_.inv_n, h0 * sh_.inv_n};
    auto r = newton1d([&](double gam) { return eval(z, gam); }, sh_.newton, 0.0, start);
    failed = !r.converged;
    return r.x;
  }

 private:
  NewtonPoint eval(std::span<const double> z, double gam) {
    double value = 0.0, grad = 0.0, hess = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double eta = sh_.offset[i] + z[i] * gam;
      value -= ot_.eval(sh_.c.data(), eta, sh_.y[i]);
      grad += z[i] * ot_.sum_v();
      hess += z[i] * z[i] * ot_.sum_w();
    }
    return {value * sh_.inv_n, grad * sh_.inv_n, hess * sh_.inv_n};
  }

  const ScreenShared& sh_;
  ObsTerms ot_;
};

}  // namespace

Matrix OrdinalScoreInfo::dense_info() const {
  const std::size_t k = info_cc.rows(), p = info_cb.cols();
  if (info_bb.rows() != p) throw DimensionError("dense_info: the b block was not computed");
  Matrix out(k + p, k + p);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) out(a, b) = info_cc(a, b);
    for (std::size_t j = 0; j < p; ++j) {
      out(a, k + j) = info_cb(a, j);
      out(k + j, a) = info_cb(a, j);
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) out(k + i, k + j) = info_bb(i, j);
  }
  return out;
}

OrdinalScoreInfo ordinal_score_info(MatrixView x, std::span<const int> y, std::span<const double> c,
                                    std::span<const double> b, std::span<const double> offset, bool with_bb) {
  const std::size_t n = x.rows(), p = x.cols();
  const int k = static_cast<int>(c.size());
  if (k < 1) throw InputError("ordinal_score_info: need at least one cutpoint");
  if (b.size() != p) throw DimensionError("ordinal_score_info: coefficient length mismatch");
  if (y.size() != n) throw DimensionError("ordinal_score_info: response length mismatch");
  if (!offset.empty() && offset.size() != n) throw DimensionError("ordinal_score_info: offset length mismatch");
  const auto y0 = zero_based(y, k + 1);

  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
  Eigen::Map<const Mat> X(x.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::Map<const Eigen::VectorXd> B(b.data(), static_cast<Eigen::Index>(p));
  Eigen::VectorXd eta = X * B;
  if (!offset.empty()) eta += Eigen::Map<const Eigen::VectorXd>(offset.data(), static_cast<Eigen::Index>(n));

  OrdinalScoreInfo out;
  ObsTerms ot(k);
  Eigen::VectorXd r(n), sq(n);
  Mat w1(static_cast<Eigen::Index>(n), k);
  Eigen::VectorXd uc = Eigen::VectorXd::Zero(k);
  Mat cc = Mat::Zero(k, k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.loglik += ot.eval(c.data(), eta[ii], y0[i]);
    for (int t = 0; t < k; ++t) {
      uc[t] += ot.V[t];
      cc(t, t) += ot.Wd[t];
      if (t + 1 < k) {
        cc(t, t + 1) += ot.Wo[t];
        cc(t + 1, t) += ot.Wo[t];
      }
      w1(ii, t) = ot.w1(t);
    }
    r[ii] = ot.sum_v();
    sq[ii] = std::sqrt(std::max(ot.sum_w(), 0.0));
  }
  out.floored = ot.floored;

  out.score.resize(static_cast<std::size_t>(k) + p);
  for (int t = 0; t < k; ++t) out.score[t] = uc[t];
  const Eigen::VectorXd sb = -(X.transpose() * r);
  for (std::size_t j = 0; j < p; ++j) out.score[k + j] = sb[static_cast<Eigen::Index>(j)];

  out.info_cc = Matrix(k, k);
  Eigen::Map<Mat>(out.info_cc.data(), k, k) = cc;
  out.info_cb = Matrix(k, p);
  Eigen::Map<Mat>(out.info_cb.data(), k, static_cast<Eigen::Index>(p)) = -(w1.transpose() * X);
  if (with_bb) {
    const Mat xw = sq.asDiagonal() * X;
    Mat bb = Mat::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    bb.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
    out.info_bb = Matrix(p, p);
    Eigen::Map<Mat>(out.info_bb.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) =
        bb.selfadjointView<Eigen::Lower>();
  }
  return out;
}

double OrdinalFit::coef(std::size_t k) const {
  for (const auto& [j, v] : coefs) {
    if (j == k) return v;
  }
  return 0.0;
}

std::vector<double> OrdinalFit::dense(std::size_t p) const {
  std::vector<double> out(p, 0.0);
  for (const auto& [j, v] : coefs) {
    if (j < p) out[j] = v;
  }
  return out;
}

int ordinal_categories(std::span<const int> y) {
  if (y.empty()) throw InputError("ordinal: empty response");
  int K = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 1) {
      throw InputError("ordinal response at row " + std::to_string(i + 1) + " is " + std::to_string(y[i]) +
                       "; categories are labelled 1..K");
    }
    K = std::max(K, y[i]);
  }
  if (K < 2) throw InputError("ordinal: the response has a single category");
  std::vector<char> seen(static_cast<std::size_t>(K) + 1, 0);
  for (int v : y) seen[static_cast<std::size_t>(v)] = 1;
  for (int c = 1; c <= K; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw InputError("ordinal: category " + std::to_string(c) + " has no observations");
    }
  }
  return K;
}

double ordinal_lambda_max(MatrixView x, std::span<const int> y, int n_categories, std::span<const double> offset,
                          std::span<const double> weights, const OrdinalOptions& options) {
  Problem pr(x, y, n_categories, offset, weights);
  return lambda_max_of(pr, null_state(pr, options), options);
}

std::vector<double> ordinal_lambda_grid(MatrixView x, std::span<const int> y, int n_categories,
                                        std::span<const double> offset, std::span<const double> weights,
                                        const OrdinalOptions& options, std::size_t n_lambda) {
  Problem pr(x, y, n_categories, offset, weights);
  return grid_of(pr, lambda_max_of(pr, null_state(pr, options), options), n_lambda);
}

std::vector<OrdinalFit> fit_ordinal_path(MatrixView x, std::span<const int> y, int n_categories,
                                         std::span<const double> offset, std::span<const double> lambda_grid,
                                         const OrdinalOptions& options, std::span<const double> weights) {
  Problem pr(x, y, n_categories, offset, weights);
  return run_path(pr, options, lambda_grid);
}

OrdinalCvResult fit_ordinalnet(MatrixView x, std::span<const int> y, std::span<const double> offset,
                               const OrdinalCvOptions& options) {
  const std::size_t n = x.rows();
  const int K = ordinal_categories(y);
  const auto folds = options.fold_ids.empty() ? assign_folds(n, options.n_folds, options.seed) : options.fold_ids;
  if (folds.size() != n) throw DimensionError("fit_ordinalnet: fold id length mismatch");
  const int n_folds = *std::max_element(folds.begin(), folds.end()) + 1;
  if (n_folds < 2) throw InputError("cross-validation needs at least 2 folds");

  OrdinalCvResult res;
  {
    Problem pr(x, y, K, offset, {});
    res.lambda_grid = options.lambda_grid.empty()
                          ? grid_of(pr, lambda_max_of(pr, null_state(pr, options.path), options.path), options.n_lambda)
                          : options.lambda_grid;
    res.path = run_path(pr, options.path, res.lambda_grid);
  }
  res.lambda_grid.resize(res.path.size());
  const std::size_t L = res.lambda_grid.size();

  OrdinalOptions fold_opt = options.path;
  fold_opt.early_stop = false;
  std::vector<std::vector<double>> fold_dev(static_cast<std::size_t>(n_folds));
  std::vector<double> fold_size(static_cast<std::size_t>(n_folds), 0.0);
  std::vector<char> skipped(static_cast<std::size_t>(n_folds), 0);

  parallel_for(static_cast<std::size_t>(n_folds), options.workers, [&](std::size_t f) {
    std::vector<double> w(n, 0.0);
    std::vector<char> seen(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (folds[i] != static_cast<int>(f)) {
        w[i] = 1.0;
        seen[static_cast<std::size_t>(y[i] - 1)] = 1;
      } else {
        fold_size[f] += 1.0;
      }
    }
    if (fold_size[f] == 0.0 || std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      skipped[f] = 1;
      return;
    }
    const auto fits = fit_ordinal_path(x, y, K, offset, res.lambda_grid, fold_opt, w);
    fold_dev[f].assign(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
      const auto& fit = fits[l];
      double dev = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (w[i] != 0.0) continue;
        double eta = offset.empty() ? 0.0 : offset[i];
        for (const auto& [j, v] : fit.coefs) eta += v * x(i, j);
        dev -= 2.0 * obs_loglik(fit.cutpoints.data(), K - 1, eta, y[i] - 1);
      }
      fold_dev[f][l] = dev / fold_size[f];
    }
  });

  double total = 0.0;
  for (int f = 0; f < n_folds; ++f) {
    if (skipped[static_cast<std::size_t>(f)]) {
      ++res.skipped_folds;
    } else {
      total += fold_size[static_cast<std::size_t>(f)];
    }
  }
  if (total == 0.0) throw InputError("fit_ordinalnet: every fold misses a category in its training rows");
  res.cv_deviance.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    double m = 0.0;
    for (int f = 0; f < n_folds; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      if (!skipped[uf]) m += fold_size[uf] * fold_dev[uf][l];
    }
    res.cv_deviance[l] = m / total;
  }
  res.best_index = static_cast<std::size_t>(
      std::min_element(res.cv_deviance.begin(), res.cv_deviance.end()) - res.cv_deviance.begin());
  res.lambda_min = res.lambda_grid[res.best_index];
  return res;
}

std::vector<double> ordinal_eta(const OrdinalFit& fit, MatrixView x, std::span<const double> offset) {
  const std::size_t n = x.rows();
  if (!offset.empty() && offset.size() != n) throw DimensionError("ordinal_eta: offset length mismatch");
  std::vector<double> eta(n, 0.0);
  if (!offset.empty()) eta.assign(offset.begin(), offset.end());
  for (const auto& [j, v] : fit.coefs) {
    if (j >= x.cols()) throw DimensionError("ordinal_eta: fit uses a column beyond the design");
    auto col = x.col(j);
    for (std::size_t i = 0; i < n; ++i) eta[i] += v * col[i];
  }
  return eta;
}

Matrix ordinal_probabilities(const LinearModel& model, MatrixView x) {
  if (model.cutpoints.empty()) throw InputError("ordinal_probabilities: model has no cutpoints");
  const auto eta = model.theta(x);
  const std::size_t n = x.rows(), k = model.cutpoints.size();
  Matrix out(n, k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double prev = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double d = sigmoid(model.cutpoints[t] - eta[i]);
      out(i, t) = std::max(d - prev, 0.0);
      prev = d;
    }
    out(i, k) = sigmoid(eta[i] - model.cutpoints[k - 1]);
  }
  return out;
}

ScreenResult ordinal_screen(MatrixView xs, std::span<const int> y, std::span<const double> cutpoints,
                            std::span<const double> offset, const ScreenMode& mode, const ScreenOptions& options) {
  const std::size_t n = xs.rows();
  if (y.size() != n) throw DimensionError("ordinal_screen: response length does not match the design");
  if (offset.size() != n) throw DimensionError("ordinal_screen: offset length mismatch");
  if (cutpoints.empty()) throw InputError("ordinal_screen: need at least one cutpoint");
  if (n == 0) throw InputError("ordinal_screen: no observations");
  require_finite(xs, "design matrix");
  require_finite(offset, "offset");
  require_finite(cutpoints, "cutpoints");
  if (mode.kind == ScreenMode::Kind::kThreshold && !(mode.eta >= 0.0)) {
    throw InputError("screen: threshold must be non-negative");
  }
  const int k = static_cast<int>(cutpoints.size());
  ScreenShared sh;
  sh.c.assign(cutpoints.begin(), cutpoints.end());
  sh.y = zero_based(y, k + 1);
  sh.offset = offset;
  sh.inv_n = 1.0 / static_cast<double>(n);
  sh.newton = options.newton;
  sh.r0.resize(n);
  sh.s0.resize(n);
  ObsTerms ot(k);
  for (std::size_t i = 0; i < n; ++i) {
    sh.value0 -= ot.eval(sh.c.data(), offset[i], sh.y[i]);
    sh.r0[i] = ot.sum_v();
    sh.s0[i] = ot.sum_w();
  }
  sh.value0 *= sh.inv_n;
  return detail::scan_pairs(xs, mode, options, [&] { return OrdinalScorer(sh); });
}

OrdinalSprinterModel sprinter_ordinal(MatrixView x, std::span<const int> y, const SprinterConfig& cfg) {
  const std::size_t n = x.rows(), p = x.cols();
  if (y.size() != n) throw DimensionError("sprinter_ordinal: response length does not match the design");
  if (n < 10) throw InputError("sprinter_ordinal: need at least 10 observations");
  if (p < 2) throw InputError("sprinter_ordinal: need at least 2 predictors");
  require_finite(x, "design matrix");
  ordinal_categories(y);

  const Standardizer st = Standardizer::fit(x);
  const Matrix xs = st.apply(x);
  OrdinalCvOptions cv;
  cv.n_folds = cfg.cv_folds;
  cv.seed = cfg.seed;
  cv.n_lambda = cfg.n_lambda;
  cv.fold_ids = assign_folds(n, cfg.cv_folds, cfg.seed);
  cv.workers = cfg.workers;
  cv.path.alpha = cfg.alpha;
  cv.path.early_stop = cfg.early_stop;

  OrdinalSprinterModel out;
  const OrdinalCvResult cv1 = fit_ordinalnet(xs, y, {}, cv);
  out.step1 = cv1.best();
  const std::vector<double> offset = ordinal_eta(out.step1, xs);

  ScreenOptions so;
  so.include_squares = cfg.include_squares;
  so.workers = cfg.workers;
  const ScreenMode mode =
      cfg.use_threshold ? ScreenMode::threshold(cfg.eta) : ScreenMode::top_m(cfg.m == 0 ? default_m(n) : cfg.m);
  out.screen = ordinal_screen(xs, y, out.step1.cutpoints, offset, mode, so);
  for (const auto& e : out.screen.selected) out.pairs.push_back(e.pair);
  out.degenerate = out.pairs.empty();

  Matrix d = xs;
  if (!out.pairs.empty()) d.append_cols(interaction_matrix(xs, out.pairs, &out.interaction_centers));
  const OrdinalCvResult cv4 = fit_ordinalnet(d, y, offset, cv);
  out.step4 = cv4.best();

  LinearModel& lm = out.model;
  lm.family = Family::binomial();
  lm.x_center = st.center;
  lm.x_scale = st.scale;
  lm.main.assign(p, 0.0);
  for (const auto& [j, v] : out.step1.coefs) lm.main[j] += v;
  for (const auto& [j, v] : out.step4.coefs) {
    if (j < p) {
      lm.main[j] += v;
    } else {
      const std::size_t t = j - p;
      lm.interactions.push_back({out.pairs[t].a, out.pairs[t].b, v});
      lm.intercept -= v * out.interaction_centers[t];
    }
  }
  lm.cutpoints = out.step4.cutpoints;
  return out;
}

}  // namespace sprinter
