#include "sprinter/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <string>

#include "sprinter/errors.hpp"
#include "sprinter/newton1d.hpp"
#include "sprinter/screen.hpp"

namespace sprinter {

double SourceLaw::kappa3() const {
  switch (kind) {
    case Kind::kGaussian: return 0.0;
    case Kind::kGamma: return 2.0 / std::sqrt(param);
    case Kind::kTwoPoint: return (1.0 - 2.0 * param) / std::sqrt(param * (1.0 - param));
  }
  return 0.0;
}

double SourceLaw::kappa4() const {
  switch (kind) {
    case Kind::kGaussian: return 0.0;
    case Kind::kGamma: return 6.0 / param;
    case Kind::kTwoPoint: {
      const double v = param * (1.0 - param);
      return (1.0 - 6.0 * v) / v;
    }
  }
  return 0.0;
}

double SourceLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::kGaussian: return rng.normal();
    case Kind::kGamma: return (rng.gamma(param) - param) / std::sqrt(param);
    case Kind::kTwoPoint:
      return rng.uniform() < param ? std::sqrt((1.0 - param) / param) : -std::sqrt(param / (1.0 - param));
  }
  return 0.0;
}

XLaw XLaw::standard_gaussian(std::size_t p) {
  XLaw law;
  law.loading = Matrix(p, p);
  for (std::size_t k = 0; k < p; ++k) law.loading(k, k) = 1.0;
  law.sources.assign(p, SourceLaw::gaussian());
  return law;
}

void XLaw::sample(Rng& rng, std::size_t n, Matrix& out) const {
  const std::size_t np = p();
  if (sources.size() != np || loading.cols() != np) throw DimensionError("XLaw: loading/sources mismatch");
  out = Matrix(n, np);
  std::vector<double> w(np);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < np; ++k) w[k] = sources[k].sample(rng);
    for (std::size_t a = 0; a < np; ++a) {
      double v = 0.0;
      for (std::size_t k = 0; k < np; ++k) v += loading(a, k) * w[k];
      out(i, a) = v;
    }
  }
}

PopulationSpec random_population_spec(std::size_t p, FamilyKind family, bool planted, Rng& rng) {
  if (p < 2) throw InputError("random spec needs p >= 2");
  PopulationSpec spec;
  spec.family = Family::of(family);
  spec.x.loading = Matrix(p, p);
  const double spread = 0.4 / std::sqrt(static_cast<double>(p));
  for (std::size_t a = 0; a < p; ++a) {
    spec.x.loading(a, a) = 1.0;
    for (std::size_t k = 0; k < a; ++k) spec.x.loading(a, k) = spread * rng.normal();
  }
  for (std::size_t k = 0; k < p; ++k) {
    switch (rng.uniform_int(3)) {
      case 0: spec.x.sources.push_back(SourceLaw::gaussian()); break;
      case 1: spec.x.sources.push_back(SourceLaw::gamma(2.0 + 6.0 * rng.uniform())); break;
      default: spec.x.sources.push_back(SourceLaw::two_point(0.2 + 0.6 * rng.uniform())); break;
    }
  }
  const double scale = family == FamilyKind::kPoisson ? 0.25 : 0.5;
  spec.beta_star.resize(p);
  for (double& b : spec.beta_star) b = scale * rng.normal();
  if (planted) {
    const std::size_t count = 1 + rng.uniform_int(2);
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t a = rng.uniform_int(p), b = rng.uniform_int(p);
      if (a == b) b = (a + 1) % p;
      if (a > b) std::swap(a, b);
      bool dup = false;
      for (const auto& [pr, v] : spec.gamma_star) dup = dup || (pr.a == a && pr.b == b);
      if (dup) continue;
      const double mag = scale * (1.0 + rng.uniform());
      spec.gamma_star.push_back({{a, b, pair_flat(a, b, p)}, rng.uniform() < 0.5 ? -mag : mag});
    }
  }
  return spec;
}

Moments population_moments(const XLaw& law) {
  const std::size_t p = law.p();
  if (law.sources.size() != p || law.loading.cols() != p) throw DimensionError("XLaw: loading/sources mismatch");
  const Matrix& L = law.loading;
  std::vector<double> k3(p), k4(p);
  for (std::size_t k = 0; k < p; ++k) {
    k3[k] = law.sources[k].kappa3();
    k4[k] = law.sources[k].kappa4();
  }
  Moments m;
  m.sigma = Matrix(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += L(a, k) * L(b, k);
      m.sigma(a, b) = s;
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) m.pairs.push_back({a, b, pair_flat(a, b, p)});
  }
  const std::size_t q = m.pairs.size();
  m.z_mean.resize(q);
  for (std::size_t j = 0; j < q; ++j) m.z_mean[j] = m.sigma(m.pairs[j].a, m.pairs[j].b);

  auto third = [&](std::size_t a, std::size_t b, std::size_t c) {
    double s = 0.0;
    for (std::size_t k = 0; k < p; ++k) s += L(a, k) * L(b, k) * L(c, k) * k3[k];
    return s;
  };
  const Matrix& S = m.sigma;
  auto fourth = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    double s = S(a, b) * S(c, d) + S(a, c) * S(b, d) + S(a, d) * S(b, c);
    for (std::size_t k = 0; k < p; ++k) s += L(a, k) * L(b, k) * L(c, k) * L(d, k) * k4[k];
    return s;
  };
  m.phi = Matrix(p, q);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t j = 0; j < q; ++j) m.phi(c, j) = third(c, m.pairs[j].a, m.pairs[j].b);
  }
  m.psi = Matrix(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = i; j < q; ++j) {
      const auto& u = m.pairs[i];
      const auto& v = m.pairs[j];
      const double val = fourth(u.a, u.b, v.a, v.b) - S(u.a, u.b) * S(v.a, v.b);
      m.psi(i, j) = val;
      m.psi(j, i) = val;
    }
  }
  return m;
}

std::vector<double> spec_theta(const PopulationSpec& spec, MatrixView x, const Moments& moments) {
  const std::size_t n = x.rows(), p = x.cols();
  if (spec.beta_star.size() != p) throw DimensionError("spec: beta_star length mismatch");
  std::vector<double> theta(n, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    if (spec.beta_star[k] == 0.0) continue;
    auto c = x.col(k);
    for (std::size_t i = 0; i < n; ++i) theta[i] += spec.beta_star[k] * c[i];
  }
  for (const auto& [pr, g] : spec.gamma_star) {
    const double mean = moments.z_mean[pr.flat];
    auto ca = x.col(pr.a), cb = x.col(pr.b);
    for (std::size_t i = 0; i < n; ++i) theta[i] += g * (ca[i] * cb[i] - mean);
  }
  return theta;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd to_eigen(const Matrix& m) {
  return Eigen::Map<const MatrixXd>(m.data(), static_cast<Eigen::Index>(m.rows()),
                                    static_cast<Eigen::Index>(m.cols()));
}

VectorXd gamma_vector(const PopulationSpec& spec, std::size_t q) {
  VectorXd g = VectorXd::Zero(static_cast<Eigen::Index>(q));
  for (const auto& [pr, v] : spec.gamma_star) {
    if (pr.flat >= q) throw DimensionError("spec: interaction beyond the design");
    g(static_cast<Eigen::Index>(pr.flat)) += v;
  }
  return g;
}

void validate(const PopulationSpec& spec) {
  const std::size_t p = spec.x.p();
  if (spec.beta_star.size() != p) throw DimensionError("spec: beta_star length mismatch");
  for (const auto& [pr, v] : spec.gamma_star) {
    if (pr.a > pr.b || pr.b >= p || pr.flat != pair_flat(pr.a, pr.b, p)) {
      throw InputError("spec: malformed interaction index");
    }
  }
}

}  // namespace

LinearPopulation linear_population_quantities(const PopulationSpec& spec, double condition_tol) {
  validate(spec);
  const Moments mom = population_moments(spec.x);
  const std::size_t p = spec.x.p(), q = mom.pairs.size();
  const MatrixXd S = to_eigen(mom.sigma), F = to_eigen(mom.phi), P = to_eigen(mom.psi);
  const Eigen::LDLT<MatrixXd> Sf(S);
  if (Sf.info() != Eigen::Success || !(Sf.vectorD().minCoeff() > 1e-12 * S.diagonal().maxCoeff())) {
    throw NumericalError("Cov(X) is singular");
  }
  const VectorXd beta = Eigen::Map<const VectorXd>(spec.beta_star.data(), static_cast<Eigen::Index>(p));
  const VectorXd g = gamma_vector(spec, q);
  const MatrixXd SinvF = Sf.solve(F);

  LinearPopulation out;
  out.pairs = mom.pairs;
  const VectorXd bM = beta + SinvF * g;
  out.beta_M.assign(bM.data(), bM.data() + p);

  // Closed form for gamma_M.
  const VectorXd proj = (P - F.transpose() * SinvF) * g;
  const VectorXd exy = S * beta + F * g;       // E[X Y]
  const VectorXd ezy = F.transpose() * beta + P * g;  // E[Z Y]
  out.gamma_M.resize(q);
  out.gamma_check.resize(q);
  out.cov_L.resize(q);
  out.psi_diag.resize(q);
  out.condition.resize(q);
  out.excluded.assign(q, 0);
  for (std::size_t j = 0; j < q; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double pjj = P(jj, jj);
    out.psi_diag[j] = pjj;
    const double cond = pjj > 0.0 ? 1.0 - F.col(jj).dot(SinvF.col(jj)) / pjj : 0.0;
    out.condition[j] = cond;
    if (!(pjj > condition_tol) || !(cond > condition_tol)) {
      out.excluded[j] = 1;
      ++out.n_excluded;
      out.gamma_M[j] = out.gamma_check[j] = out.cov_L[j] = 0.0;
      continue;
    }
    out.gamma_M[j] = proj(jj) / pjj;

    // Joint least squares over (X, Z_j) from the block normal equations.
    MatrixXd A(static_cast<Eigen::Index>(p) + 1, static_cast<Eigen::Index>(p) + 1);
    A.topLeftCorner(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) = S;
    A.topRightCorner(static_cast<Eigen::Index>(p), 1) = F.col(jj);
    A.bottomLeftCorner(1, static_cast<Eigen::Index>(p)) = F.col(jj).transpose();
    A(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) = pjj;
    VectorXd rhs(static_cast<Eigen::Index>(p) + 1);
    rhs.head(static_cast<Eigen::Index>(p)) = exy;
    rhs(static_cast<Eigen::Index>(p)) = ezy(jj);
    const VectorXd sol = A.partialPivLu().solve(rhs);
    out.gamma_check[j] = sol(static_cast<Eigen::Index>(p));

    // E[(Z_j - E_L(Z_j|X)) (Y - E_L(Y|X))] expanded term by term.
    const VectorXd w = SinvF.col(jj);  // E_L(Z_j|X) = w'X
    out.cov_L[j] = ezy(jj) - F.col(jj).dot(bM) - w.dot(exy) + w.dot(S * bM);

    const double e1 = std::abs(out.cov_L[j] - pjj * out.gamma_M[j]) / std::max(1.0, std::abs(out.cov_L[j]));
    const double e2 = std::abs(out.gamma_check[j] - out.gamma_M[j] / cond) /
                      std::max(1.0, std::abs(out.gamma_check[j]));
    out.max_cov_identity_error = std::max(out.max_cov_identity_error, e1);
    out.max_check_identity_error = std::max(out.max_check_identity_error, e2);
  }
  return out;
}

namespace {

struct McData {
  MatrixXd x;        // N x p
  MatrixXd z;        // N x |pairs|, centered by the population mean
  VectorXd mu_star;  // b'(theta*)
};

McData draw_mc(const PopulationSpec& spec, const Moments& mom, const std::vector<PairIndex>& pairs,
               std::size_t n, Rng& rng) {
  Matrix x;
  spec.x.sample(rng, n, x);
  const auto theta = spec_theta(spec, x, mom);
  McData d;
  d.x = to_eigen(x);
  d.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const double c = mom.z_mean[pairs[j].flat];
    for (std::size_t i = 0; i < n; ++i) {
      d.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, pairs[j].a) * x(i, pairs[j].b) - c;
    }
  }
  d.mu_star.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) d.mu_star(static_cast<Eigen::Index>(i)) = spec.family.mean(theta[i]);
  return d;
}

// Minimizes mean[b(D v) - (D v) mu] over v by damped Newton.
VectorXd population_newton(const Family& fam, const MatrixXd& D, const VectorXd& mu, const char* what) {
  const Eigen::Index n = D.rows(), k = D.cols();
  VectorXd v = VectorXd::Zero(k);
  auto objective = [&](const VectorXd& c) {
    const VectorXd t = D * c;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += fam.cumulant(t(i)) - fam.clamp(t(i)) * mu(i);
    return s / static_cast<double>(n);
  };
  double f = objective(v);
  for (int it = 0; it < 100; ++it) {
    const VectorXd t = D * v;
    VectorXd r(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r(i) = fam.mean(t(i)) - mu(i);
      w(i) = fam.variance(t(i));
    }
    const VectorXd grad = D.transpose() * r / static_cast<double>(n);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-13) return v;
    const MatrixXd H = D.transpose() * w.asDiagonal() * D / static_cast<double>(n);
    const VectorXd step = H.ldlt().solve(-grad);
    // Newton decrement below rounding of the objective.
    if (-grad.dot(step) < 1e-26) return v + step;
    double s = 1.0;
    VectorXd cand = v + step;
    double fc = objective(cand);
    for (int h = 0; h < 50 && !(fc <= f); ++h) {
      s *= 0.5;
      cand = v + s * step;
      fc = objective(cand);
    }
    if (!(fc <= f) || !cand.allFinite()) {
      throw NumericalError(std::string("population Newton for ") + what + " failed: gradient norm " +
                           std::to_string(grad.lpNorm<Eigen::Infinity>()) + " at iteration " + std::to_string(it));
    }
    if ((cand - v).lpNorm<Eigen::Infinity>() < 1e-15 * std::max(1.0, v.lpNorm<Eigen::Infinity>())) return cand;
    v = cand;
    f = fc;
  }
  throw NumericalError(std::string("population Newton for ") + what + " did not converge in 100 iterations");
}

struct McEstimate {
  VectorXd beta_M;
  std::vector<double> gamma_M, gamma_check, cov_L, mean_m_z2;
};

McEstimate estimate(const Family& fam, const McData& d, const MatrixXd& sinv_phi, const std::vector<char>& excluded) {
  const Eigen::Index n = d.x.rows(), p = d.x.cols();
  const std::size_t np = static_cast<std::size_t>(d.z.cols());
  McEstimate e;
  e.beta_M = population_newton(fam, d.x, d.mu_star, "beta_M");
  const VectorXd offset = d.x * e.beta_M;
  e.gamma_M.resize(np);
  e.gamma_check.resize(np);
  e.cov_L.resize(np);
  e.mean_m_z2.resize(np);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < np; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const auto z = d.z.col(jj);
    auto eval = [&](double g) {
      NewtonPoint pt;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = offset(i) + z(i) * g;
        pt.value += fam.cumulant(t) - fam.clamp(t) * d.mu_star(i);
        pt.grad += z(i) * (fam.mean(t) - d.mu_star(i));
        pt.hess += z(i) * z(i) * fam.variance(t);
      }
      pt.value *= inv_n;
      pt.grad *= inv_n;
      pt.hess *= inv_n;
      return pt;
    };
    Newton1dOptions opt;
    opt.grad_tol = 1e-13;
    opt.bound = 1e3;
    const auto r = newton1d(eval, opt);
    double scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) scale += std::abs(z(i)) * d.mu_star(i);
    if (!r.converged && std::abs(r.grad) > 1e-10 * (1.0 + scale * inv_n)) {
      char msg[160];
      std::snprintf(msg, sizeof msg, "population Newton for gamma_M did not converge (score %.3e at %.6g after %d steps)",
                    r.grad, r.x, r.iterations);
      throw NumericalError(msg);
    }
    e.gamma_M[j] = r.x;

    if (excluded[j]) {
      e.gamma_check[j] = std::numeric_limits<double>::quiet_NaN();
    } else {
      MatrixXd D(n, p + 1);
      D.leftCols(p) = d.x;
      D.col(p) = z;
      e.gamma_check[j] = population_newton(fam, D, d.mu_star, "gamma_check")(p);
    }

    const VectorXd zl = z - d.x * sinv_phi.col(jj);
    double cov = 0.0, mz2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double base = fam.mean(offset(i));
      cov += zl(i) * (d.mu_star(i) - base);
      const double dz = z(i) * e.gamma_M[j];
      const double m = std::abs(dz) > 1e-12 ? (fam.mean(offset(i) + dz) - base) / dz : fam.variance(offset(i));
      mz2 += m * z(i) * z(i);
    }
    e.cov_L[j] = cov * inv_n;
    e.mean_m_z2[j] = mz2 * inv_n;
  }
  return e;
}

double batch_se(const std::vector<double>& v) {
  const double b = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / b;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (b - 1.0) / b);
}

}  // namespace

GlmPopulation glm_population_quantities(const PopulationSpec& spec, const std::vector<PairIndex>& pairs,
                                        std::size_t mc_draws, std::size_t batches, std::uint64_t seed) {
  validate(spec);
  if (spec.family.kind == FamilyKind::kGaussian) {
    throw InputError("glm_population_quantities expects a binomial or poisson spec");
  }
  if (batches < 2 || mc_draws < batches) throw InputError("need at least 2 batches and one draw per batch");
  const std::size_t p = spec.x.p();
  for (const auto& pr : pairs) {
    if (pr.b >= p || pr.flat != pair_flat(pr.a, pr.b, p)) throw InputError("malformed pair index");
  }
  const Moments mom = population_moments(spec.x);
  const MatrixXd S = to_eigen(mom.sigma), F = to_eigen(mom.phi);
  MatrixXd F_sel(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    F_sel.col(static_cast<Eigen::Index>(j)) = F.col(static_cast<Eigen::Index>(pairs[j].flat));
  }
  const MatrixXd sinv_phi = S.ldlt().solve(F_sel);
  // Z_j affine in X leaves the joint fit unidentified.
  std::vector<char> excluded(pairs.size(), 0);
  std::vector<double> condition(pairs.size(), 0.0);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double pjj = mom.psi(pairs[j].flat, pairs[j].flat);
    const double cond = pjj > 0.0 ? 1.0 - F_sel.col(jj).dot(sinv_phi.col(jj)) / pjj : 0.0;
    condition[j] = cond;
    excluded[j] = !(pjj > 1e-8) || !(cond > 1e-8);
  }

  const std::size_t per = mc_draws / batches;
  std::vector<McData> parts;
  parts.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    Rng rng = Rng::derived(seed, 0xbac0 + b);
    parts.push_back(draw_mc(spec, mom, pairs, per, rng));
  }
  McData all;
  const auto N = static_cast<Eigen::Index>(per * batches);
  all.x.resize(N, static_cast<Eigen::Index>(p));
  all.z.resize(N, static_cast<Eigen::Index>(pairs.size()));
  all.mu_star.resize(N);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto off = static_cast<Eigen::Index>(b * per);
    const auto len = static_cast<Eigen::Index>(per);
    all.x.middleRows(off, len) = parts[b].x;
    all.z.middleRows(off, len) = parts[b].z;
    all.mu_star.segment(off, len) = parts[b].mu_star;
  }
  const McEstimate full = estimate(spec.family, all, sinv_phi, excluded);
  std::vector<McEstimate> per_batch;
  per_batch.reserve(batches);
  for (const auto& part : parts) per_batch.push_back(estimate(spec.family, part, sinv_phi, excluded));

  GlmPopulation out;
  out.beta_M.assign(full.beta_M.data(), full.beta_M.data() + p);
  out.draws = per * batches;
  out.batches = batches;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    GlmPairQuantities g;
    g.pair = pairs[j];
    g.gamma_M = full.gamma_M[j];
    g.gamma_check = full.gamma_check[j];
    g.cov_L = full.cov_L[j];
    g.mean_m_z2 = full.mean_m_z2[j];
    g.excluded = excluded[j];
    g.condition = condition[j];
    std::vector<double> a, b, c;
    for (const auto& e : per_batch) {
      a.push_back(e.gamma_M[j]);
      b.push_back(e.gamma_check[j]);
      c.push_back(e.cov_L[j]);
    }
    g.gamma_M_se = batch_se(a);
    g.gamma_check_se = batch_se(b);
    g.cov_L_se = batch_se(c);
    out.pairs.push_back(g);
  }
  return out;
}

namespace {

struct EmpiricalDraw {
  Matrix x;
  std::vector<double> y;
  std::vector<double> offset;
};

EmpiricalDraw draw_gaussian(const PopulationSpec& spec, const Moments& mom, const std::vector<double>& beta_M,
                            std::size_t n, Rng& rng) {
  EmpiricalDraw d;
  spec.x.sample(rng, n, d.x);
  const auto theta = spec_theta(spec, d.x, mom);
  d.y.resize(n);
  d.offset.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    d.y[i] = theta[i] + spec.noise_sd * rng.normal();
    for (std::size_t k = 0; k < beta_M.size(); ++k) d.offset[i] += beta_M[k] * d.x(i, k);
  }
  return d;
}

std::vector<double> all_gamma_hat(const EmpiricalDraw& d, std::size_t q) {
  const std::size_t n = d.x.rows(), p = d.x.cols();
  std::vector<double> out(q, 0.0);
  std::vector<double> z(n);
  const Family fam = Family::gaussian();
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      interaction_column(d.x, a, b, z);
      out[pair_flat(a, b, p)] = fit_1d_offset_mle(fam, z, d.y, d.offset);
    }
  }
  return out;
}

void require_gaussian(const PopulationSpec& spec) {
  if (spec.family.kind != FamilyKind::kGaussian) throw InputError("empirical checks use a gaussian spec");
}

}  // namespace

ConvergenceReport empirical_convergence_check(const PopulationSpec& spec, const std::vector<std::size_t>& n_grid,
                                              std::size_t seeds, std::uint64_t seed) {
  require_gaussian(spec);
  const LinearPopulation pop = linear_population_quantities(spec);
  const Moments mom = population_moments(spec.x);
  const std::size_t q = pop.pairs.size();
  ConvergenceReport rep;
  rep.n_grid = n_grid;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    double total = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = Rng::derived(seed, (gi << 32) + s);
      const EmpiricalDraw d = draw_gaussian(spec, mom, pop.beta_M, n_grid[gi], rng);
      const auto gh = all_gamma_hat(d, q);
      double worst = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        if (!pop.excluded[j]) worst = std::max(worst, std::abs(gh[j] - pop.gamma_M[j]));
      }
      total += worst;
    }
    rep.mean_max_error.push_back(total / static_cast<double>(seeds));
  }
  const std::size_t k = n_grid.size();
  if (k >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      mx += std::log(static_cast<double>(n_grid[i]));
      my += std::log(rep.mean_max_error[i]);
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double dx = std::log(static_cast<double>(n_grid[i])) - mx;
      sxy += dx * (std::log(rep.mean_max_error[i]) - my);
      sxx += dx * dx;
    }
    rep.slope = sxy / sxx;
  }
  return rep;
}

GrowthReport threshold_growth_check(const PopulationSpec& spec, const std::vector<std::size_t>& n_grid,
                                    double kappa, double c, std::size_t seeds, std::uint64_t seed) {
  require_gaussian(spec);
  const LinearPopulation pop = linear_population_quantities(spec);
  const Moments mom = population_moments(spec.x);
  const std::size_t q = pop.pairs.size();
  GrowthReport rep;
  rep.n_grid = n_grid;
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const double eta = c * std::pow(static_cast<double>(n_grid[gi]), -kappa);
    double total = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = Rng::derived(seed, (gi << 32) + s + 0x9000);
      const EmpiricalDraw d = draw_gaussian(spec, mom, pop.beta_M, n_grid[gi], rng);
      const auto gh = all_gamma_hat(d, q);
      total += static_cast<double>(std::count_if(gh.begin(), gh.end(), [&](double g) { return std::abs(g) > eta; }));
    }
    rep.eta.push_back(eta);
    rep.mean_selected.push_back(total / static_cast<double>(seeds));
    if (gi > 0 && rep.mean_selected[gi] < rep.mean_selected[gi - 1]) rep.monotone = false;
  }
  return rep;
}

TopHReport top_h_check(const PopulationSpec& spec, std::size_t n, std::size_t h, std::size_t m, std::size_t seeds,
                       std::uint64_t seed) {
  require_gaussian(spec);
  const LinearPopulation pop = linear_population_quantities(spec);
  const Moments mom = population_moments(spec.x);
  const std::size_t q = pop.pairs.size();
  if (h == 0 || h > m || m > q) throw InputError("top_h_check needs 1 <= h <= m <= q");
  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t u, std::size_t v) {
    return std::abs(pop.gamma_M[u]) > std::abs(pop.gamma_M[v]);
  });
  TopHReport rep;
  for (std::size_t i = 0; i < h; ++i) rep.population_top.push_back(pop.pairs[order[i]]);
  rep.gap = h < q ? std::abs(pop.gamma_M[order[h - 1]]) - std::abs(pop.gamma_M[order[h]]) : 0.0;
  ScreenOptions so;
  so.workers = 1;
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng = Rng::derived(seed, s + 0x70b0);
    const EmpiricalDraw d = draw_gaussian(spec, mom, pop.beta_M, n, rng);
    const ScreenResult r = screen(Family::gaussian(), d.x, d.y, d.offset, ScreenMode::top_m(m), so);
    bool all = true;
    for (const auto& t : rep.population_top) {
      all = all && std::any_of(r.selected.begin(), r.selected.end(),
                               [&](const ScreenedPair& e) { return e.pair.flat == t.flat; });
    }
    rep.contained += all ? 1 : 0;
    ++rep.runs;
  }
  return rep;
}

std::string to_json(const LinearPopulation& pop) {
  nlohmann::ordered_json j;
  j["beta_M"] = pop.beta_M;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < pop.pairs.size(); ++k) {
    rows.push_back({{"a", pop.pairs[k].a},
                    {"b", pop.pairs[k].b},
                    {"gamma_M", pop.gamma_M[k]},
                    {"gamma_check", pop.gamma_check[k]},
                    {"cov_L", pop.cov_L[k]},
                    {"psi_jj", pop.psi_diag[k]},
                    {"condition", pop.condition[k]},
                    {"excluded", pop.excluded[k] != 0}});
  }
  j["pairs"] = rows;
  j["max_cov_identity_error"] = pop.max_cov_identity_error;
  j["max_check_identity_error"] = pop.max_check_identity_error;
  j["n_excluded"] = pop.n_excluded;
  return j.dump(2);
}

std::string to_json(const GlmPopulation& pop) {
  nlohmann::ordered_json j;
  j["beta_M"] = pop.beta_M;
  j["draws"] = pop.draws;
  j["batches"] = pop.batches;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& g : pop.pairs) {
    rows.push_back({{"a", g.pair.a},
                    {"b", g.pair.b},
                    {"gamma_M", g.gamma_M},
                    {"gamma_M_se", g.gamma_M_se},
                    {"gamma_check", g.gamma_check},
                    {"gamma_check_se", g.gamma_check_se},
                    {"cov_L", g.cov_L},
                    {"cov_L_se", g.cov_L_se},
                    {"mean_m_z2", g.mean_m_z2},
                    {"condition", g.condition},
                    {"excluded", g.excluded}});
  }
  j["pairs"] = rows;
  return j.dump(2);
}

std::string to_json(const ConvergenceReport& rep) {
  nlohmann::ordered_json j;
  j["n"] = rep.n_grid;
  j["mean_max_error"] = rep.mean_max_error;
  j["slope"] = rep.slope;
  return j.dump(2);
}

std::string to_table(const LinearPopulation& pop) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%5s %5s %14s %14s %14s %10s %s\n", "a", "b", "gamma_M", "gamma_check", "cov_L",
                "psi_jj", "");
  os << line;
  for (std::size_t k = 0; k < pop.pairs.size(); ++k) {
    std::snprintf(line, sizeof line, "%5zu %5zu %14.6g %14.6g %14.6g %10.4g %s\n", pop.pairs[k].a,
                  pop.pairs[k].b, pop.gamma_M[k], pop.gamma_check[k], pop.cov_L[k], pop.psi_diag[k],
                  pop.excluded[k] ? "excluded" : "");
    os << line;
  }
  std::snprintf(line, sizeof line, "identity errors: cov %.3g, check %.3g\n", pop.max_cov_identity_error,
                pop.max_check_identity_error);
  os << line;
  return os.str();
}

}  // namespace sprinter
