#include "sprinter/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sprinter/errors.hpp"
#include "sprinter/random.hpp"

namespace sprinter {

Structure parse_structure(std::string_view token) {
  if (token == "mixed") return Structure::kMixed;
  if (token == "hierarchical") return Structure::kHierarchical;
  if (token == "anti_hierarchical" || token == "anti-hierarchical") return Structure::kAntiHierarchical;
  throw InputError("unknown structure '" + std::string(token) +
                   "' (expected mixed, hierarchical or anti_hierarchical)");
}

std::string_view structure_name(Structure s) {
  switch (s) {
    case Structure::kMixed: return "mixed";
    case Structure::kHierarchical: return "hierarchical";
    case Structure::kAntiHierarchical: return "anti_hierarchical";
  }
  return "mixed";
}

PlantedSets planted_sets(FamilyKind family, Structure structure) {
  PlantedSets s;
  if (family == FamilyKind::kPoisson) {
    s.main = {0, 1};
    switch (structure) {
      case Structure::kMixed: s.pairs = {{0, 2}, {3, 4}, {5, 6}}; break;
      case Structure::kHierarchical: s.pairs = {{0, 1}, {0, 2}, {1, 3}}; break;
      case Structure::kAntiHierarchical: s.pairs = {{2, 3}, {4, 5}, {6, 7}}; break;
    }
  } else {
    s.main = {0, 1, 2};
    switch (structure) {
      case Structure::kMixed: s.pairs = {{0, 3}, {1, 4}, {5, 6}, {7, 8}, {9, 10}}; break;
      case Structure::kHierarchical: s.pairs = {{0, 2}, {0, 3}, {1, 4}, {2, 5}, {0, 6}}; break;
      case Structure::kAntiHierarchical: s.pairs = {{3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}}; break;
    }
  }
  return s;
}

namespace {

std::size_t required_p(const PlantedSets& s) {
  std::size_t mx = 0;
  for (auto k : s.main) mx = std::max(mx, k);
  for (auto [a, b] : s.pairs) mx = std::max({mx, a, b});
  return mx + 1;
}

Dataset draw(const SimDesign& d, std::size_t n, Rng& rng) {
  Dataset out;
  out.x = Matrix(n, d.p);
  const double sd = std::sqrt(d.x_variance);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d.p; ++j) out.x(i, j) = sd * rng.normal();
  }
  out.theta = planted_theta(d, out.x);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = out.theta[i];
    switch (d.family.kind) {
      case FamilyKind::kGaussian: out.y[i] = t + rng.normal(); break;
      case FamilyKind::kBinomial: out.y[i] = rng.bernoulli(d.family.mean(t)); break;
      case FamilyKind::kPoisson: {
        const double c = std::clamp(t, -d.poisson_theta_clamp, d.poisson_theta_clamp);
        out.y[i] = static_cast<double>(rng.poisson(std::exp(c)));
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> planted_theta(const SimDesign& design, MatrixView x) {
  const PlantedSets s = planted_sets(design.family.kind, design.structure);
  const std::size_t n = x.rows();
  std::vector<double> theta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0;
    for (auto k : s.main) t += design.beta_value * x(i, k);
    for (auto [a, b] : s.pairs) t += design.gamma_value * x(i, a) * x(i, b);
    theta[i] = t;
  }
  return theta;
}

LinearModel oracle_model(const SimDesign& design) {
  const PlantedSets s = planted_sets(design.family.kind, design.structure);
  LinearModel m;
  m.family = design.family;
  m.x_center.assign(design.p, 0.0);
  m.x_scale.assign(design.p, 1.0);
  m.main.assign(design.p, 0.0);
  for (auto k : s.main) m.main[k] = design.beta_value;
  for (auto [a, b] : s.pairs) m.interactions.push_back({a, b, design.gamma_value});
  return m;
}

SimData simulate(const SimDesign& design) {
  const PlantedSets s = planted_sets(design.family.kind, design.structure);
  if (design.p < required_p(s)) {
    throw InputError("structure '" + std::string(structure_name(design.structure)) + "' needs p >= " +
                     std::to_string(required_p(s)));
  }
  if (design.n == 0) throw InputError("simulate: n must be positive");
  if (!(design.x_variance > 0.0)) throw InputError("simulate: x_variance must be positive");
  const std::size_t n_eval =
      design.n_eval > 0 ? design.n_eval : (design.family.kind == FamilyKind::kPoisson ? 1000 : 100);
  Rng train_rng = Rng::derived(design.seed, 1);
  Rng eval_rng = Rng::derived(design.seed, 2);
  SimData out;
  out.train = draw(design, design.n, train_rng);
  out.eval = draw(design, n_eval, eval_rng);
  return out;
}

std::vector<double> ordinal_design_cutpoints(int categories) {
  if (categories < 2) throw InputError("ordinal design needs at least two categories");
  const int k = categories - 1;
  std::vector<double> c(static_cast<std::size_t>(k), 0.0);
  for (int t = 0; t < k; ++t) c[t] = k == 1 ? 0.0 : -2.0 + 4.0 * t / (k - 1);
  return c;
}

namespace {

OrdinalDataset draw_ordinal(const OrdinalDesign& d, std::size_t n, const std::vector<double>& cuts, Rng& rng) {
  OrdinalDataset out;
  out.x = Matrix(n, d.p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d.p; ++j) out.x(i, j) = rng.normal();
  }
  out.eta.resize(n);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = d.beta_value * (out.x(i, 0) + out.x(i, 1)) + d.gamma_value * out.x(i, 2) * out.x(i, 3);
    out.eta[i] = eta;
    const double u = rng.uniform();
    int cat = static_cast<int>(cuts.size()) + 1;
    for (std::size_t t = 0; t < cuts.size(); ++t) {
      if (u <= 1.0 / (1.0 + std::exp(eta - cuts[t]))) {
        cat = static_cast<int>(t) + 1;
        break;
      }
    }
    out.y[i] = cat;
  }
  return out;
}

}  // namespace

OrdinalSimData simulate_ordinal(const OrdinalDesign& design) {
  if (design.p < 4) throw InputError("ordinal design needs p >= 4");
  if (design.n == 0) throw InputError("simulate: n must be positive");
  const auto cuts = ordinal_design_cutpoints(design.categories);
  Rng train_rng = Rng::derived(design.seed, 1);
  Rng eval_rng = Rng::derived(design.seed, 2);
  OrdinalSimData out;
  out.train = draw_ordinal(design, design.n, cuts, train_rng);
  out.eval = draw_ordinal(design, design.n_eval > 0 ? design.n_eval : design.n, cuts, eval_rng);
  return out;
}

}  // namespace sprinter
