#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <sprinter/baselines.hpp>
#include <sprinter/metrics.hpp>
#include <sprinter/oracles.hpp>
#include <sprinter/ordinal.hpp>
#include <sprinter/pipeline.hpp>
#include <sprinter/random.hpp>
#include <sprinter/screen.hpp>
#include <sprinter/simulate.hpp>

#include "golden.hpp"
#include "ordinal_naive.hpp"

using namespace sprinter;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double peak_rss_mb() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return double(ru.ru_maxrss) / 1024.0;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[4096];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(int id, const std::string& name, const Outcome& o, double secs, double limit) {
  const bool ok = o.pass && (limit <= 0 || secs < limit);
  if (!ok) ++failures;
  const std::string budget = limit > 0 ? fmt(" of %.0f s", limit) : "";
  std::printf("%s criterion %d (%s): %s; %.1f s%s\n", ok ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs,
              budget.c_str());
  std::fflush(stdout);
}

// Linear population identities on randomized specs.
Outcome linear_identities() {
  Rng rng(101);
  double cov_err = 0.0, check_err = 0.0;
  std::size_t excluded = 0, specs = 0, pairs = 0;
  for (int s = 0; s < 40; ++s) {
    const std::size_t p = 2 + std::size_t(s % 5);
    const PopulationSpec spec = random_population_spec(p, FamilyKind::kGaussian, s % 4 != 0, rng);
    const LinearPopulation pop = linear_population_quantities(spec);
    cov_err = std::max(cov_err, pop.max_cov_identity_error);
    check_err = std::max(check_err, pop.max_check_identity_error);
    excluded += pop.n_excluded;
    pairs += pop.pairs.size();
    ++specs;
  }
  return {cov_err <= 1e-10 && check_err <= 1e-10 && specs >= 20,
          fmt("%zu specs, %zu pairs (%zu excluded), max cov error %.2e, max check error %.2e", specs, pairs,
              excluded, cov_err, check_err)};
}

// Sign agreement of the GLM population quantities for p = 2.
Outcome glm_equivalence() {
  Rng rng(202);
  int good = 0;
  std::string notes;
  for (int s = 0; s < 20; ++s) {
    const bool planted = s % 2 == 1;
    const PopulationSpec spec = random_population_spec(2, FamilyKind::kBinomial, planted, rng);
    std::vector<PairIndex> pairs = {make_pair_index(0, 0, 2), make_pair_index(0, 1, 2), make_pair_index(1, 1, 2)};
    const GlmPopulation pop = glm_population_quantities(spec, pairs, 1000000, 20, 1000 + std::uint64_t(s));
    bool ok = true;
    if (!planted) {
      // An exact zero has zero batch spread; 1e-8 is the solver precision.
      for (const auto& q : pop.pairs) {
        ok = ok && std::abs(q.gamma_M) <= 3.0 * q.gamma_M_se + 1e-8 && std::abs(q.cov_L) <= 3.0 * q.cov_L_se + 1e-8 &&
             (q.excluded || std::abs(q.gamma_check) <= 3.0 * q.gamma_check_se + 1e-8);
        if (!ok) notes += fmt(" null spec %d pair (%zu,%zu): gM %.3g(%.1g) gc %.3g(%.1g) cov %.3g(%.1g);", s, q.pair.a,
                              q.pair.b, q.gamma_M, q.gamma_M_se, q.gamma_check, q.gamma_check_se, q.cov_L, q.cov_L_se);
      }
    } else {
      for (const auto& [pr, g] : spec.gamma_star) {
        const auto& q = pop.pairs[pr.flat];
        const bool nonzero = std::abs(q.gamma_M) > 3.0 * q.gamma_M_se && std::abs(q.gamma_check) > 3.0 * q.gamma_check_se &&
                             std::abs(q.cov_L) > 3.0 * q.cov_L_se;
        const bool same = (q.gamma_M > 0) == (q.gamma_check > 0) && (q.gamma_M > 0) == (q.cov_L > 0);
        ok = ok && nonzero && same;
        if (!ok) notes += fmt(" spec %d: gM %.3g(%.1g) gc %.3g(%.1g) cov %.3g(%.1g);", s, q.gamma_M, q.gamma_M_se,
                              q.gamma_check, q.gamma_check_se, q.cov_L, q.cov_L_se);
      }
    }
    good += ok;
  }
  return {good >= 19, fmt("%d/20 specs consistent (need 19)%s", good, notes.c_str())};
}

FitAudit suite_audit;
bool ran_recovery = false, ran_orderings = false;

// Planted anti-hierarchical pairs inside the default top-m screen.
Outcome planted_recovery() {
  ran_recovery = true;
  int hits = 0;
  const int seeds = 50;
  for (int s = 1; s <= seeds; ++s) {
    SimDesign d;
    d.structure = Structure::kAntiHierarchical;
    d.n = 2000;
    d.p = 50;
    d.beta_value = 1.0;
    d.gamma_value = 4.0;
    d.seed = std::uint64_t(s);
    const SimData sim = simulate(d);
    const Matrix xs = Standardizer::fit(sim.train.x).apply(sim.train.x);
    CvOptions cv;
    cv.seed = std::uint64_t(s);
    cv.path.early_stop = true;
    cv.path.audit = &suite_audit;
    const CvResult step1 = cv_fit(d.family, xs, sim.train.y, {}, cv);
    const auto offset = predict(d.family, step1.best(), xs).theta;
    ScreenOptions so;
    so.workers = 1;
    const ScreenResult r = screen(d.family, xs, sim.train.y, offset, ScreenMode::top_m(default_m(d.n)), so);
    std::set<std::size_t> got;
    for (const auto& e : r.selected) got.insert(e.pair.flat);
    bool all = true;
    for (const auto& [a, b] : planted_sets(d.family.kind, d.structure).pairs) all = all && got.count(pair_flat(a, b, d.p));
    hits += all;
  }
  return {hits >= int(std::ceil(0.95 * seeds)), fmt("all 5 pairs in top-%zu for %d/%d seeds", default_m(2000), hits, seeds)};
}

// Simulation comparison against MEL, APL and SIS.
Outcome method_orderings() {
  ran_orderings = true;
  const int reps = 50;
  bool ok = true;
  std::string detail;
  for (Structure st : {Structure::kAntiHierarchical, Structure::kMixed, Structure::kHierarchical}) {
    double dev[4] = {0, 0, 0, 0}, area[4] = {0, 0, 0, 0};
    for (int r = 1; r <= reps; ++r) {
      SimDesign d;
      d.structure = st;
      d.seed = std::uint64_t(r);
      d.beta_value = 1.0;
      const SimData sim = simulate(d);
      SprinterConfig cfg;
      cfg.seed = std::uint64_t(r);
      cfg.workers = 1;
      cfg.audit = &suite_audit;
      SprinterConfig joint = cfg;
      joint.tuning = Tuning::kJoint;
      const LinearModel models[4] = {sprinter_fit(d.family, sim.train.x, sim.train.y, joint).model,
                                     fit_mel(d.family, sim.train.x, sim.train.y, cfg).model,
                                     fit_apl(d.family, sim.train.x, sim.train.y, cfg).model,
                                     fit_sis(d.family, sim.train.x, sim.train.y, cfg).model};
      for (int k = 0; k < 4; ++k) {
        const Evaluation e = evaluate(models[k], sim.eval);
        dev[k] += e.deviance / reps;
        area[k] += *e.auc / reps;
      }
    }
    const double best = std::max({area[1], area[2], area[3]});
    const bool auc_ok = area[0] >= best - 0.05;
    ok = ok && auc_ok;
    if (st == Structure::kAntiHierarchical) ok = ok && dev[0] < dev[1];
    detail += fmt("%s dev S/MEL/APL/SIS %.1f/%.1f/%.1f/%.1f auc %.3f/%.3f/%.3f/%.3f%s; ", std::string(structure_name(st)).c_str(),
                  dev[0], dev[1], dev[2], dev[3], area[0], area[1], area[2], area[3], auc_ok ? "" : " (auc gap)");
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome kkt_audit() {
  if (!ran_recovery) planted_recovery();
  if (!ran_orderings) method_orderings();
  return {suite_audit.failures() == 0 && suite_audit.converged_fits() > 0,
          fmt("%zu converged fits, %zu KKT failures, worst violation %.2e, %zu unconverged",
              suite_audit.converged_fits(), suite_audit.failures(), suite_audit.worst_violation(),
              suite_audit.unconverged_fits())};
}

// Bounded heap against a full sort of every pair.
Outcome heap_vs_sort() {
  Rng rng(505);
  int mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t p = 2 + rng.uniform_int(29), n = 20 + rng.uniform_int(60);
    const Family fam = Family::of(static_cast<FamilyKind>(rng.uniform_int(3)));
    const bool squares = rng.uniform() < 0.7;
    Matrix x(n, p);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t i = 0; i < n; ++i) x(i, j) = rng.normal();
    const Matrix xs = Standardizer::fit(x).apply(x);
    std::vector<double> y(n), off(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = 0.3 * xs(i, 0) + 0.6 * xs(i, rng.uniform_int(p)) * xs(i, rng.uniform_int(p));
      off[i] = 0.2 * xs(i, 0);
      switch (fam.kind) {
        case FamilyKind::kGaussian: y[i] = eta + rng.normal(); break;
        case FamilyKind::kBinomial: y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))); break;
        case FamilyKind::kPoisson: y[i] = double(rng.poisson(std::exp(0.5 * eta))); break;
      }
    }
    const auto ones = std::count(y.begin(), y.end(), 1.0);
    if (fam.kind == FamilyKind::kBinomial && (ones == 0 || ones == std::ptrdiff_t(n))) y[0] = 1 - y[0];
    std::vector<ScreenedPair> all;
    std::vector<double> z(n);
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = squares ? a : a + 1; b < p; ++b) {
        interaction_column(xs, a, b, z);
        all.push_back({make_pair_index(a, b, p), fit_1d_offset_mle(fam, z, y, off)});
      }
    }
    std::sort(all.begin(), all.end(), [](const ScreenedPair& u, const ScreenedPair& v) {
      return std::abs(u.gamma) != std::abs(v.gamma) ? std::abs(u.gamma) > std::abs(v.gamma) : u.pair.flat < v.pair.flat;
    });
    const std::size_t m = 1 + rng.uniform_int(all.size());
    for (unsigned w : {1u, 2u, 8u}) {
      ScreenOptions so;
      so.workers = w;
      so.include_squares = squares;
      const ScreenResult r = screen(fam, xs, y, off, ScreenMode::top_m(m), so);
      bool same = r.selected.size() == m;
      for (std::size_t k = 0; same && k < m; ++k) same = r.selected[k].pair == all[k].pair && r.selected[k].gamma == all[k].gamma;
      mismatches += !same;
    }
  }
  return {mismatches == 0, fmt("200 instances x 3 worker counts, %d mismatches", mismatches)};
}

// Safeguarded Newton against golden-section search.
Outcome newton_vs_golden() {
  Rng rng(606);
  int bad = 0, gaussian_bad = 0, failed = 0;
  double worst = 0.0, worst_gauss = 0.0;
  for (int inst = 0; inst < 500; ++inst) {
    const Family fam = Family::of(static_cast<FamilyKind>(inst % 3));
    const std::size_t n = 30 + rng.uniform_int(170);
    std::vector<double> z(n), y(n), off(n);
    const double g = rng.normal() * 0.8;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = rng.normal() * rng.normal();
      off[i] = 0.5 * rng.normal();
      const double eta = off[i] + g * z[i];
      switch (fam.kind) {
        case FamilyKind::kGaussian: y[i] = eta + rng.normal(); break;
        case FamilyKind::kBinomial: y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))); break;
        case FamilyKind::kPoisson: y[i] = double(rng.poisson(std::exp(std::min(eta, 5.0)))); break;
      }
    }
    bool fail = false;
    const double newton = fit_1d_offset_mle(fam, z, y, off, {}, &fail);
    if (fail) {
      ++failed;
      continue;
    }
    if (fam.kind == FamilyKind::kGaussian) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += z[i] * (y[i] - off[i]);
        den += z[i] * z[i];
      }
      const double err = std::abs(newton - num / den) / std::max(1.0, std::abs(num / den));
      worst_gauss = std::max(worst_gauss, err);
      gaussian_bad += err > 1e-12;
      continue;
    }
    auto loss = [&](double gam) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += fam.loss(off[i] + gam * z[i], y[i]);
      return v;
    };
    const double ref = testing::golden_section(loss, -50.0, 50.0, 1e-12);
    const double err = std::abs(newton - ref);
    worst = std::max(worst, err);
    bad += err > 1e-5;
  }
  return {bad == 0 && gaussian_bad == 0 && failed == 0,
          fmt("%d golden mismatches (worst %.1e), %d gaussian mismatches (worst %.1e), %d flagged failures", bad, worst,
              gaussian_bad, worst_gauss, failed)};
}

void random_ordinal(Rng& rng, std::size_t n, std::size_t p, int k, Matrix& x, std::vector<int>& y,
                    std::vector<double>& c, std::vector<double>& b, std::vector<double>& off) {
  x = Matrix(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) x(i, j) = rng.normal();
  y.resize(n);
  for (auto& v : y) v = 1 + int(rng.uniform_int(std::size_t(k) + 1));
  c.resize(std::size_t(k));
  double cur = -1.0;
  for (auto& v : c) {
    v = cur;
    cur += 0.3 + rng.uniform();
  }
  b.resize(p);
  for (auto& v : b) v = rng.normal() / std::sqrt(double(p));
  off.resize(n);
  for (auto& v : off) v = 0.2 * rng.normal();
}

// Structured score and information against the stacked-design loop.
Outcome ordinal_vectorization() {
  Rng rng(707);
  double worst = 0.0;
  Matrix x;
  std::vector<int> y;
  std::vector<double> c, b, off;
  for (int inst = 0; inst < 100; ++inst) {
    random_ordinal(rng, 10 + rng.uniform_int(60), 1 + rng.uniform_int(8), 1 + int(rng.uniform_int(5)), x, y, c, b, off);
    const OrdinalScoreInfo fast = ordinal_score_info(x, y, c, b, off);
    const testing::NaiveOrdinal ref = testing::naive_ordinal(x, y, c, b, off);
    auto rel = [](double u, double v) { return std::abs(u - v) / std::max(1.0, std::abs(v)); };
    for (std::size_t j = 0; j < ref.score.size(); ++j) worst = std::max(worst, rel(fast.score[j], ref.score[j]));
    const Matrix info = fast.dense_info();
    for (std::size_t r = 0; r < info.rows(); ++r)
      for (std::size_t s = 0; s < info.cols(); ++s) worst = std::max(worst, rel(info(r, s), ref.info(r, s)));
    worst = std::max(worst, rel(fast.loglik, ref.loglik));
  }
  random_ordinal(rng, 5000, 500, 4, x, y, c, b, off);
  double t_fast = 1e300;
  for (int r = 0; r < 3; ++r) {
    const auto t0 = Clock::now();
    const OrdinalScoreInfo s = ordinal_score_info(x, y, c, b, off);
    t_fast = std::min(t_fast, seconds_since(t0));
    if (s.score.empty()) return {false, "empty score"};
  }
  const auto t0 = Clock::now();
  const testing::NaiveOrdinal ref = testing::naive_ordinal(x, y, c, b, off);
  const double t_naive = seconds_since(t0);
  const double speedup = t_naive / t_fast;
  return {worst <= 1e-10 && speedup >= 10.0 && !ref.score.empty(),
          fmt("max relative error %.1e on 100 instances; n=5000 p=500 k=4 structured %.3f s, naive %.2f s, speedup %.1fx",
              worst, t_fast, t_naive, speedup)};
}

// Screening cost and memory; sprinter against the all-pairs lasso.
Outcome performance() {
  SimDesign d;
  d.p = 2000;
  d.n = 100;
  d.seed = 808;
  const SimData big = simulate(d);
  const Matrix xs = Standardizer::fit(big.train.x).apply(big.train.x);
  const std::vector<double> offset(d.n, 0.0);
  ScreenOptions so;
  so.workers = 1;
  const double rss_before = peak_rss_mb();
  const auto t0 = Clock::now();
  const ScreenResult r = screen(d.family, xs, big.train.y, offset, ScreenMode::top_m(default_m(d.n)), so);
  const double t_screen = seconds_since(t0);
  const double rss = peak_rss_mb();
  const bool screen_ok = t_screen < 60.0 && rss < 500.0 && r.n_scanned == pair_count(2000);

  int wins = 0;
  std::string times;
  for (int rep = 1; rep <= 10; ++rep) {
    SimDesign e;
    e.p = 500;
    e.seed = 900 + std::uint64_t(rep);
    const SimData sim = simulate(e);
    SprinterConfig cfg;
    cfg.seed = std::uint64_t(rep);
    cfg.workers = 1;
    auto t1 = Clock::now();
    sprinter_fit(e.family, sim.train.x, sim.train.y, cfg);
    const double ts = seconds_since(t1);
    t1 = Clock::now();
    fit_apl(e.family, sim.train.x, sim.train.y, cfg);
    const double ta = seconds_since(t1);
    wins += ts < ta;
    times += fmt(" %.1f/%.1f", ts, ta);
  }
  return {screen_ok && wins >= 9,
          fmt("p=2000 screen %.1f s, peak RSS %.0f MB (%.0f MB before); sprinter faster than APL at p=500 in %d/10 "
              "(s/APL:%s)",
              t_screen, rss, rss_before, wins, times.c_str())};
}

// Decay rate of the empirical screening statistic.
Outcome rate_shadow() {
  Rng rng(1010);
  const PopulationSpec spec = random_population_spec(4, FamilyKind::kGaussian, true, rng);
  const std::vector<std::size_t> grid = {500, 1000, 2000, 4000, 8000};
  const ConvergenceReport rep = empirical_convergence_check(spec, grid, 40, 11);
  const double rate = -rep.slope;
  std::string errs;
  for (double e : rep.mean_max_error) errs += fmt(" %.4f", e);
  return {rate >= 0.3 && rate <= 0.7, fmt("decay exponent %.3f (mean max error:%s)", rate, errs.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> criteria;
  app.add_option("--criteria", criteria, "comma-separated criterion numbers (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::sort(criteria.begin(), criteria.end());

  struct Entry {
    const char* name;
    Outcome (*run)();
    double limit;
  };
  const Entry table[] = {
      {"linear oracle identities", linear_identities, 60},
      {"binomial population sign agreement", glm_equivalence, 600},
      {"planted pair recovery", planted_recovery, 300},
      {"comparison with MEL, APL and SIS", method_orderings, 1800},
      {"heap against full sort", heap_vs_sort, 60},
      {"Newton against golden section", newton_vs_golden, 60},
      {"ordinal score and information", ordinal_vectorization, 300},
      {"performance envelope", performance, 1200},
      {"KKT audit of suites 3 and 4", kkt_audit, 0},
      {"rate of the screening statistic", rate_shadow, 600},
  };
  for (int id : criteria) {
    if (id < 1 || id > 10) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const Entry& e = table[id - 1];
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    report(id, e.name, o, seconds_since(t0), e.limit);
  }
  return failures == 0 ? 0 : 1;
}
