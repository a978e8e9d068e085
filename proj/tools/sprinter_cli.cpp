#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sprinter/baselines.hpp"
#include "sprinter/errors.hpp"
#include "sprinter/io.hpp"
#include "sprinter/metrics.hpp"
#include "sprinter/oracles.hpp"
#include "sprinter/ordinal.hpp"
#include "sprinter/pipeline.hpp"
#include "sprinter/random.hpp"
#include "sprinter/simulate.hpp"

using namespace sprinter;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNumerical = 4 };

class UsageError : public Error {
 public:
  using Error::Error;
};

bool is_ordinal(const std::string& family) { return family == "ordinal"; }

std::vector<int> ordinal_labels(const std::vector<double>& y) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != std::floor(y[i]) || y[i] < 1.0 || y[i] > 1e6) {
      throw InputError("ordinal response at row " + std::to_string(i + 1) + " is not a category label 1..K");
    }
    out[i] = static_cast<int>(y[i]);
  }
  return out;
}

CsvData load_training(const std::string& path) {
  CsvData d = read_csv(path, true);
  if (d.y.empty()) throw InputError(path + ": no response column");
  if (d.x.cols() == 0) throw InputError(path + ": no predictor columns");
  return d;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string family = "binomial";
  std::string structure = "mixed";
  std::size_t n = 100;
  std::size_t p = 150;
  double beta = 1.0;
  double gamma = 4.0;
  double x_var = 1.0;
  std::uint64_t seed = 1;
  std::size_t n_eval = 0;
  int categories = 4;
  std::string out = "sim";
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  const bool structure_set = cmd.count("--structure") > 0;
  const bool categories_set = cmd.count("--categories") > 0;
  std::string train_path = a.out + "_train.csv", eval_path = a.out + "_eval.csv";
  if (is_ordinal(a.family)) {
    if (structure_set) throw UsageError("--structure does not apply to the ordinal family");
    if (cmd.count("--x-var") > 0) throw UsageError("--x-var does not apply to the ordinal family");
    if (a.p < 4) throw UsageError("the ordinal design needs --p >= 4");
    if (a.categories < 2) throw UsageError("--categories must be at least 2");
    OrdinalDesign d;
    d.n = a.n;
    d.p = a.p;
    d.categories = a.categories;
    d.beta_value = a.beta;
    d.gamma_value = a.gamma;
    d.seed = a.seed;
    d.n_eval = a.n_eval;
    const OrdinalSimData sim = simulate_ordinal(d);
    auto as_double = [](const std::vector<int>& y) { return std::vector<double>(y.begin(), y.end()); };
    write_csv(train_path, sim.train.x, as_double(sim.train.y));
    write_csv(eval_path, sim.eval.x, as_double(sim.eval.y));
  } else {
    if (categories_set) throw UsageError("--categories applies only to the ordinal family");
    SimDesign d;
    d.family = parse_family(a.family);
    d.structure = parse_structure(a.structure);
    const PlantedSets s = planted_sets(d.family.kind, d.structure);
    std::size_t need = 0;
    for (auto k : s.main) need = std::max(need, k + 1);
    for (auto [u, v] : s.pairs) need = std::max({need, u + 1, v + 1});
    if (a.p < need) throw UsageError("structure " + a.structure + " needs --p >= " + std::to_string(need));
    if (a.n == 0) throw UsageError("--n must be positive");
    if (!(a.x_var > 0.0)) throw UsageError("--x-var must be positive");
    d.n = a.n;
    d.p = a.p;
    d.beta_value = a.beta;
    d.gamma_value = a.gamma;
    d.x_variance = a.x_var;
    d.seed = a.seed;
    d.n_eval = a.n_eval;
    const SimData sim = simulate(d);
    write_csv(train_path, sim.train.x, sim.train.y);
    write_csv(eval_path, sim.eval.x, sim.eval.y);
  }
  std::printf("wrote %s\nwrote %s\n", train_path.c_str(), eval_path.c_str());
  return kOk;
}

// ---------------------------------------------------------------- fit / screen

struct FitArgs {
  std::string data;
  std::string family;
  std::string m = "auto";
  std::optional<double> eta;
  std::string tuning = "sequential";
  int cv = 5;
  std::uint64_t seed = 1;
  double alpha = 1.0;
  std::size_t n_lambda = 100;
  bool no_squares = false;
  unsigned workers = 0;
  std::string out;
  std::string screen_out;
  bool timestamp = false;
};

SprinterConfig make_config(const FitArgs& a, const CLI::App& cmd) {
  SprinterConfig cfg;
  if (a.eta) {
    if (cmd.count("--m") > 0) throw UsageError("--m and --eta are mutually exclusive");
    if (!(*a.eta >= 0.0)) throw UsageError("--eta must be non-negative");
    cfg.use_threshold = true;
    cfg.eta = *a.eta;
  } else if (a.m != "auto") {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(a.m, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != a.m.size() || v < 1) throw UsageError("--m must be 'auto' or a positive integer");
    cfg.m = static_cast<std::size_t>(v);
  }
  if (a.tuning == "joint") {
    cfg.tuning = Tuning::kJoint;
  } else if (a.tuning != "sequential") {
    throw UsageError("--tuning must be sequential or joint");
  }
  if (a.cv < 2) throw UsageError("--cv must be at least 2");
  if (!(a.alpha > 0.0 && a.alpha <= 1.0)) throw UsageError("--alpha must lie in (0, 1]");
  if (a.n_lambda < 1) throw UsageError("--n-lambda must be positive");
  cfg.cv_folds = a.cv;
  cfg.seed = a.seed;
  cfg.alpha = a.alpha;
  cfg.n_lambda = a.n_lambda;
  cfg.include_squares = !a.no_squares;
  cfg.workers = a.workers;
  return cfg;
}

void check_family(const std::string& family) {
  if (is_ordinal(family)) return;
  parse_family(family);
}

int run_fit(const FitArgs& a, const CLI::App& cmd) {
  check_family(a.family);
  const SprinterConfig cfg = make_config(a, cmd);
  if (is_ordinal(a.family) && cfg.tuning == Tuning::kJoint) {
    throw UsageError("the ordinal family supports sequential tuning only");
  }
  const CsvData d = load_training(a.data);
  ModelFile mf;
  mf.family = a.family;
  mf.provenance.seed = cfg.seed;
  mf.provenance.config_hash = fnv1a_hex(config_fingerprint(cfg, a.family));
  if (a.timestamp) mf.provenance.created = utc_timestamp();
  ScreenResult scr;
  if (is_ordinal(a.family)) {
    const auto y = ordinal_labels(d.y);
    OrdinalSprinterModel r = sprinter_ordinal(d.x, y, cfg);
    mf.model = r.model;
    mf.degenerate = r.degenerate;
    mf.lambda1 = r.step1.lambda;
    mf.lambda4 = r.step4.lambda;
    scr = std::move(r.screen);
  } else {
    const Family fam = parse_family(a.family);
    SprinterModel r = sprinter_fit(fam, d.x, d.y, cfg);
    mf.model = r.model;
    mf.degenerate = r.degenerate;
    mf.lambda1 = r.lambda1;
    mf.lambda4 = r.lambda4;
    scr = std::move(r.screen);
  }
  save_model(a.out, mf);
  if (!a.screen_out.empty()) write_text(a.screen_out, format_screen_csv(scr));
  std::size_t nnz = 0;
  for (double v : mf.model.main) nnz += v != 0.0;
  std::printf("screened in %zu interactions (%zu candidates)\n", scr.selected.size(), scr.n_scanned);
  std::printf("final model: %zu main effects, %zu interactions\n", nnz, mf.model.interactions.size());
  if (mf.degenerate) std::printf("degenerate: no interaction survived screening\n");
  for (const auto& w : scr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (scr.newton_failures > 0) {
    std::fprintf(stderr, "warning: %zu one-dimensional fits did not converge\n", scr.newton_failures);
  }
  std::printf("wrote %s\n", a.out.c_str());
  return kOk;
}

int run_screen(const FitArgs& a, const CLI::App& cmd) {
  check_family(a.family);
  const SprinterConfig cfg = make_config(a, cmd);
  const CsvData d = load_training(a.data);
  const std::size_t n = d.x.rows();
  const Standardizer st = Standardizer::fit(d.x);
  const Matrix xs = st.apply(d.x);
  ScreenOptions so;
  so.include_squares = cfg.include_squares;
  so.workers = cfg.workers;
  const ScreenMode mode =
      cfg.use_threshold ? ScreenMode::threshold(cfg.eta) : ScreenMode::top_m(cfg.m == 0 ? default_m(n) : cfg.m);
  ScreenResult scr;
  if (is_ordinal(a.family)) {
    const auto y = ordinal_labels(d.y);
    OrdinalCvOptions cv;
    cv.n_folds = cfg.cv_folds;
    cv.seed = cfg.seed;
    cv.n_lambda = cfg.n_lambda;
    cv.workers = cfg.workers;
    cv.path.alpha = cfg.alpha;
    cv.path.early_stop = cfg.early_stop;
    const auto fit = fit_ordinalnet(xs, y, {}, cv).best();
    const auto offset = ordinal_eta(fit, xs);
    scr = ordinal_screen(xs, y, fit.cutpoints, offset, mode, so);
  } else {
    const Family fam = parse_family(a.family);
    CvOptions cv;
    cv.n_folds = cfg.cv_folds;
    cv.seed = cfg.seed;
    cv.n_lambda = cfg.n_lambda;
    cv.workers = cfg.workers;
    cv.path.alpha = cfg.alpha;
    cv.path.early_stop = cfg.early_stop;
    const GlmFit step1 = cv_fit(fam, xs, d.y, {}, cv).best();
    const auto offset = predict(fam, step1, xs).theta;
    scr = screen(fam, xs, d.y, offset, mode, so);
  }
  const std::string text = format_screen_csv(scr);
  if (a.out.empty() || a.out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_text(a.out, text);
    std::printf("wrote %s (%zu pairs)\n", a.out.c_str(), scr.selected.size());
  }
  for (const auto& w : scr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return kOk;
}

// ---------------------------------------------------------------- predict

int run_predict(const std::string& model_path, const std::string& data_path, const std::string& out) {
  const ModelFile mf = load_model(model_path);
  const CsvData d = read_csv(data_path, false);
  if (d.x.cols() != mf.model.p()) {
    throw DimensionError(data_path + " has " + std::to_string(d.x.cols()) + " predictor columns; the model expects " +
                         std::to_string(mf.model.p()));
  }
  const std::string text = format_predictions(mf, d.x);
  if (out.empty() || out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_text(out, text);
    std::printf("wrote %s\n", out.c_str());
  }
  return kOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchArgs {
  std::string methods = "sprinter,mel,apl,sis";
  std::string family = "binomial";
  std::string structure = "mixed";
  std::string p_list = "150,500";
  std::size_t n = 100;
  int reps = 10;
  std::uint64_t seed = 1;
  double beta = 1.0;
  double gamma = 4.0;
  std::size_t p_cap = 600;
  unsigned workers = 0;
  std::string out = "bench";
};

struct BenchRow {
  std::string method;
  std::size_t p = 0;
  int rep = 0;
  bool skipped = false;
  double seconds = 0.0;
  double deviance = 0.0;
  std::optional<double> auc;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find(',', start);
    if (pos == std::string::npos) pos = s.size();
    if (pos > start) out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string cell(double v) { return format_double(v); }

int run_benchmark(const BenchArgs& a) {
  const auto methods = split_list(a.methods);
  if (methods.empty()) throw UsageError("--methods is empty");
  for (const auto& m : methods) {
    if (m != "sprinter" && m != "mel" && m != "apl" && m != "sis") {
      throw UsageError("unknown method '" + m + "' (expected sprinter, mel, apl, sis)");
    }
  }
  if (is_ordinal(a.family)) throw UsageError("benchmark supports gaussian, binomial and poisson");
  const Family fam = parse_family(a.family);
  const Structure structure = parse_structure(a.structure);
  std::vector<std::size_t> ps;
  for (const auto& t : split_list(a.p_list)) {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(t, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != t.size() || v < 2) throw UsageError("--p-list entries must be integers >= 2");
    ps.push_back(static_cast<std::size_t>(v));
  }
  if (ps.empty()) throw UsageError("--p-list is empty");
  if (a.reps < 1) throw UsageError("--reps must be positive");

  SprinterConfig cfg;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  std::vector<BenchRow> rows;
  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    for (int rep = 0; rep < a.reps; ++rep) {
      SimDesign d;
      d.family = fam;
      d.structure = structure;
      d.n = a.n;
      d.p = ps[pi];
      d.beta_value = a.beta;
      d.gamma_value = a.gamma;
      d.seed = splitmix64(a.seed ^ (static_cast<std::uint64_t>(ps[pi]) << 32) ^ static_cast<std::uint64_t>(rep));
      const SimData sim = simulate(d);
      for (const auto& m : methods) {
        BenchRow row;
        row.method = m;
        row.p = ps[pi];
        row.rep = rep;
        const auto t0 = std::chrono::steady_clock::now();
        LinearModel model;
        try {
          if (m == "sprinter") {
            model = sprinter_fit(fam, sim.train.x, sim.train.y, cfg).model;
          } else if (m == "mel") {
            model = fit_mel(fam, sim.train.x, sim.train.y, cfg).model;
          } else if (m == "apl") {
            model = fit_apl(fam, sim.train.x, sim.train.y, cfg, a.p_cap).model;
          } else {
            model = fit_sis(fam, sim.train.x, sim.train.y, cfg).model;
          }
        } catch (const InputError& e) {
          if (m != "apl" || ps[pi] <= a.p_cap) throw;
          row.skipped = true;
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!row.skipped) {
          const Evaluation ev = evaluate(model, sim.eval);
          row.deviance = ev.deviance;
          row.auc = ev.auc;
        }
        std::fprintf(stderr, "%-8s p=%-5zu rep=%-3d %s\n", m.c_str(), row.p, rep,
                     row.skipped ? "skipped" : (cell(row.seconds) + "s").c_str());
        rows.push_back(row);
      }
    }
  }

  std::string csv = "method,p,rep,seconds,deviance,auc\n";
  for (const auto& r : rows) {
    csv += r.method + "," + std::to_string(r.p) + "," + std::to_string(r.rep) + ",";
    if (r.skipped) {
      csv += "NA,NA,NA\n";
      continue;
    }
    csv += cell(r.seconds) + "," + cell(r.deviance) + "," + (r.auc ? cell(*r.auc) : std::string("NA")) + "\n";
  }
  write_text(a.out + ".csv", csv);

  using Json = nlohmann::ordered_json;
  Json j;
  j["config"] = {{"methods", methods},     {"family", a.family}, {"structure", a.structure},
                 {"p_list", ps},           {"n", a.n},           {"reps", a.reps},
                 {"seed", a.seed},         {"beta", a.beta},     {"gamma", a.gamma},
                 {"p_cap", a.p_cap}};
  Json jr = Json::array();
  for (const auto& r : rows) {
    Json e{{"method", r.method}, {"p", r.p}, {"rep", r.rep}, {"skipped", r.skipped}};
    if (!r.skipped) {
      e["seconds"] = r.seconds;
      e["deviance"] = r.deviance;
      e["auc"] = r.auc ? Json(*r.auc) : Json(nullptr);
    }
    jr.push_back(e);
  }
  j["rows"] = jr;
  auto stats = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{m, s};
  };
  Json summary = Json::array();
  std::printf("%-9s %6s %5s %22s %24s %18s\n", "method", "p", "runs", "seconds", "deviance", "auc");
  for (std::size_t p : ps) {
    for (const auto& m : methods) {
      std::vector<double> sec, dev, au;
      int skipped = 0;
      for (const auto& r : rows) {
        if (r.method != m || r.p != p) continue;
        if (r.skipped) {
          ++skipped;
          continue;
        }
        sec.push_back(r.seconds);
        dev.push_back(r.deviance);
        if (r.auc) au.push_back(*r.auc);
      }
      Json e{{"method", m}, {"p", p}, {"runs", sec.size()}, {"skipped", skipped}};
      if (sec.empty()) {
        std::printf("%-9s %6zu %5d %22s\n", m.c_str(), p, 0, "skipped");
      } else {
        auto [sm, ss] = stats(sec);
        auto [dm, ds] = stats(dev);
        e["seconds_mean"] = sm;
        e["seconds_sd"] = ss;
        e["deviance_mean"] = dm;
        e["deviance_sd"] = ds;
        char auc_text[64] = "NA";
        if (!au.empty()) {
          auto [am, as] = stats(au);
          e["auc_mean"] = am;
          e["auc_sd"] = as;
          std::snprintf(auc_text, sizeof auc_text, "%.3f +- %.3f", am, as);
        }
        std::printf("%-9s %6zu %5zu %12.4f +- %7.4f %13.3f +- %8.3f %18s\n", m.c_str(), p, sec.size(), sm, ss, dm,
                    ds, auc_text);
      }
      summary.push_back(e);
    }
  }
  j["summary"] = summary;
  write_text(a.out + ".json", j.dump(2) + "\n");
  std::printf("wrote %s.csv and %s.json\n", a.out.c_str(), a.out.c_str());
  return kOk;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string kind = "linear";
  std::string family = "binomial";
  std::size_t specs = 20;
  std::size_t p = 4;
  std::uint64_t seed = 1;
  std::size_t draws = 200000;
  bool planted = true;
  std::string out;
};

int run_oracle(const OracleArgs& a) {
  if (a.p < 2) throw UsageError("--p must be at least 2");
  using Json = nlohmann::ordered_json;
  Json all = Json::array();
  Rng rng = Rng::derived(a.seed, 0x0a11);
  double worst_cov = 0.0, worst_check = 0.0;
  for (std::size_t s = 0; s < a.specs; ++s) {
    if (a.kind == "linear") {
      PopulationSpec spec = random_population_spec(a.p, FamilyKind::kGaussian, a.planted, rng);
      const LinearPopulation pop = linear_population_quantities(spec);
      worst_cov = std::max(worst_cov, pop.max_cov_identity_error);
      worst_check = std::max(worst_check, pop.max_check_identity_error);
      all.push_back(Json::parse(to_json(pop)));
      if (s == 0) std::fputs(to_table(pop).c_str(), stdout);
    } else if (a.kind == "glm") {
      const Family fam = parse_family(a.family);
      if (fam.kind == FamilyKind::kGaussian) throw UsageError("--kind glm needs binomial or poisson");
      PopulationSpec spec = random_population_spec(a.p, fam.kind, a.planted, rng);
      std::vector<PairIndex> pairs;
      for (std::size_t u = 0; u < a.p; ++u) {
        for (std::size_t v = u; v < a.p; ++v) pairs.push_back(make_pair_index(u, v, a.p));
      }
      const GlmPopulation pop = glm_population_quantities(spec, pairs, a.draws, 20, rng.next_u64());
      all.push_back(Json::parse(to_json(pop)));
    } else {
      throw UsageError("--kind must be linear or glm");
    }
  }
  if (a.kind == "linear") {
    std::printf("max |Cov_L - Psi_jj gamma_M| = %.3g\nmax |gamma_check - gamma_M / condition| = %.3g\n", worst_cov,
                worst_check);
  }
  if (!a.out.empty()) {
    write_text(a.out, all.dump(2) + "\n");
    std::printf("wrote %s\n", a.out.c_str());
  } else if (a.kind == "glm") {
    std::puts(all.dump(2).c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sprinter: reluctant interaction screening and fitting for GLMs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sprinter 0.1.0");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a simulated train/eval pair of CSV files");
  c_sim->add_option("--family", sim.family, "gaussian, binomial, poisson or ordinal")
      ->check(CLI::IsMember({"gaussian", "binomial", "poisson", "ordinal"}));
  c_sim->add_option("--structure", sim.structure, "mixed, hierarchical or anti_hierarchical")
      ->check(CLI::IsMember({"mixed", "hierarchical", "anti_hierarchical", "anti-hierarchical"}));
  c_sim->add_option("--n", sim.n, "training rows");
  c_sim->add_option("--p", sim.p, "predictors");
  c_sim->add_option("--beta", sim.beta, "main-effect coefficient");
  c_sim->add_option("--gamma", sim.gamma, "interaction coefficient");
  c_sim->add_option("--x-var", sim.x_var, "predictor variance");
  c_sim->add_option("--seed", sim.seed, "random seed");
  c_sim->add_option("--n-eval", sim.n_eval, "evaluation rows (0 = family default)");
  c_sim->add_option("--categories", sim.categories, "ordinal categories");
  c_sim->add_option("--out", sim.out, "output prefix; writes <out>_train.csv and <out>_eval.csv");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a sprinter model and save it as JSON");
  FitArgs scr;
  auto* c_scr = app.add_subcommand("screen", "Run steps 1-3 and write the screened pairs as CSV");
  for (auto [cmd, args] : {std::pair{c_fit, &fit}, std::pair{c_scr, &scr}}) {
    cmd->add_option("--data", args->data, "training CSV (header x1..xp,y)")->required();
    cmd->add_option("--family", args->family, "gaussian, binomial, poisson or ordinal")
        ->required()
        ->check(CLI::IsMember({"gaussian", "binomial", "poisson", "ordinal"}));
    cmd->add_option("--m", args->m, "screened interactions: auto or a positive integer");
    cmd->add_option("--eta", args->eta, "threshold on |gamma_hat| (instead of --m)");
    cmd->add_option("--cv", args->cv, "cross-validation folds");
    cmd->add_option("--seed", args->seed, "seed for fold assignment");
    cmd->add_option("--alpha", args->alpha, "elastic-net mixing in (0, 1]");
    cmd->add_option("--n-lambda", args->n_lambda, "penalty grid length");
    cmd->add_flag("--no-squares", args->no_squares, "exclude squared terms from screening");
    cmd->add_option("--workers", args->workers, "worker threads (0 = SPRINTER_WORKERS or all cores)");
  }
  c_fit->add_option("--tuning", fit.tuning, "sequential or joint")
      ->check(CLI::IsMember({"sequential", "joint"}));
  c_fit->add_option("--out", fit.out, "model JSON path")->required();
  c_fit->add_option("--screen-out", fit.screen_out, "also write the screened pairs CSV");
  c_fit->add_flag("--timestamp", fit.timestamp, "record the creation time in the model file");
  c_scr->add_option("--out", scr.out, "screen CSV path (default stdout)");

  std::string model_path, data_path, pred_out;
  auto* c_pred = app.add_subcommand("predict", "Predict means (or category probabilities) for new rows");
  c_pred->add_option("--model", model_path, "model JSON")->required();
  c_pred->add_option("--data", data_path, "CSV with the training predictors (a y column is ignored)")->required();
  c_pred->add_option("--out", pred_out, "prediction CSV path (default stdout)");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("benchmark", "Time and score methods on simulated designs");
  c_bench->add_option("--methods", bench.methods, "comma list of sprinter, mel, apl, sis");
  c_bench->add_option("--family", bench.family, "gaussian, binomial or poisson");
  c_bench->add_option("--structure", bench.structure, "mixed, hierarchical or anti_hierarchical");
  c_bench->add_option("--p-list", bench.p_list, "comma list of predictor counts");
  c_bench->add_option("--n", bench.n, "training rows");
  c_bench->add_option("--reps", bench.reps, "replicates per p");
  c_bench->add_option("--seed", bench.seed, "base seed");
  c_bench->add_option("--beta", bench.beta, "main-effect coefficient");
  c_bench->add_option("--gamma", bench.gamma, "interaction coefficient");
  c_bench->add_option("--p-cap", bench.p_cap, "largest p for the all-pairs lasso");
  c_bench->add_option("--workers", bench.workers, "worker threads");
  c_bench->add_option("--out", bench.out, "output prefix; writes <out>.csv and <out>.json");

  OracleArgs orc;
  auto* c_orc = app.add_subcommand("oracle", "Population quantities for randomized specs");
  c_orc->add_option("--kind", orc.kind, "linear (analytic moments) or glm (Monte Carlo)")
      ->check(CLI::IsMember({"linear", "glm"}));
  c_orc->add_option("--family", orc.family, "binomial or poisson (glm kind)");
  c_orc->add_option("--specs", orc.specs, "number of random specs");
  c_orc->add_option("--p", orc.p, "predictors");
  c_orc->add_option("--seed", orc.seed, "seed");
  c_orc->add_option("--draws", orc.draws, "Monte Carlo draws (glm kind)");
  c_orc->add_flag("!--null", orc.planted, "use null interaction effects");
  c_orc->add_option("--out", orc.out, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_sim) return run_simulate(sim, *c_sim);
    if (*c_fit) return run_fit(fit, *c_fit);
    if (*c_scr) return run_screen(scr, *c_scr);
    if (*c_pred) return run_predict(model_path, data_path, pred_out);
    if (*c_bench) return run_benchmark(bench);
    if (*c_orc) return run_oracle(orc);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const FileError& e) {
    std::fprintf(stderr, "file error: %s\n", e.what());
    return kUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
  return kUsage;
}
