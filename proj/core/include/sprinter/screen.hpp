#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <queue>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sprinter/family.hpp"
#include "sprinter/matrix.hpp"
#include "sprinter/newton1d.hpp"
#include "sprinter/pair_index.hpp"
#include "sprinter/parallel.hpp"

namespace sprinter {

/// Selection rule: keep the m largest |gamma|, or every |gamma| > eta.
struct ScreenMode {
  enum class Kind { kTopM, kThreshold };
  Kind kind = Kind::kTopM;
  std::size_t m = 1;
  double eta = 0.0;

  static ScreenMode top_m(std::size_t m) { return {Kind::kTopM, m, 0.0}; }
  static ScreenMode threshold(double eta) { return {Kind::kThreshold, 0, eta}; }
};

struct ScreenOptions {
  bool include_squares = true;
  unsigned workers = 0;  // 0 = default_workers()
  Newton1dOptions newton;
};

struct ScreenedPair {
  PairIndex pair;
  double gamma = 0.0;
};

struct ScreenResult {
  std::vector<ScreenedPair> selected;  // |gamma| descending, then flat ascending
  ScreenMode mode;
  std::size_t n_scanned = 0;
  std::size_t newton_failures = 0;
  std::vector<std::string> warnings;
};

/// floor(n / ln n), at least 1.
std::size_t default_m(std::size_t n);

/// argmin over gamma of mean l(offset + z*gamma, y). Gaussian uses the
/// closed form z'(y - offset) / z'z. Sets *failed when Newton does not
/// converge inside the bound.
double fit_1d_offset_mle(const Family& family, std::span<const double> z, std::span<const double> y,
                         std::span<const double> offset, const Newton1dOptions& options = {},
                         bool* failed = nullptr);

/// Steps 2-3: scans every candidate product of two columns of the
/// standardized design `xs`, fits the 1-D offset MLE and keeps the
/// selection. Interaction columns are the sample-centered products
/// xs_a * xs_b (not rescaled).
ScreenResult screen(const Family& family, MatrixView xs, std::span<const double> y,
                    std::span<const double> offset, const ScreenMode& mode,
                    const ScreenOptions& options = {});

/// Centered product column z = xs_a * xs_b - mean(xs_a * xs_b).
void interaction_column(MatrixView xs, std::size_t a, std::size_t b, std::span<double> out,
                        double* mean_out = nullptr);

/// Dense matrix of centered interaction columns for the given pairs, with
/// the centers used (so new data can be mapped identically).
Matrix interaction_matrix(MatrixView xs, std::span<const PairIndex> pairs,
                          std::vector<double>* centers = nullptr);

/// Product columns for new data using stored centers.
Matrix interaction_matrix(MatrixView xs, std::span<const PairIndex> pairs,
                          std::span<const double> centers);

namespace detail {

inline bool screened_before(const ScreenedPair& u, const ScreenedPair& v) {
  const double au = std::abs(u.gamma), av = std::abs(v.gamma);
  if (au != av) return au > av;
  return u.pair.flat < v.pair.flat;
}

struct WorseFirst {
  bool operator()(const ScreenedPair& u, const ScreenedPair& v) const { return screened_before(u, v); }
};

/// Single-pass scan over all pairs shared by every screening variant.
/// `make_scorer()` is called once per worker and returns an object with
/// `double operator()(std::span<const double> z, bool& failed)`. Rows of
/// pairs (fixed a) are claimed dynamically; each worker keeps its own heap
/// and a deterministic merge produces the final order, so the result does
/// not depend on the worker count.
template <class MakeScorer>
ScreenResult scan_pairs(MatrixView xs, const ScreenMode& mode_in, const ScreenOptions& options,
                        MakeScorer&& make_scorer) {
  const std::size_t n = xs.rows(), p = xs.cols();
  ScreenResult res;
  res.mode = mode_in;
  const std::size_t q = options.include_squares ? pair_count(p) : pair_count(p) - p;
  const bool top_m = mode_in.kind == ScreenMode::Kind::kTopM;
  if (top_m) {
    if (res.mode.m == 0) res.mode.m = 1;
    if (res.mode.m > q) {
      res.warnings.push_back("m = " + std::to_string(res.mode.m) + " exceeds the " + std::to_string(q) +
                             " candidates; clamped");
      res.mode.m = q;
    }
  }
  const std::size_t m = res.mode.m;
  const double eta = res.mode.eta;

  struct WorkerState {
    std::priority_queue<ScreenedPair, std::vector<ScreenedPair>, WorseFirst> heap;
    std::vector<ScreenedPair> kept;
    std::size_t scanned = 0;
    std::size_t failures = 0;
  };
  const unsigned workers =
      std::max(1u, std::min<unsigned>(resolve_workers(options.workers), static_cast<unsigned>(std::max<std::size_t>(p, 1))));
  std::vector<WorkerState> states(workers);
  std::atomic<std::size_t> next_row{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto body = [&](unsigned w) {
    try {
      auto scorer = make_scorer();
      WorkerState& st = states[w];
      std::vector<double> z(n);
      for (;;) {
        const std::size_t a = next_row.fetch_add(1);
        if (a >= p) return;
        for (std::size_t b = options.include_squares ? a : a + 1; b < p; ++b) {
          interaction_column(xs, a, b, z);
          bool failed = false;
          const double g = scorer(std::span<const double>(z), failed);
          ++st.scanned;
          if (failed) ++st.failures;
          ScreenedPair sp{{a, b, pair_flat(a, b, p)}, g};
          if (top_m) {
            if (st.heap.size() < m) {
              st.heap.push(sp);
            } else if (screened_before(sp, st.heap.top())) {
              st.heap.pop();
              st.heap.push(sp);
            }
          } else if (std::abs(g) > eta) {
            st.kept.push_back(sp);
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next_row.store(p);
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(body, w);
    body(0);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& st : states) {
    res.n_scanned += st.scanned;
    res.newton_failures += st.failures;
    while (!st.heap.empty()) {
      res.selected.push_back(st.heap.top());
      st.heap.pop();
    }
    res.selected.insert(res.selected.end(), st.kept.begin(), st.kept.end());
  }
  std::sort(res.selected.begin(), res.selected.end(), screened_before);
  if (top_m && res.selected.size() > m) res.selected.resize(m);
  return res;
}

}  // namespace detail
}  // namespace sprinter
