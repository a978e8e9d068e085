#include <benchmark/benchmark.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <new>
#include <thread>
#include <utility>

#include <sprinter/matrix.hpp>
#include <sprinter/screen.hpp>
#include <sprinter/simulate.hpp>

// Live heap accounting for the memory guard.
namespace {

std::atomic<long long> live_bytes{0};
std::atomic<long long> peak_bytes{0};

void* counted_alloc(std::size_t size) {
  void* raw = std::malloc(size + 16);
  if (!raw) throw std::bad_alloc();
  *static_cast<std::size_t*>(raw) = size;
  const long long now = live_bytes.fetch_add(static_cast<long long>(size)) + static_cast<long long>(size);
  long long peak = peak_bytes.load();
  while (now > peak && !peak_bytes.compare_exchange_weak(peak, now)) {
  }
  return static_cast<char*>(raw) + 16;
}

void counted_free(void* p) noexcept {
  if (!p) return;
  void* raw = static_cast<char*>(p) - 16;
  live_bytes.fetch_sub(static_cast<long long>(*static_cast<std::size_t*>(raw)));
  std::free(raw);
}

}  // namespace

void* operator new(std::size_t size) { return counted_alloc(size); }
void* operator new[](std::size_t size) { return counted_alloc(size); }
void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return counted_alloc(size);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return counted_alloc(size);
  } catch (...) {
    return nullptr;
  }
}
void operator delete(void* p) noexcept { counted_free(p); }
void operator delete[](void* p) noexcept { counted_free(p); }
void operator delete(void* p, std::size_t) noexcept { counted_free(p); }
void operator delete[](void* p, std::size_t) noexcept { counted_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { counted_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { counted_free(p); }

namespace {

using namespace sprinter;

constexpr std::size_t kRows = 100;

struct Input {
  Matrix xs;
  std::vector<double> y;
  std::vector<double> offset;
};

const Input& input_for(std::size_t p) {
  static std::map<std::size_t, Input> cache;
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  SimDesign d;
  d.n = kRows;
  d.p = p;
  d.seed = 7 + p;
  const SimData s = simulate(d);
  Input in{Standardizer::fit(s.train.x).apply(s.train.x), s.train.y, std::vector<double>(kRows, 0.0)};
  return cache.emplace(p, std::move(in)).first->second;
}

void BM_ScreenThroughput(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto workers = static_cast<unsigned>(state.range(1));
  const Input& in = input_for(p);
  const std::size_t m = default_m(kRows);
  ScreenOptions so;
  so.workers = workers;
  long long peak = 0;
  for (auto _ : state) {
    const long long base = live_bytes.load();
    peak_bytes.store(base);
    const ScreenResult r = screen(Family::binomial(), in.xs, in.y, in.offset, ScreenMode::top_m(m), so);
    peak = std::max(peak, peak_bytes.load() - base);
    benchmark::DoNotOptimize(r.selected.data());
  }
  // Per worker: one n-vector and an m-entry heap (vector growth may double
  // it); shared: the offset-only residual and variance plus the result.
  const long long heap = 2 * static_cast<long long>(m * sizeof(ScreenedPair));
  const long long guard = static_cast<long long>(workers) * (static_cast<long long>(kRows * sizeof(double)) + heap + 512) +
                          2 * static_cast<long long>(kRows * sizeof(double)) + heap + 1024;
  const double pairs = static_cast<double>(pair_count(p));
  state.counters["p"] = static_cast<double>(p);
  state.counters["workers"] = workers;
  state.counters["pairs"] = pairs;
  state.counters["pairs_per_second"] = benchmark::Counter(pairs, benchmark::Counter::kIsIterationInvariantRate);
  state.counters["peak_live_bytes"] = static_cast<double>(peak);
  state.counters["guard_bytes"] = static_cast<double>(guard);
  if (peak > guard) state.SkipWithError("screen storage exceeded the per-worker guard");
}

BENCHMARK(BM_ScreenThroughput)
    ->ArgNames({"p", "workers"})
    ->Args({250, 1})
    ->Args({500, 1})
    ->Args({1000, 1})
    ->Args({2000, 1})
    ->Args({1000, 8})
    ->Iterations(1)
    ->Repetitions(1)
    ->UseRealTime()
    ->Unit(benchmark::kSecond);

// One JSON object per line: every run, then the derived checks.
class JsonLinesReporter : public benchmark::BenchmarkReporter {
 public:
  bool ReportContext(const Context&) override { return true; }

  void ReportRuns(const std::vector<Run>& runs) override {
    for (const Run& r : runs) {
      const double secs = r.GetAdjustedRealTime() * benchmark::GetTimeUnitMultiplier(r.time_unit);
      auto c = [&](const char* k) {
        auto it = r.counters.find(k);
        return it == r.counters.end() ? 0.0 : static_cast<double>(it->second);
      };
      const auto p = static_cast<std::size_t>(c("p"));
      const auto w = static_cast<unsigned>(c("workers"));
      if (!r.error_occurred) seconds_[{p, w}] = secs;
      std::printf(
          "{\"benchmark\":\"%s\",\"p\":%zu,\"n\":%zu,\"workers\":%u,\"seconds\":%.6f,\"pairs_per_second\":%.1f,"
          "\"peak_live_bytes\":%.0f,\"guard_bytes\":%.0f,\"error\":%s}\n",
          r.benchmark_name().c_str(), p, kRows, w, secs, c("pairs_per_second"), c("peak_live_bytes"),
          c("guard_bytes"), r.error_occurred ? ("\"" + r.error_message + "\"").c_str() : "null");
      std::fflush(stdout);
    }
  }

  void Finalize() override {
    const auto at = [&](std::size_t p, unsigned w) {
      auto it = seconds_.find({p, w});
      return it == seconds_.end() ? -1.0 : it->second;
    };
    if (const double t = at(2000, 1); t >= 0) {
      std::printf("{\"check\":\"p2000_under_60s\",\"seconds\":%.3f,\"pass\":%s}\n", t, t < 60.0 ? "true" : "false");
    }
    for (std::size_t p : {250u, 500u, 1000u}) {
      const double a = at(p, 1), b = at(2 * p, 1);
      if (a > 0 && b > 0) {
        std::printf("{\"check\":\"doubling_ratio\",\"p\":%zu,\"ratio\":%.3f,\"pass\":%s}\n", p, b / a,
                    b / a >= 3.0 && b / a <= 5.0 ? "true" : "false");
      }
    }
    const double s1 = at(1000, 1), s8 = at(1000, 8);
    if (s1 > 0 && s8 > 0) {
      std::printf("{\"check\":\"speedup_1_to_8\",\"p\":1000,\"speedup\":%.3f,\"hardware_threads\":%u,\"pass\":%s}\n",
                  s1 / s8, std::thread::hardware_concurrency(), s1 / s8 >= 4.0 ? "true" : "false");
    }
  }

 private:
  std::map<std::pair<std::size_t, unsigned>, double> seconds_;
};

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  JsonLinesReporter reporter;
  benchmark::RunSpecifiedBenchmarks(&reporter);
  benchmark::Shutdown();
  return 0;
}
