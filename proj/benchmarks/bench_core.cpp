#include <benchmark/benchmark.h>

#include "apfx/fixpoint.hpp"
#include "apfx/problems.hpp"
#include "apfx/projective.hpp"

using namespace apfx;

static void BM_SampleDriver(benchmark::State& state) {
  const auto g = make_grid(0, 1, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_driver(g, 1000, 1, 1));
  state.SetItemsProcessed(state.iterations() * 1000 * state.range(0));
}
BENCHMARK(BM_SampleDriver)->Arg(64)->Arg(256);

static void BM_ForwardSubstituteGbm(benchmark::State& state) {
  const auto g = make_grid(0, 1, static_cast<std::size_t>(state.range(0)));
  const auto w = sample_driver(g, 1000, 1, 2);
  const auto p = preset("gbm");
  const auto h = as_operator(p);
  const auto x0 = initial_guess(p, g, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(forward_substitute(h, x0, w));
}
BENCHMARK(BM_ForwardSubstituteGbm)->Arg(64)->Arg(256);

static void BM_PicardLevel(benchmark::State& state) {
  const auto g = make_grid(0, 1, 64);
  const auto w = sample_driver(g, 500, 1, 3);
  const auto p = preset("gbm");
  const auto lv = make_level(g, static_cast<std::size_t>(state.range(0)));
  const auto hn = build_hn(as_operator(p), lv, CompactBox::uniform(g, 1, -10, 10));
  SchemeConfig cfg;
  const auto x0 = initial_guess(p, g, 500);
  for (auto _ : state) benchmark::DoNotOptimize(solve_level(hn, x0, w, cfg));
}
BENCHMARK(BM_PicardLevel)->Arg(8)->Arg(32);

static void BM_VolterraInterp(benchmark::State& state) {
  const auto g = make_grid(0, 1, 256);
  const auto x = sample_driver(g, 1000, 1, 4).as_paths();
  const auto lv = make_level(g, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(volterra_interp(x, lv));
}
BENCHMARK(BM_VolterraInterp)->Arg(16)->Arg(128);

static void BM_ProbMetric(benchmark::State& state) {
  const auto g = make_grid(0, 1, 256);
  const auto x = sample_driver(g, 2000, 1, 5).as_paths();
  const auto y = sample_driver(g, 2000, 1, 6).as_paths();
  for (auto _ : state) benchmark::DoNotOptimize(prob_metric(x, y, Norm::sup));
}
BENCHMARK(BM_ProbMetric);
BENCHMARK_MAIN();
