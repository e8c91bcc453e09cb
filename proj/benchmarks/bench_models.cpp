#include "pipkit/models.hpp"
#include "pipkit/rng.hpp"
#include "pipkit/sim.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_FitOls(benchmark::State& state) {
  pipkit::RngStream rng(1, 0);
  pipkit::NonlinearScenario s;
  s.n = static_cast<std::size_t>(state.range(0));
  const auto data = pipkit::gen_nonlinear(s, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::fit_ols(data, {"x1", "x2", "x3", "x4", "x5"}));
  }
}
BENCHMARK(BM_FitOls)->Arg(40)->Arg(400);

void BM_FitGbm(benchmark::State& state) {
  pipkit::RngStream rng(2, 0);
  pipkit::NonlinearScenario s;
  s.n = static_cast<std::size_t>(state.range(0));
  const auto data = pipkit::gen_nonlinear(s, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::fit_gbm(data, {"x1", "x2", "x3", "x4", "x5"}));
  }
}
BENCHMARK(BM_FitGbm)->Arg(40)->Arg(400);

}  // namespace
