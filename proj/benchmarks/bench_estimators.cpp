#include "pipkit/plugin.hpp"
#include "pipkit/resampling.hpp"
#include "pipkit/sim.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_RepeatedKFoldOls(benchmark::State& state) {
  pipkit::RngStream rng(3, 0);
  pipkit::TwoSampleScenario s;
  s.n = static_cast<std::size_t>(state.range(0));
  s.beta1 = -1.0;
  const auto data = pipkit::gen_two_sample(s, rng);
  pipkit::ResamplingConfig cfg;
  cfg.group_column = "x";
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::repeated_kfold_pip(data, pipkit::ModelSpec::ols({}),
                                                        pipkit::ModelSpec::ols({"x"}), pipkit::default_fitter(),
                                                        pipkit::LossFunction::squared_error(), cfg, rng));
  }
}
BENCHMARK(BM_RepeatedKFoldOls)->Arg(20)->Arg(400);

void BM_ExpectedTwoSample(benchmark::State& state) {
  pipkit::MonteCarloOptions o;
  o.n_mc = 100000;
  o.threads = static_cast<unsigned>(state.range(0));
  const pipkit::RngStream rng(4, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::pip_expected_two_sample_mc(-1.0, 1.0, 20, o, rng));
  }
}
BENCHMARK(BM_ExpectedTwoSample)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace
