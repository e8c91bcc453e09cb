#include "pipkit/dists.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_NormalCdf(benchmark::State& state) {
  double z = -6.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::std_normal_cdf(z));
    z = z > 6.0 ? -6.0 : z + 1e-3;
  }
}
BENCHMARK(BM_NormalCdf);

void BM_StudentTCdf(benchmark::State& state) {
  const int df = static_cast<int>(state.range(0));
  double t = -6.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::student_t_cdf(t, df));
    t = t > 6.0 ? -6.0 : t + 1e-3;
  }
}
BENCHMARK(BM_StudentTCdf)->Arg(18)->Arg(398);

void BM_StudentTQuantile(benchmark::State& state) {
  double p = 0.001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipkit::student_t_quantile(p, 18));
    p = p > 0.999 ? 0.001 : p + 1e-3;
  }
}
BENCHMARK(BM_StudentTQuantile);

}  // namespace
