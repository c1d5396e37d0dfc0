#include <benchmark/benchmark.h>

#include <random>

#include "resadapt/regression.hpp"

using namespace resadapt::stats;

namespace {

struct Problem {
  DesignMatrix x;
  std::vector<double> y;
  std::vector<std::string> groups;
};

Problem planted(std::size_t groups, std::size_t per) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  Problem p;
  std::vector<double> v;
  for (std::size_t j = 0; j < groups; ++j) {
    const double a = 2 * z(rng);
    for (std::size_t i = 0; i < per; ++i) {
      const double s = z(rng), t = z(rng);
      v.insert(v.end(), {1.0, s, t, s * t});
      p.y.push_back(1 + 0.5 * s - 0.2 * t + a + z(rng));
      p.groups.push_back("g" + std::to_string(j));
    }
  }
  p.x = DesignMatrix::from_columns({"(Intercept)", "s", "t", "s:t"}, p.y.size(), std::move(v));
  return p;
}

void BM_LmmFit(benchmark::State& state) {
  const auto p = planted(static_cast<std::size_t>(state.range(0)), 40);
  for (auto _ : state) benchmark::DoNotOptimize(lmm_fit(p.x, p.y, p.groups));
}

void BM_OlsFit(benchmark::State& state) {
  const auto p = planted(50, 40);
  for (auto _ : state) benchmark::DoNotOptimize(ols_fit(p.x, p.y));
}

}  // namespace

BENCHMARK(BM_LmmFit)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OlsFit)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
