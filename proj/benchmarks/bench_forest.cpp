#include <benchmark/benchmark.h>

#include <random>

#include "resadapt/predictor.hpp"

using namespace resadapt::predict;

namespace {

// Roughly the size of the second study: 276 sessions, 20 features.
FeatureTable study_sized(std::size_t n = 276, std::size_t p = 20) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  FeatureTable t;
  for (std::size_t c = 0; c < p; ++c) t.names.push_back("f" + std::to_string(c));
  for (std::size_t i = 0; i < n; ++i) {
    double y = 360;
    for (std::size_t c = 0; c < p; ++c) {
      const double v = u(rng);
      t.values.push_back(v);
      if (c < 3) y += 200 * v;
    }
    t.targets.push_back(y);
    t.viewers.push_back("v" + std::to_string(i % 23));
  }
  return t;
}

void BM_TrainForest(benchmark::State& state) {
  const auto t = study_sized();
  ForestParams p;
  p.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(t, p, 42));
}

void BM_LoocvForest(benchmark::State& state) {
  const auto t = study_sized();
  ForestParams p;
  p.threads = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loocv_by_viewer(t, forest_builder(p, 42)));
  }
}

}  // namespace

BENCHMARK(BM_TrainForest)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LoocvForest)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
