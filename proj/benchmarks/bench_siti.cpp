#include <benchmark/benchmark.h>

#include <random>

#include "resadapt/video.hpp"

using namespace resadapt::video;

namespace {

VideoSequence noise_video(int w, int h, int frames) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<LumaFrame> out;
  for (int f = 0; f < frames; ++f) {
    std::vector<std::uint8_t> plane(static_cast<std::size_t>(w) * h);
    for (auto& v : plane) v = static_cast<std::uint8_t>(d(rng));
    out.emplace_back(w, h, std::move(plane));
  }
  return VideoSequence(std::move(out), 30.0);
}

void BM_SitiFrames(benchmark::State& state) {
  const auto seq = noise_video(640, 360, static_cast<int>(state.range(0)));
  const ComputeOptions opts{static_cast<unsigned>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(compute_siti(seq, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SitiFrames)->Args({30, 1})->Args({30, 4})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
