#include <benchmark/benchmark.h>

#include <random>

#include "ggcam/gaze_heatmap.hpp"
#include "ggcam/network.hpp"
#include "ggcam/ops.hpp"

using namespace ggcam;

static void BM_HeatmapPipeline(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 64.0);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 120; ++i) pts.emplace_back(uni(rng), uni(rng));
  GazeTrace trace(pts, 64, 64);
  for (auto _ : state) {
    VisualHeatMap m = heatmap::make_heatmap(trace, 9.0, 8, 8);
    benchmark::DoNotOptimize(m.grid.data());
  }
}
BENCHMARK(BM_HeatmapPipeline);

static void BM_ForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(7);
  Classifier c(3, 32, 64, HeadKind::cam, rng);
  Tensor img({1, 64, 64});
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int64_t i = 0; i < img.size(); ++i) img[i] = uni(rng);
  for (auto _ : state) {
    network::ForwardNodes f = network::forward(c, img);
    Value loss = ops::cross_entropy(f.logits, 1);
    backward(loss);
    benchmark::DoNotOptimize(loss->value[0]);
  }
}
BENCHMARK(BM_ForwardBackward);

BENCHMARK_MAIN();
