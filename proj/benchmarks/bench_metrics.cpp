#include <benchmark/benchmark.h>

#include "dermanet/augment.hpp"
#include "dermanet/metrics.hpp"
#include "dermanet/rng.hpp"

using namespace dermanet;

static void BM_BalancedAccuracy(benchmark::State& state) {
  Rng rng(1);
  ConfusionMatrix cm;
  for (auto& row : cm.counts)
    for (auto& cell : row) cell = static_cast<long>(rng.bounded(100));
  for (auto _ : state) {
    benchmark::DoNotOptimize(balanced_accuracy(cm));
  }
}
BENCHMARK(BM_BalancedAccuracy);

static void BM_Softmax(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> logits(7);
  for (auto& v : logits) v = rng.uniform(-5, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax(logits));
  }
}
BENCHMARK(BM_Softmax);

static void BM_MeanPrediction(benchmark::State& state) {
  Rng rng(3);
  std::vector<PredictionVector> members(5);
  for (auto& m : members) {
    double sum = 0;
    for (auto& p : m.probs) {
      p = rng.uniform();
      sum += p;
    }
    for (auto& p : m.probs) p /= sum;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(mean_prediction(members));
  }
}
BENCHMARK(BM_MeanPrediction);

static void BM_ResizeBilinear(benchmark::State& state) {
  ImageTensor img(600, 450);
  Rng rng(4);
  for (auto& v : img.data) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(resize_bilinear(img, 224, 224));
  }
}
BENCHMARK(BM_ResizeBilinear);

static void BM_Augment(benchmark::State& state) {
  ImageTensor img(224, 224);
  Rng fill(5);
  for (auto& v : img.data) v = fill.uniform();
  const AugmentationPolicy policy;
  Rng rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(augment(img, policy, rng));
  }
}
BENCHMARK(BM_Augment);
