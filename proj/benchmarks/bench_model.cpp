#include <benchmark/benchmark.h>

#include "dermanet/loss.hpp"
#include "dermanet/model.hpp"
#include "dermanet/optimizer.hpp"
#include "dermanet/rng.hpp"
#include "dermanet/schedule.hpp"

using namespace dermanet;

namespace {

ModelAssembly toy_model() {
  BackboneSpec backbone;
  backbone.name = "toy";
  backbone.feature_channels = 8;
  backbone.pretrained_weights = "random:1";
  HeadSpec head;
  head.hidden_widths = {16, 16};
  head.dropout_ps = {0.25, 0.25, 0.5};
  return build_model(backbone, head, 1);
}

ImageBatch synthetic_batch(int n) {
  ImageBatch batch;
  batch.images = nn::Tensor(n, 3, 224, 224);
  Rng rng(2);
  for (std::size_t i = 0; i < batch.images.size(); ++i) {
    batch.images.data()[i] = rng.uniform(-2.0, 2.0);
  }
  for (int i = 0; i < n; ++i) {
    batch.labels.push_back(i % kNumCategories);
    batch.ids.push_back("bench");
  }
  batch.normalized = true;
  return batch;
}

}  // namespace

static void BM_ToyForwardEval(benchmark::State& state) {
  auto model = toy_model();
  const auto batch = synthetic_batch(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(batch, false));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ToyForwardEval)->Arg(1)->Arg(8);

static void BM_ToyTrainStep(benchmark::State& state) {
  auto model = toy_model();
  const auto batch = synthetic_batch(4);
  const auto plan = SchedulePlan::reference_recipe(100);
  Optimizer opt(OptimizerSpec{}, model);
  long step = 4 * 100;  // inside the unfrozen phase
  for (auto _ : state) {
    model.zero_grads();
    nn::Tensor logits = model.forward(batch, true, static_cast<std::uint64_t>(step));
    nn::Tensor dlogits;
    benchmark::DoNotOptimize(cross_entropy(logits, batch.labels, &dlogits));
    model.backward(dlogits);
    opt.step(model, plan, step);
    if (++step >= plan.total_steps()) step = 4 * 100;
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_ToyTrainStep);

static void BM_Conv3x3(benchmark::State& state) {
  nn::Conv2d conv("conv", 8, 8, 3, 1, 1, false);
  std::vector<nn::Param*> params;
  conv.collect_params(params);
  nn::initialize_parameters(params, 3);
  nn::Tensor x(4, 8, 56, 56);
  Rng rng(4);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  nn::ForwardCtx ctx{false, 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x, ctx));
  }
}
BENCHMARK(BM_Conv3x3);
