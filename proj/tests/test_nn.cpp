#include <doctest.h>

#include <cmath>
#include <functional>

#include "dermanet/errors.hpp"
#include "dermanet/model.hpp"
#include "dermanet/nn/layers.hpp"
#include "dermanet/rng.hpp"

using namespace dermanet;
using nn::Tensor;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
  Tensor t(n, c, h, w);
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = rng.uniform(-1.0, 1.0);
  }
  return t;
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// scalar probe loss: sum(forward(x) .* R) for a fixed random R, which makes
// the output gradient exactly R
struct Probe {
  nn::Layer& layer;
  nn::ForwardCtx ctx{true, 42};
  Tensor r;

  double loss(const Tensor& x) {
    Tensor y = layer.forward(x, ctx);
    if (r.empty()) r = random_tensor(y.n(), y.c(), y.h(), y.w(), 99);
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += y.data()[i] * r.data()[i];
    return sum;
  }

  Tensor backward_input(const Tensor& x) {
    loss(x);
    return layer.backward(r, true);
  }
};

// central finite differences against every parameter and the input
void check_gradients(nn::Layer& layer, Tensor x, double h = 1e-6,
                     double tol = 1e-6) {
  Probe probe{layer};

  // analytic gradients
  std::vector<nn::Param*> params;
  layer.collect_params(params);
  for (nn::Param* p : params) p->zero_grad();
  const Tensor dx = probe.backward_input(x);
  REQUIRE(dx.size() == x.size());

  for (nn::Param* p : params) {
    Rng pick(fnv1a(p->name));
    const std::size_t n_checks = std::min<std::size_t>(p->value.size(), 12);
    for (std::size_t k = 0; k < n_checks; ++k) {
      const std::size_t i =
          static_cast<std::size_t>(pick.bounded(p->value.size()));
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = probe.loss(x);
      p->value[i] = saved - h;
      const double down = probe.loss(x);
      p->value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      INFO("param " << p->name << " index " << i);
      CHECK(close_rel(p->grad[i], numeric, tol));
    }
  }

  Rng pick(31);
  for (int k = 0; k < 12; ++k) {
    const std::size_t i = static_cast<std::size_t>(pick.bounded(x.size()));
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = probe.loss(x);
    x.data()[i] = saved - h;
    const double down = probe.loss(x);
    x.data()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    INFO("input index " << i);
    CHECK(close_rel(dx.data()[i], numeric, tol));
  }
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
  nn::Conv2d conv("conv", 3, 4, 3, 1, 1, true);
  std::vector<nn::Param*> params;
  conv.collect_params(params);
  nn::initialize_parameters(params, 5);
  check_gradients(conv, random_tensor(2, 3, 6, 6, 1));
}

TEST_CASE("strided conv2d gradients match finite differences") {
  nn::Conv2d conv("conv", 2, 3, 3, 2, 1, false);
  std::vector<nn::Param*> params;
  conv.collect_params(params);
  nn::initialize_parameters(params, 6);
  check_gradients(conv, random_tensor(2, 2, 7, 7, 2));
}

TEST_CASE("batchnorm training-mode gradients match finite differences") {
  nn::BatchNorm bn("bn", 4);
  check_gradients(bn, random_tensor(3, 4, 5, 5, 3));
}

TEST_CASE("linear gradients match finite differences") {
  nn::Linear fc("fc", 12, 5, true);
  std::vector<nn::Param*> params;
  fc.collect_params(params);
  nn::initialize_parameters(params, 7);
  check_gradients(fc, random_tensor(3, 12, 1, 1, 4));
}

TEST_CASE("relu, maxpool and concat pool gradients match finite differences") {
  // keep inputs away from kinks so finite differences are valid
  nn::ReLU relu("relu");
  check_gradients(relu, random_tensor(2, 3, 4, 4, 5));

  nn::MaxPool2d pool("pool", 3, 2, 1);
  check_gradients(pool, random_tensor(2, 2, 7, 7, 6));

  nn::ConcatPool cat("cat");
  check_gradients(cat, random_tensor(2, 3, 5, 5, 7));
}

TEST_CASE("dropout gradients match finite differences under a fixed seed") {
  nn::Dropout drop("drop", 0.4, 0);
  check_gradients(drop, random_tensor(2, 6, 3, 3, 8));
}

TEST_CASE("bottleneck gradients match finite differences") {
  nn::Bottleneck block("block", 4, 2, 8, 2, true);
  std::vector<nn::Param*> params;
  block.collect_params(params);
  nn::initialize_parameters(params, 9);
  check_gradients(block, random_tensor(2, 4, 6, 6, 9), 1e-6, 2e-5);

  nn::Bottleneck identity_block("block2", 8, 2, 8, 1, false);
  params.clear();
  identity_block.collect_params(params);
  nn::initialize_parameters(params, 10);
  check_gradients(identity_block, random_tensor(2, 8, 5, 5, 10), 1e-6, 2e-5);
}

TEST_CASE("sequential composition backpropagates through all children") {
  auto seq = nn::Sequential("seq");
  seq.add(std::make_unique<nn::Conv2d>("seq.conv", 2, 4, 3, 1, 1, false));
  seq.add(std::make_unique<nn::BatchNorm>("seq.bn", 4));
  seq.add(std::make_unique<nn::ReLU>("seq.relu"));
  seq.add(std::make_unique<nn::Linear>("seq.fc", 4 * 5 * 5, 3));
  std::vector<nn::Param*> params;
  seq.collect_params(params);
  nn::initialize_parameters(params, 11);
  check_gradients(seq, random_tensor(2, 2, 5, 5, 11), 1e-6, 2e-5);
}

TEST_CASE("frozen layers accumulate no gradients but pass them through") {
  auto seq = nn::Sequential("seq");
  auto conv = std::make_unique<nn::Conv2d>("seq.conv", 2, 2, 3, 1, 1, false);
  auto* conv_ptr = conv.get();
  seq.add(std::move(conv));
  seq.add(std::make_unique<nn::Linear>("seq.fc", 2 * 4 * 4, 3));
  std::vector<nn::Param*> params;
  seq.collect_params(params);
  nn::initialize_parameters(params, 12);

  conv_ptr->set_frozen(true);
  nn::ForwardCtx ctx{true, 1};
  const Tensor x = random_tensor(1, 2, 4, 4, 12);
  Tensor y = seq.forward(x, ctx);
  Tensor dy(y.n(), y.c(), y.h(), y.w());
  for (std::size_t i = 0; i < dy.size(); ++i) dy.data()[i] = 1.0;
  for (nn::Param* p : params) p->zero_grad();
  seq.backward(dy, false);

  std::vector<nn::Param*> conv_params;
  conv_ptr->collect_params(conv_params);
  for (const nn::Param* p : conv_params) {
    for (double g : p->grad) CHECK(g == 0.0);
  }
  // the linear layer still learns
  double fc_grad_norm = 0.0;
  for (const nn::Param* p : params) {
    if (p->name.rfind("seq.fc", 0) == 0) {
      for (double g : p->grad) fc_grad_norm += std::abs(g);
    }
  }
  CHECK(fc_grad_norm > 0.0);
}

TEST_CASE("softmax matches hand-computed values") {
  // all-equal logits are uniform
  const std::vector<double> equal{3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0};
  for (double p : softmax(equal)) {
    CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-12));
  }

  // independent exp/sum evaluation of [2,0,0,0,0,0,0]
  const std::vector<double> spiked{2, 0, 0, 0, 0, 0, 0};
  const auto probs = softmax(spiked);
  const double expected = std::exp(2.0) / (std::exp(2.0) + 6.0);
  CHECK(probs[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(probs[0] == doctest::Approx(0.5519).epsilon(1e-4));
  double sum = 0.0;
  for (double p : probs) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("softmax is shift invariant within 1e-12") {
  Rng rng(13);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> logits(7);
    for (auto& v : logits) v = rng.uniform(-5.0, 5.0);
    const double c = rng.uniform(-50.0, 50.0);
    auto shifted = logits;
    for (auto& v : shifted) v += c;
    const auto a = softmax(logits);
    const auto b = softmax(shifted);
    for (int i = 0; i < 7; ++i) {
      CHECK(std::abs(a[static_cast<std::size_t>(i)] -
                     b[static_cast<std::size_t>(i)]) <= 1e-12);
    }
  }
}

TEST_CASE("softmax rejects non-finite logits") {
  CHECK_THROWS_AS(softmax(std::vector<double>{
                      1.0, std::numeric_limits<double>::quiet_NaN()}),
                  NumericError);
  CHECK_THROWS_AS(softmax(std::vector<double>{
                      1.0, std::numeric_limits<double>::infinity()}),
                  NumericError);
}
