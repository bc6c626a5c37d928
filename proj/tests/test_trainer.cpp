#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dermanet/errors.hpp"
#include "dermanet/loss.hpp"
#include "dermanet/trainer.hpp"
#include "support/fixtures.hpp"

using namespace dermanet;

namespace {

SchedulePlan tiny_plan(int steps_per_epoch, int phase1_epochs,
                       int phase2_cycles, int phase2_mult = 1) {
  PhaseSpec p1;
  p1.n_cycles = phase1_epochs;
  p1.first_cycle_epochs = 1;
  p1.cycle_mult = 1;
  p1.frozen_groups = {0, 1};

  PhaseSpec p2;
  p2.n_cycles = phase2_cycles;
  p2.first_cycle_epochs = 1;
  p2.cycle_mult = phase2_mult;

  SchedulePlan plan;
  plan.phases = {p1, p2};
  plan.steps_per_epoch = steps_per_epoch;
  return plan;
}

TrainerOptions toy_options(int batch_size, std::uint64_t seed,
                           bool augment = false) {
  TrainerOptions options;
  options.batch_size = batch_size;
  options.augment = augment;
  options.augment_policy = AugmentationPolicy::none();
  options.seed = seed;
  return options;
}

nn::Tensor logits_from(std::initializer_list<double> values) {
  nn::Tensor t(1, static_cast<int>(values.size()), 1, 1);
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

}  // namespace

TEST_CASE("uniform logits cost ln 7") {
  nn::Tensor logits(3, 7, 1, 1);  // all zeros
  const double loss = cross_entropy(logits, {0, 3, 6});
  CHECK(loss == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(loss == doctest::Approx(1.9459).epsilon(1e-4));
}

TEST_CASE("a dominant correct logit drives the loss to zero") {
  auto logits = logits_from({50, 0, 0, 0, 0, 0, 0});
  CHECK(cross_entropy(logits, {0}) < 1e-20);
}

TEST_CASE("cross entropy matches the softmax hand example") {
  auto logits = logits_from({2, 0, 0, 0, 0, 0, 0});
  const double expected = -std::log(std::exp(2.0) / (std::exp(2.0) + 6.0));
  CHECK(cross_entropy(logits, {0}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(cross_entropy(logits, {0}) == doctest::Approx(0.5944).epsilon(1e-4));
}

TEST_CASE("cross entropy rejects bad labels and non-finite logits") {
  nn::Tensor logits(1, 7, 1, 1);
  CHECK_THROWS_AS(cross_entropy(logits, {7}), ContractViolation);
  CHECK_THROWS_AS(cross_entropy(logits, {-1}), ContractViolation);
  auto bad = logits_from({std::nan(""), 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(cross_entropy(bad, {0}), NumericError);
}

TEST_CASE("cross entropy gradient is (softmax - onehot)/N") {
  auto logits = logits_from({2, 0, 0, 0, 0, 0, 0});
  nn::Tensor grad;
  cross_entropy(logits, {0}, &grad);
  const double p0 = std::exp(2.0) / (std::exp(2.0) + 6.0);
  CHECK(grad.at(0, 0, 0, 0) == doctest::Approx(p0 - 1.0).epsilon(1e-12));
  const double pj = 1.0 / (std::exp(2.0) + 6.0);
  for (int j = 1; j < 7; ++j) {
    CHECK(grad.at(0, j, 0, 0) == doctest::Approx(pj).epsilon(1e-12));
  }
}

TEST_CASE("two epochs over 10 records at batch 4 record 6 steps") {
  const auto dir = testsupport::fresh_temp_dir("trainer_steps");
  const auto data = testsupport::make_toy_dataset(dir, 5, 32, 1, 2);
  REQUIRE(data.manifest.size() == 10);

  auto plan = tiny_plan(/*steps_per_epoch=*/3, 1, 1);
  Trainer trainer(testsupport::make_toy_model(4), plan, OptimizerSpec{},
                  toy_options(4, 5));
  trainer.advance(data.manifest);
  CHECK(trainer.finished());
  REQUIRE(trainer.loss_history().size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& r = trainer.loss_history()[i];
    CHECK(r.step == static_cast<long>(i));
    CHECK(r.epoch == static_cast<int>(i / 3));
    CHECK(r.phase == (i < 3 ? 0 : 1));
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss >= 0.0);
  }
}

TEST_CASE("phase 1 leaves frozen groups bit-identical, phase 2 moves them") {
  const auto dir = testsupport::fresh_temp_dir("trainer_frozen");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 2);
  const auto plan = tiny_plan(4, 1, 1);

  Trainer trainer(testsupport::make_toy_model(8, 0.25), plan, OptimizerSpec{},
                  toy_options(4, 7, /*augment=*/true));
  const auto before0 = trainer.model().group_checksum(0);
  const auto before1 = trainer.model().group_checksum(1);
  const auto before2 = trainer.model().group_checksum(2);

  trainer.advance(data.manifest, plan.steps_per_epoch);  // phase 1 exactly
  CHECK(trainer.model().group_checksum(0) == before0);
  CHECK(trainer.model().group_checksum(1) == before1);
  CHECK(trainer.model().group_checksum(2) != before2);

  trainer.advance(data.manifest);  // phase 2: everything unfrozen
  CHECK(trainer.finished());
  CHECK(trainer.model().group_checksum(0) != before0);
  CHECK(trainer.model().group_checksum(1) != before1);
}

TEST_CASE("one unfrozen step changes at least one parameter in each group") {
  const auto dir = testsupport::fresh_temp_dir("trainer_unfrozen");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 3);
  SchedulePlan plan;
  PhaseSpec phase;
  phase.n_cycles = 1;
  plan.phases = {phase};  // nothing frozen
  plan.steps_per_epoch = 4;

  Trainer trainer(testsupport::make_toy_model(8), plan, OptimizerSpec{},
                  toy_options(4, 9));
  std::array<std::uint64_t, 3> before{};
  for (int g = 0; g < 3; ++g) before[g] = trainer.model().group_checksum(g);
  trainer.advance(data.manifest, 1);
  for (int g = 0; g < 3; ++g) {
    CHECK(trainer.model().group_checksum(g) != before[g]);
  }
}

TEST_CASE("the same seed reproduces the loss history bit for bit") {
  const auto dir = testsupport::fresh_temp_dir("trainer_determinism");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 4);
  const auto plan = tiny_plan(4, 1, 2);

  const auto run = [&] {
    Trainer trainer(testsupport::make_toy_model(8, 0.25), plan,
                    OptimizerSpec{}, toy_options(4, 11, true));
    trainer.advance(data.manifest);
    return trainer.loss_history();
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].loss == b[i].loss);
  }

  Trainer other(testsupport::make_toy_model(8, 0.25), plan, OptimizerSpec{},
                toy_options(4, 12, true));
  other.advance(data.manifest);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    any_diff |= (a[i].loss != other.loss_history()[i].loss);
  }
  CHECK(any_diff);
}

TEST_CASE("plain sgd applies exactly -lr * grad at every schedule step") {
  // single-parameter probe: fabricate a gradient and watch the update
  auto model = testsupport::make_toy_model(4);
  const auto plan = SchedulePlan::reference_recipe(7);
  OptimizerSpec spec;
  spec.momentum = 0.0;
  Optimizer opt(spec, model);

  nn::Param* probe = model.group_params(2).front();
  const double fixed_grad = 0.37;
  for (long step : {0L, 3L, 30L, 100L}) {
    model.zero_grads();
    probe->grad[0] = fixed_grad;
    const double before = probe->value[0];
    opt.step(model, plan, step);
    const double observed = probe->value[0] - before;
    const double expected = -plan.lr_at(step, 2) * fixed_grad;
    CHECK(std::abs(observed - expected) <= 1e-12);
  }
}

TEST_CASE("momentum accumulates velocity across steps") {
  auto model = testsupport::make_toy_model(4);
  SchedulePlan plan;
  PhaseSpec phase;
  phase.n_cycles = 1;
  phase.first_cycle_epochs = 100;
  plan.phases = {phase};
  plan.steps_per_epoch = 1;

  OptimizerSpec spec;  // momentum 0.9
  Optimizer opt(spec, model);
  nn::Param* probe = model.group_params(2).front();
  const double g = 1.0;
  const double lr0 = plan.lr_at(0, 2);
  const double lr1 = plan.lr_at(1, 2);

  double x0 = probe->value[0];
  probe->grad[0] = g;
  opt.step(model, plan, 0);
  CHECK(probe->value[0] == doctest::Approx(x0 - lr0 * g).epsilon(1e-12));
  double x1 = probe->value[0];
  model.zero_grads();
  probe->grad[0] = g;
  opt.step(model, plan, 1);
  // v1 = 0.9 * g + g
  CHECK(probe->value[0] ==
        doctest::Approx(x1 - lr1 * (0.9 * g + g)).epsilon(1e-12));
}

TEST_CASE("run() fires the cycle-boundary callback once per cycle") {
  const auto dir = testsupport::fresh_temp_dir("trainer_cycles");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 14, 2);
  const auto plan = tiny_plan(/*steps_per_epoch=*/1, 1, 1);  // 2 one-cycle phases
  Trainer trainer(testsupport::make_toy_model(4), plan, OptimizerSpec{},
                  toy_options(4, 15));
  std::vector<std::pair<long, int>> events;
  trainer.run(data.manifest,
              [&](long step, int cycle) { events.emplace_back(step, cycle); });
  CHECK(trainer.finished());
  REQUIRE(events.size() == 2);  // one boundary event per cycle
  CHECK(events[0] == std::pair<long, int>{1, 0});
  CHECK(events[1] == std::pair<long, int>{2, 1});
}

TEST_CASE("run() picks up mid-cycle and only fires remaining boundaries") {
  const auto dir = testsupport::fresh_temp_dir("trainer_midcycle");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 18, 2);
  const auto plan = tiny_plan(/*steps_per_epoch=*/1, 1, 1);
  Trainer trainer(testsupport::make_toy_model(4), plan, OptimizerSpec{},
                  toy_options(4, 19));
  trainer.advance(data.manifest, 1);  // finish cycle 0 by hand
  std::vector<int> cycles;
  trainer.run(data.manifest, [&](long, int cycle) { cycles.push_back(cycle); });
  CHECK(cycles == std::vector<int>{1});
}

TEST_CASE("non-finite losses abort with step, lr and batch diagnostics") {
  const auto dir = testsupport::fresh_temp_dir("trainer_diverge");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 16, 2);
  const auto plan = tiny_plan(1, 1, 1);
  auto model = testsupport::make_toy_model(4);
  // poison one head weight so the first forward pass goes non-finite
  for (nn::Param* p : model.group_params(2)) {
    if (p->name == "head.fc3.weight") {
      p->value[0] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  Trainer trainer(std::move(model), plan, OptimizerSpec{}, toy_options(4, 17));
  try {
    trainer.advance(data.manifest);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.step() == 0);
    CHECK(e.lr() == plan.lr_at(0, 2));
    CHECK_FALSE(e.batch_ids().empty());
    CHECK(e.batch_ids().front().rfind("TOY_", 0) == 0);
  }
}

TEST_CASE("adam stays available behind the optimizer switch") {
  const auto dir = testsupport::fresh_temp_dir("trainer_adam");
  const auto data = testsupport::make_toy_dataset(dir, 2, 32, 6, 2);
  auto plan = tiny_plan(1, 1, 1);
  OptimizerSpec spec;
  spec.kind = OptimizerSpec::Kind::adam;
  Trainer trainer(testsupport::make_toy_model(4), plan, spec,
                  toy_options(4, 13));
  trainer.advance(data.manifest);
  CHECK(trainer.finished());
  for (const auto& r : trainer.loss_history()) CHECK(std::isfinite(r.loss));
}

TEST_CASE("loss CSV round-trips through the reader") {
  std::vector<LossRecord> history{{0, 0, 0, 1.5}, {1, 0, 0, 0.25},
                                  {2, 1, 1, 0.125}};
  std::ostringstream out;
  write_loss_csv(history, out);
  std::istringstream in(out.str());
  const auto back = read_loss_csv(in);
  CHECK(back == history);

  std::istringstream bad("nonsense\n1,2\n");
  CHECK_THROWS_AS(read_loss_csv(bad), FormatError);
}
