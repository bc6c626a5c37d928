#include "dermanet/optimizer.hpp"

#include <cmath>

#include "dermanet/errors.hpp"
#include "dermanet/serialize.hpp"

namespace dermanet {

OptimizerSpec OptimizerSpec::from_name(const std::string& name) {
  OptimizerSpec spec;
  if (name == "sgd_momentum") {
    spec.kind = Kind::sgd_momentum;
  } else if (name == "adam") {
    spec.kind = Kind::adam;
  } else {
    throw ConfigError("unknown optimizer: '" + name + "'");
  }
  return spec;
}

std::string OptimizerSpec::name() const {
  return kind == Kind::sgd_momentum ? "sgd_momentum" : "adam";
}

Optimizer::Optimizer(OptimizerSpec spec, const ModelAssembly& model)
    : spec_(spec) {
  for (const nn::Param* p : model.params()) {
    slot1_.emplace_back(p->value.size(), 0.0);
    if (spec_.kind == OptimizerSpec::Kind::adam) {
      slot2_.emplace_back(p->value.size(), 0.0);
    }
  }
}

void Optimizer::step(ModelAssembly& model, const SchedulePlan& plan,
                     long global_step) {
  if (spec_.kind == OptimizerSpec::Kind::adam) ++adam_steps_;

  std::size_t param_index = 0;
  for (int g = 0; g < kNumLayerGroups; ++g) {
    auto group = model.group_params(g);
    if (model.group_frozen(g)) {
      param_index += group.size();
      continue;
    }
    const double lr = plan.lr_at(global_step, g);
    for (nn::Param* p : group) {
      auto& s1 = slot1_.at(param_index);
      if (spec_.kind == OptimizerSpec::Kind::sgd_momentum) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
          s1[i] = spec_.momentum * s1[i] + p->grad[i];
          p->value[i] -= lr * s1[i];
        }
      } else {
        auto& s2 = slot2_.at(param_index);
        const double bc1 = 1.0 - std::pow(spec_.beta1, adam_steps_);
        const double bc2 = 1.0 - std::pow(spec_.beta2, adam_steps_);
        for (std::size_t i = 0; i < p->value.size(); ++i) {
          const double grad = p->grad[i];
          s1[i] = spec_.beta1 * s1[i] + (1.0 - spec_.beta1) * grad;
          s2[i] = spec_.beta2 * s2[i] + (1.0 - spec_.beta2) * grad * grad;
          const double mhat = s1[i] / bc1;
          const double vhat = s2[i] / bc2;
          p->value[i] -= lr * mhat / (std::sqrt(vhat) + spec_.eps);
        }
      }
      ++param_index;
    }
  }
}

void Optimizer::save(BinaryWriter& w) const {
  w.write_string(spec_.name());
  w.write_i64(adam_steps_);
  w.write_u32(static_cast<std::uint32_t>(slot1_.size()));
  for (const auto& s : slot1_) w.write_doubles(s);
  w.write_u32(static_cast<std::uint32_t>(slot2_.size()));
  for (const auto& s : slot2_) w.write_doubles(s);
}

void Optimizer::load(BinaryReader& r, const ModelAssembly& model) {
  const std::string kind = r.read_string();
  if (kind != spec_.name()) {
    r.fail("optimizer kind mismatch: checkpoint has '" + kind +
           "', configured '" + spec_.name() + "'");
  }
  adam_steps_ = r.read_i64();
  const auto params = model.params();
  const std::uint32_t n1 = r.read_u32();
  if (n1 != params.size()) r.fail("optimizer state count mismatch");
  slot1_.clear();
  for (std::uint32_t i = 0; i < n1; ++i) {
    slot1_.push_back(r.read_doubles());
    if (slot1_.back().size() != params[i]->value.size()) {
      r.fail("optimizer state size mismatch");
    }
  }
  const std::uint32_t n2 = r.read_u32();
  slot2_.clear();
  for (std::uint32_t i = 0; i < n2; ++i) slot2_.push_back(r.read_doubles());
}

}  // namespace dermanet
