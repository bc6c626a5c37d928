#pragma once

#include <string>
#include <vector>

#include "dermanet/model.hpp"
#include "dermanet/schedule.hpp"

namespace dermanet {

class BinaryReader;
class BinaryWriter;

struct OptimizerSpec {
  enum class Kind { sgd_momentum, adam };
  Kind kind = Kind::sgd_momentum;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // adam

  static OptimizerSpec from_name(const std::string& name);
  std::string name() const;
};

/// Per-group learning rates come straight from the schedule: step k applies
/// lr_at(plan, k, group) to every parameter of that group. Frozen groups are
/// skipped entirely (no parameter or state change).
class Optimizer {
public:
  Optimizer(OptimizerSpec spec, const ModelAssembly& model);

  void step(ModelAssembly& model, const SchedulePlan& plan, long global_step);

  const OptimizerSpec& spec() const { return spec_; }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r, const ModelAssembly& model);

private:
  OptimizerSpec spec_;
  // one slot vector per parameter, in the model's global parameter order
  std::vector<std::vector<nn::Scalar>> slot1_;  // sgd velocity / adam m
  std::vector<std::vector<nn::Scalar>> slot2_;  // adam v
  long adam_steps_ = 0;
};

}  // namespace dermanet
