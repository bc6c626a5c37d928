#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "dermanet/batch.hpp"
#include "dermanet/model.hpp"
#include "dermanet/optimizer.hpp"
#include "dermanet/schedule.hpp"

namespace dermanet {

struct LossRecord {
  long step;
  int epoch;
  int phase;
  double loss;

  bool operator==(const LossRecord&) const = default;
};

struct TrainerOptions {
  int batch_size = 32;
  AugmentationPolicy augment_policy;
  bool augment = true;
  std::uint64_t seed = 0;
  int side = kImageSide;
  std::array<double, 3> mean = kImagenetMean;
  std::array<double, 3> std = kImagenetStd;
};

/// Runs the per-step training loop over a SchedulePlan: shuffle each epoch,
/// load/augment a batch, forward in training mode, cross-entropy backward,
/// per-group scheduled update. Every random draw is keyed by (seed,
/// position), so a fixed seed gives a bit-identical loss trajectory and
/// checkpoint/resume continues it exactly.
class Trainer {
public:
  Trainer(ModelAssembly model, SchedulePlan plan, OptimizerSpec opt_spec,
          TrainerOptions options, std::uint64_t config_hash = 0);

  /// Advances at most n optimizer steps (n < 0: run to completion).
  /// Applies each phase's frozen set at the phase boundary. Throws
  /// TrainingDiverged on a non-finite loss.
  void advance(const Manifest& train, long n_steps = -1);

  /// Runs to completion, invoking the callback after the last step of every
  /// cycle (checkpoint boundaries).
  void run(const Manifest& train,
           const std::function<void(long step, int cycle)>& on_cycle_end = {});

  bool finished() const { return global_step_ >= plan_.total_steps(); }
  long global_step() const { return global_step_; }
  int epoch() const { return static_cast<int>(global_step_ / plan_.steps_per_epoch); }

  const std::vector<LossRecord>& loss_history() const { return loss_history_; }
  ModelAssembly& model() { return model_; }
  const SchedulePlan& plan() const { return plan_; }
  std::uint64_t seed() const { return options_.seed; }

  void save_checkpoint(const std::filesystem::path& path) const;

  /// Restores a trainer from a checkpoint. The architecture is rebuilt from
  /// the specs, then parameters, optimizer state, step position and loss
  /// history are restored bit-exactly. A nonzero config_hash must match the
  /// stored one.
  static Trainer load_checkpoint(const std::filesystem::path& path,
                                 const BackboneSpec& backbone,
                                 const HeadSpec& head, SchedulePlan plan,
                                 OptimizerSpec opt_spec,
                                 TrainerOptions options,
                                 std::uint64_t config_hash = 0);

private:
  ModelAssembly model_;
  SchedulePlan plan_;
  Optimizer optimizer_;
  TrainerOptions options_;
  std::uint64_t config_hash_;

  long global_step_ = 0;
  int applied_phase_ = -1;
  std::vector<LossRecord> loss_history_;

  void apply_phase(int phase);
};

/// Writes the loss history as CSV: step,epoch,phase,loss.
void write_loss_csv(const std::vector<LossRecord>& history, std::ostream& out);

/// Parses a loss CSV back into records (plot tooling).
std::vector<LossRecord> read_loss_csv(std::istream& in);

}  // namespace dermanet
