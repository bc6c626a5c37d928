#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <vector>

namespace dermanet {

inline constexpr int kNumLayerGroups = 3;

enum class CycleShape { cosine, triangular };

/// One training phase: a run of warm-restart cycles sharing a base rate,
/// per-group divisors and a frozen-group set. Cycle k lasts
/// first_cycle_epochs * cycle_mult^k epochs.
struct PhaseSpec {
  int n_cycles = 1;
  int first_cycle_epochs = 1;
  int cycle_mult = 1;
  double base_lr = 1e-2;
  std::array<double, kNumLayerGroups> group_divisors{9.0, 3.0, 1.0};
  std::set<int> frozen_groups;

  void validate() const;

  /// Cycle lengths in epochs: [L, L*m, L*m^2, ...].
  std::vector<int> cycle_epochs() const;
  int total_epochs() const;
};

/// The full per-step learning-rate program across all phases and all three
/// layer groups. Pure arithmetic; every quantity is a function of the plan
/// and a step index.
struct SchedulePlan {
  std::vector<PhaseSpec> phases;
  int steps_per_epoch = 1;
  CycleShape shape = CycleShape::cosine;

  void validate() const;

  int total_epochs() const;
  int total_cycles() const;
  long total_steps() const;

  /// Index of the phase containing a global step.
  int phase_of(long global_step) const;

  /// Learning rate for `group` at the start of optimizer step `global_step`.
  /// Within a cycle of T steps at elapsed offset t the unfrozen rate is
  ///   (base_lr / divisor) * 1/2 (1 + cos(pi * t / T))        (cosine)
  ///   (base_lr / divisor) * (1 - t / T)                      (triangular)
  /// so each cycle restarts at the group maximum and anneals toward zero.
  /// Frozen groups report 0.
  double lr_at(long global_step, int group) const;

  /// Global step indices where a new cycle begins; first entry is 0.
  std::vector<long> restart_steps() const;

  /// Global step indices one past the last step of each cycle (checkpoint
  /// boundaries); the final entry equals total_steps().
  std::vector<long> cycle_end_steps() const;

  struct Row {
    long step;
    int epoch;
    int phase;
    int cycle;  // global cycle index
    std::array<double, kNumLayerGroups> lr;
  };

  /// One row per step; lr columns agree with lr_at exactly.
  std::vector<Row> table() const;

  /// The reference recipe: phase 1 = 4 one-epoch cycles with groups {0,1}
  /// frozen, phase 2 = 4 cycles of 1,2,4,8 epochs with everything trainable;
  /// divisors 9/3/1, base rate 1e-2.
  static SchedulePlan reference_recipe(int steps_per_epoch, double base_lr = 1e-2,
                                   CycleShape shape = CycleShape::cosine);

private:
  struct Locator {
    int phase;
    int cycle;        // global cycle index
    long cycle_start; // global step where the cycle begins
    long cycle_len;   // steps in the cycle
  };
  Locator locate(long global_step) const;
};

/// Writes the full table as CSV: step,epoch,phase,cycle,lr_g0,lr_g1,lr_g2.
void write_schedule_csv(const SchedulePlan& plan, std::ostream& out);

}  // namespace dermanet
