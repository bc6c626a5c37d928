#include "dermanet/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "dermanet/errors.hpp"

namespace dermanet {

void PhaseSpec::validate() const {
  if (n_cycles < 1) throw ConfigError("phase: n_cycles must be >= 1");
  if (first_cycle_epochs < 1)
    throw ConfigError("phase: first_cycle_epochs must be >= 1");
  if (cycle_mult < 1) throw ConfigError("phase: cycle_mult must be >= 1");
  if (!(base_lr > 0.0)) throw ConfigError("phase: base_lr must be > 0");
  for (double d : group_divisors) {
    if (!(d > 0.0)) throw ConfigError("phase: group divisors must be > 0");
  }
  for (int g : frozen_groups) {
    if (g < 0 || g >= kNumLayerGroups)
      throw ConfigError("phase: frozen group index out of range");
  }
}

std::vector<int> PhaseSpec::cycle_epochs() const {
  std::vector<int> lengths;
  lengths.reserve(static_cast<std::size_t>(n_cycles));
  long len = first_cycle_epochs;
  for (int k = 0; k < n_cycles; ++k) {
    lengths.push_back(static_cast<int>(len));
    len *= cycle_mult;
  }
  return lengths;
}

int PhaseSpec::total_epochs() const {
  int total = 0;
  for (int l : cycle_epochs()) total += l;
  return total;
}

void SchedulePlan::validate() const {
  if (phases.empty()) throw ConfigError("plan: at least one phase required");
  if (steps_per_epoch < 1)
    throw ConfigError("plan: steps_per_epoch must be >= 1");
  for (const auto& p : phases) p.validate();
}

int SchedulePlan::total_epochs() const {
  int total = 0;
  for (const auto& p : phases) total += p.total_epochs();
  return total;
}

int SchedulePlan::total_cycles() const {
  int total = 0;
  for (const auto& p : phases) total += p.n_cycles;
  return total;
}

long SchedulePlan::total_steps() const {
  return static_cast<long>(total_epochs()) * steps_per_epoch;
}

int SchedulePlan::phase_of(long global_step) const {
  return locate(global_step).phase;
}

SchedulePlan::Locator SchedulePlan::locate(long global_step) const {
  if (global_step < 0 || global_step >= total_steps()) {
    throw ContractViolation("step " + std::to_string(global_step) +
                            " outside plan of " +
                            std::to_string(total_steps()) + " steps");
  }
  long start = 0;
  int cycle_index = 0;
  for (std::size_t p = 0; p < phases.size(); ++p) {
    for (int len_epochs : phases[p].cycle_epochs()) {
      const long len = static_cast<long>(len_epochs) * steps_per_epoch;
      if (global_step < start + len) {
        return {static_cast<int>(p), cycle_index, start, len};
      }
      start += len;
      ++cycle_index;
    }
  }
  throw ContractViolation("unreachable: step not located");
}

double SchedulePlan::lr_at(long global_step, int group) const {
  if (group < 0 || group >= kNumLayerGroups) {
    throw ContractViolation("group index out of range");
  }
  const Locator loc = locate(global_step);
  const PhaseSpec& phase = phases[static_cast<std::size_t>(loc.phase)];
  if (phase.frozen_groups.count(group)) return 0.0;

  const double max_lr = phase.base_lr / phase.group_divisors[group];
  const long t = global_step - loc.cycle_start;
  const double frac = static_cast<double>(t) / static_cast<double>(loc.cycle_len);
  switch (shape) {
    case CycleShape::cosine:
      return max_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    case CycleShape::triangular:
      return max_lr * (1.0 - frac);
  }
  return 0.0;
}

std::vector<long> SchedulePlan::restart_steps() const {
  validate();
  std::vector<long> starts;
  long step = 0;
  for (const auto& p : phases) {
    for (int len_epochs : p.cycle_epochs()) {
      starts.push_back(step);
      step += static_cast<long>(len_epochs) * steps_per_epoch;
    }
  }
  return starts;
}

std::vector<long> SchedulePlan::cycle_end_steps() const {
  std::vector<long> ends;
  long step = 0;
  for (const auto& p : phases) {
    for (int len_epochs : p.cycle_epochs()) {
      step += static_cast<long>(len_epochs) * steps_per_epoch;
      ends.push_back(step);
    }
  }
  return ends;
}

std::vector<SchedulePlan::Row> SchedulePlan::table() const {
  validate();
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(total_steps()));
  for (long s = 0; s < total_steps(); ++s) {
    const Locator loc = locate(s);
    Row row;
    row.step = s;
    row.epoch = static_cast<int>(s / steps_per_epoch);
    row.phase = loc.phase;
    row.cycle = loc.cycle;
    for (int g = 0; g < kNumLayerGroups; ++g) row.lr[g] = lr_at(s, g);
    rows.push_back(row);
  }
  return rows;
}

SchedulePlan SchedulePlan::reference_recipe(int steps_per_epoch, double base_lr,
                                        CycleShape shape) {
  PhaseSpec head_phase;
  head_phase.n_cycles = 4;
  head_phase.first_cycle_epochs = 1;
  head_phase.cycle_mult = 1;
  head_phase.base_lr = base_lr;
  head_phase.frozen_groups = {0, 1};

  PhaseSpec fine_tune;
  fine_tune.n_cycles = 4;
  fine_tune.first_cycle_epochs = 1;
  fine_tune.cycle_mult = 2;
  fine_tune.base_lr = base_lr;
  fine_tune.frozen_groups = {};

  SchedulePlan plan;
  plan.phases = {head_phase, fine_tune};
  plan.steps_per_epoch = steps_per_epoch;
  plan.shape = shape;
  plan.validate();
  return plan;
}

void write_schedule_csv(const SchedulePlan& plan, std::ostream& out) {
  out << "step,epoch,phase,cycle,lr_g0,lr_g1,lr_g2\n";
  char buf[128];
  for (const auto& row : plan.table()) {
    out << row.step << ',' << row.epoch << ',' << row.phase << ','
        << row.cycle;
    for (double lr : row.lr) {
      std::snprintf(buf, sizeof(buf), ",%.17g", lr);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace dermanet
