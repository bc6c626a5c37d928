#include "dermanet/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "dermanet/errors.hpp"
#include "dermanet/loss.hpp"
#include "dermanet/serialize.hpp"

namespace dermanet {

namespace {
constexpr char kCheckpointMagic[4] = {'D', 'N', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

Trainer::Trainer(ModelAssembly model, SchedulePlan plan,
                 OptimizerSpec opt_spec, TrainerOptions options,
                 std::uint64_t config_hash)
    : model_(std::move(model)),
      plan_(std::move(plan)),
      optimizer_(opt_spec, model_),
      options_(std::move(options)),
      config_hash_(config_hash) {
  plan_.validate();
}

void Trainer::apply_phase(int phase) {
  model_.apply_frozen_set(
      plan_.phases.at(static_cast<std::size_t>(phase)).frozen_groups);
  applied_phase_ = phase;
}

void Trainer::advance(const Manifest& train, long n_steps) {
  if (train.empty()) throw ContractViolation("training manifest is empty");
  const long expected_spe = steps_per_epoch(train.size(), options_.batch_size);
  if (expected_spe != plan_.steps_per_epoch) {
    throw ConfigError("plan steps_per_epoch (" +
                      std::to_string(plan_.steps_per_epoch) +
                      ") does not match manifest/batch size (" +
                      std::to_string(expected_spe) + ")");
  }

  BatchOptions batch_options;
  batch_options.batch_size = options_.batch_size;
  batch_options.augmenting = options_.augment;
  batch_options.policy = options_.augment_policy;
  batch_options.side = options_.side;
  batch_options.mean = options_.mean;
  batch_options.std = options_.std;

  long taken = 0;
  long stream_epoch = -1;
  std::unique_ptr<BatchStream> stream;

  while (global_step_ < plan_.total_steps() &&
         (n_steps < 0 || taken < n_steps)) {
    const int phase = plan_.phase_of(global_step_);
    if (phase != applied_phase_) apply_phase(phase);

    const long epoch = global_step_ / plan_.steps_per_epoch;
    const long batch_index = global_step_ % plan_.steps_per_epoch;
    if (epoch != stream_epoch) {
      stream = std::make_unique<BatchStream>(train, batch_options,
                                             options_.seed, epoch);
      stream_epoch = epoch;
    }

    ImageBatch batch = stream->load_batch(static_cast<std::size_t>(batch_index));
    model_.zero_grads();
    const std::uint64_t step_seed = derive_seed(
        options_.seed, "step", static_cast<std::uint64_t>(global_step_));
    nn::Tensor logits = model_.forward(batch, /*training=*/true, step_seed);
    nn::Tensor dlogits;
    double loss;
    try {
      loss = cross_entropy(logits, batch.labels, &dlogits);
    } catch (const NumericError&) {
      loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(loss)) {
      throw TrainingDiverged(
          "non-finite loss at step " + std::to_string(global_step_),
          global_step_, plan_.lr_at(global_step_, 2), batch.ids);
    }
    model_.backward(dlogits);
    optimizer_.step(model_, plan_, global_step_);

    loss_history_.push_back({global_step_, static_cast<int>(epoch), phase,
                             loss});
    ++global_step_;
    ++taken;
  }
}

void Trainer::run(const Manifest& train,
                  const std::function<void(long, int)>& on_cycle_end) {
  const auto ends = plan_.cycle_end_steps();
  std::size_t next_end = 0;
  while (next_end < ends.size() && ends[next_end] <= global_step_) ++next_end;

  while (!finished()) {
    const long target = ends.at(next_end);
    advance(train, target - global_step_);
    if (on_cycle_end) {
      on_cycle_end(global_step_, static_cast<int>(next_end));
    }
    ++next_end;
  }
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw LoadError("cannot open checkpoint for writing: " + path.string());
  }
  BinaryWriter w(out);
  w.write_bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.write_u32(kCheckpointVersion);
  w.write_u64(config_hash_);
  w.write_u64(options_.seed);
  w.write_i64(global_step_);
  w.write_string(model_.backbone_spec().name);

  const auto params = model_.params();
  w.write_u32(static_cast<std::uint32_t>(params.size()));
  for (const nn::Param* p : params) {
    w.write_string(p->name);
    w.write_doubles(p->value);
  }
  const auto buffers = model_.buffers();
  w.write_u32(static_cast<std::uint32_t>(buffers.size()));
  for (const nn::Buffer* b : buffers) {
    w.write_string(b->name);
    w.write_doubles(b->value);
  }
  optimizer_.save(w);

  w.write_u64(loss_history_.size());
  for (const LossRecord& r : loss_history_) {
    w.write_i64(r.step);
    w.write_i64(r.epoch);
    w.write_i64(r.phase);
    w.write_f64(r.loss);
  }
  w.finish();
  if (!out) throw LoadError("failed writing checkpoint: " + path.string());
}

Trainer Trainer::load_checkpoint(const std::filesystem::path& path,
                                 const BackboneSpec& backbone,
                                 const HeadSpec& head, SchedulePlan plan,
                                 OptimizerSpec opt_spec, TrainerOptions options,
                                 std::uint64_t config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path.string());
  BinaryReader r(in, "checkpoint " + path.string());

  try {
    char magic[4];
    r.read_bytes(magic, sizeof magic);
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
      r.fail("bad magic (not a checkpoint)");
    }
    const std::uint32_t version = r.read_u32();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint format version " +
                                std::to_string(version) + " (expected " +
                                std::to_string(kCheckpointVersion) + ")",
                            static_cast<int>(version));
    }
    const std::uint64_t stored_hash = r.read_u64();
    if (config_hash != 0 && stored_hash != 0 && stored_hash != config_hash) {
      throw CheckpointError(
          "checkpoint was produced by a different configuration",
          kCheckpointVersion);
    }
    const std::uint64_t seed = r.read_u64();
    const long step = r.read_i64();
    const std::string arch = r.read_string();
    if (arch != backbone.name) {
      r.fail("checkpoint backbone '" + arch + "' does not match configured '" +
             backbone.name + "'");
    }

    options.seed = seed;
    Trainer trainer(build_architecture(backbone, head, seed), std::move(plan),
                    opt_spec, std::move(options), stored_hash);
    trainer.global_step_ = step;

    const auto params = trainer.model_.params();
    const std::uint32_t n_params = r.read_u32();
    if (n_params != params.size()) r.fail("parameter count mismatch");
    for (std::uint32_t i = 0; i < n_params; ++i) {
      const std::string name = r.read_string();
      auto values = r.read_doubles();
      if (name != params[i]->name || values.size() != params[i]->value.size()) {
        r.fail("parameter mismatch for '" + name + "'");
      }
      params[i]->value = std::move(values);
    }
    const auto buffers = trainer.model_.buffers();
    const std::uint32_t n_buffers = r.read_u32();
    if (n_buffers != buffers.size()) r.fail("buffer count mismatch");
    for (std::uint32_t i = 0; i < n_buffers; ++i) {
      const std::string name = r.read_string();
      auto values = r.read_doubles();
      if (name != buffers[i]->name ||
          values.size() != buffers[i]->value.size()) {
        r.fail("buffer mismatch for '" + name + "'");
      }
      buffers[i]->value = std::move(values);
    }
    trainer.optimizer_.load(r, trainer.model_);

    const std::uint64_t n_records = r.read_u64();
    trainer.loss_history_.clear();
    for (std::uint64_t i = 0; i < n_records; ++i) {
      LossRecord rec;
      rec.step = r.read_i64();
      rec.epoch = static_cast<int>(r.read_i64());
      rec.phase = static_cast<int>(r.read_i64());
      rec.loss = r.read_f64();
      trainer.loss_history_.push_back(rec);
    }
    r.verify_checksum();
    return trainer;
  } catch (const LoadError& e) {
    throw CheckpointError(e.what(), kCheckpointVersion);
  }
}

void write_loss_csv(const std::vector<LossRecord>& history,
                    std::ostream& out) {
  out << "step,epoch,phase,loss\n";
  char buf[64];
  for (const LossRecord& r : history) {
    std::snprintf(buf, sizeof buf, "%.17g", r.loss);
    out << r.step << ',' << r.epoch << ',' << r.phase << ',' << buf << '\n';
  }
}

std::vector<LossRecord> read_loss_csv(std::istream& in) {
  std::vector<LossRecord> records;
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("loss CSV: missing header");
  }
  while (line.size() && (line.back() == '\r')) line.pop_back();
  if (line != "step,epoch,phase,loss") {
    throw FormatError("loss CSV: unexpected header '" + line + "'");
  }
  while (std::getline(in, line)) {
    while (line.size() && (line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    LossRecord r;
    std::istringstream ss(line);
    char c1, c2, c3;
    if (!(ss >> r.step >> c1 >> r.epoch >> c2 >> r.phase >> c3 >> r.loss) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
      throw FormatError("loss CSV: malformed row '" + line + "'");
    }
    records.push_back(r);
  }
  return records;
}

}  // namespace dermanet
