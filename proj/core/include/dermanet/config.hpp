#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "dermanet/augment.hpp"
#include "dermanet/model.hpp"
#include "dermanet/optimizer.hpp"
#include "dermanet/schedule.hpp"
#include "dermanet/trainer.hpp"

namespace dermanet {

struct DataConfig {
  std::string image_root = "data/images";
  std::string train_manifest = "data/train_ground_truth.csv";
  std::string val_manifest = "data/val_ground_truth.csv";
  std::string test_manifest = "data/test_ground_truth.csv";
  int resize_side = 224;

  bool operator==(const DataConfig&) const = default;
};

struct ModelConfig {
  std::string backbone = "resnet50";
  int feature_channels = 2048;
  std::string weights = "weights/resnet50_imagenet.dnw";
  std::string weights_hash;
  std::vector<int> hidden_widths{512, 512};
  std::vector<double> dropout{0.25, 0.25, 0.5};

  bool operator==(const ModelConfig&) const = default;
};

struct PhaseConfig {
  int cycles = 1;
  int first_cycle_epochs = 1;
  int cycle_mult = 1;
  std::set<int> frozen_groups;

  bool operator==(const PhaseConfig&) const = default;
};

struct TrainSection {
  int batch_size = 32;
  double base_lr = 1e-2;
  std::string optimizer = "sgd_momentum";
  double momentum = 0.9;
  std::array<double, 3> divisors{9.0, 3.0, 1.0};
  std::string lr_shape = "cosine";  // or "triangular"
  PhaseConfig phase1{4, 1, 1, {0, 1}};
  PhaseConfig phase2{4, 1, 2, {}};

  bool operator==(const TrainSection&) const = default;
};

struct EvalSection {
  bool tta = true;
  int n_aug = 4;

  bool operator==(const EvalSection&) const = default;
};

/// The whole run description. Defaults encode the reference training recipe:
/// 224 resize, batch 32, base rate 1e-2, four one-epoch frozen cycles then
/// cycles of 1/2/4/8 epochs, group divisors 9/3/1.
struct RunConfig {
  std::uint64_t seed = 42;
  DataConfig data;
  ModelConfig model;
  TrainSection train;
  AugmentationPolicy augment;
  EvalSection eval;
  std::string output_dir = "runs/default";

  bool operator==(const RunConfig&) const = default;

  void validate() const;

  SchedulePlan schedule(int steps_per_epoch) const;
  BackboneSpec backbone_spec() const;
  HeadSpec head_spec() const;
  OptimizerSpec optimizer_spec() const;
  TrainerOptions trainer_options() const;

  /// Hash of the training recipe (model, train, augment sections and the
  /// resize side), recorded in checkpoints so a resume with different
  /// hyperparameters is rejected. Seed, paths, output and eval settings are
  /// deliberately excluded: the seed is restored from the checkpoint itself
  /// and the rest do not affect the trained state.
  std::uint64_t recipe_hash() const;
};

RunConfig parse_config(std::string_view toml_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical serialization; parse(serialize(c)) == c, and serialization of a
/// parsed file is idempotent.
std::string serialize_config(const RunConfig& config);

}  // namespace dermanet
