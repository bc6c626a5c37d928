#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dermanet/errors.hpp"

using namespace dermanet;
using namespace dermanet::cli;

int main(int argc, char** argv) {
  CLI::App app{"dermanet: seven-category dermoscopy image classifier"};
  app.require_subcommand(1);
  // global options (--config/--seed/--output) may appear after the subcommand
  app.fallthrough();

  GlobalArgs global;
  std::uint64_t seed_arg = 0;
  std::string output_arg;
  app.add_option("--config", global.config_path, "run configuration file")
      ->envname("DERMANET_CONFIG");
  auto* seed_opt =
      app.add_option("--seed", seed_arg, "override the configured seed");
  auto* output_opt = app.add_option("--output", output_arg,
                                    "override the configured output directory");

  auto* ingest = app.add_subcommand(
      "ingest", "validate manifests and images, write the manifest cache");

  bool dry_run = false;
  auto* train =
      app.add_subcommand("train", "run the two-phase training recipe");
  train->add_flag("--dry-run", dry_run,
                  "print the schedule plan without training");

  std::string checkpoint, split = "val", image_path;
  bool tta = false;
  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->required();
  evaluate->add_option("--split", split, "train, val or test");
  evaluate->add_flag("--tta", tta, "also evaluate with test-time augmentation");

  auto* predict =
      app.add_subcommand("predict", "classify a single dermoscopy image");
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->required();
  predict->add_option("image", image_path, "image file")->required();
  predict->add_flag("--tta", tta, "average over augmented copies");

  std::string loss_csv, schedule_csv;
  int steps_per_epoch = 0;
  auto* plot = app.add_subcommand(
      "plot", "emit figure data (loss curve, learning-rate curves)");
  plot->add_option("--loss", loss_csv, "loss CSV from training");
  plot->add_option("--schedule", schedule_csv, "schedule CSV from training");
  plot->add_option("--steps-per-epoch", steps_per_epoch,
                   "steps per epoch when deriving the schedule from config");

  CLI11_PARSE(app, argc, argv);
  if (!seed_opt->empty()) global.seed = seed_arg;
  if (!output_opt->empty()) global.output_dir = output_arg;

  try {
    if (ingest->parsed()) return cmd_ingest(global);
    if (train->parsed()) return cmd_train(global, dry_run);
    if (evaluate->parsed()) return cmd_evaluate(global, checkpoint, split, tta);
    if (predict->parsed())
      return cmd_predict(global, checkpoint, image_path, tta);
    if (plot->parsed())
      return cmd_plot(global, loss_csv, schedule_csv, steps_per_epoch);
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << " (lr " << e.lr() << ", batch:";
    for (const auto& id : e.batch_ids()) std::cerr << ' ' << id;
    std::cerr << ")\n";
    return kExitInternal;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const Error& e) {
    // input/config/format problems are user errors
    std::cerr << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUser;
}
