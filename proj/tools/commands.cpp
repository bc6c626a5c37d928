#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dermanet/errors.hpp"
#include "dermanet/metrics.hpp"

namespace dermanet::cli {

namespace fs = std::filesystem;

RunConfig GlobalArgs::load() const {
  if (config_path.empty()) {
    throw ConfigError("missing --config");
  }
  RunConfig config = load_config(config_path);
  if (seed) config.seed = *seed;
  if (output_dir) config.output_dir = *output_dir;
  return config;
}

namespace {

struct SplitSource {
  Split split;
  const std::string* manifest_path;
};

std::array<SplitSource, 3> split_sources(const RunConfig& config) {
  return {{{Split::train, &config.data.train_manifest},
           {Split::val, &config.data.val_manifest},
           {Split::test, &config.data.test_manifest}}};
}

const std::string& manifest_path_for(const RunConfig& config,
                                     const std::string& split_name) {
  switch (split_from_string(split_name)) {
    case Split::train: return config.data.train_manifest;
    case Split::val: return config.data.val_manifest;
    case Split::test: return config.data.test_manifest;
  }
  throw ConfigError("unreachable split");
}

void ensure_output_dir(const RunConfig& config) {
  fs::create_directories(config.output_dir);
}

EvalOptions eval_options_from(const RunConfig& config, bool tta) {
  EvalOptions options;
  options.tta = tta;
  options.n_aug = config.eval.n_aug;
  options.policy = config.augment;
  options.seed = config.seed;
  options.side = config.data.resize_side;
  return options;
}

int plan_steps_per_epoch(const RunConfig& config) {
  Manifest train = load_manifest(config.data.train_manifest, Split::train,
                                 config.data.image_root);
  if (train.empty()) throw ConfigError("training manifest is empty");
  return static_cast<int>(
      steps_per_epoch(train.size(), config.train.batch_size));
}

std::string format_set(const std::set<int>& s) {
  std::string out = "{";
  bool first = true;
  for (int v : s) {
    if (!first) out += ", ";
    out += std::to_string(v);
    first = false;
  }
  return out + "}";
}

template <typename Seq>
std::string format_list(const Seq& v) {
  std::string out = "[";
  bool first = true;
  for (auto x : v) {
    if (!first) out += ", ";
    out += std::to_string(x);
    first = false;
  }
  return out + "]";
}

void print_plan(const RunConfig& config, const SchedulePlan& plan,
                std::size_t n_train) {
  std::cout << "training plan\n";
  for (std::size_t p = 0; p < plan.phases.size(); ++p) {
    const auto& phase = plan.phases[p];
    std::cout << "  phase " << (p + 1) << ": cycle epochs "
              << format_list(phase.cycle_epochs()) << ", frozen groups "
              << format_set(phase.frozen_groups) << "\n";
  }
  std::cout << "  total epochs: " << plan.total_epochs() << "\n";
  std::cout << "  total cycles: " << plan.total_cycles() << "\n";

  std::vector<long> restart_epochs;
  for (long s : plan.restart_steps()) {
    restart_epochs.push_back(s / plan.steps_per_epoch);
  }
  std::cout << "  restart epochs: " << format_list(restart_epochs) << "\n";
  std::cout << "  steps per epoch: " << plan.steps_per_epoch << " (" << n_train
            << " records / batch " << config.train.batch_size << ")\n";
  std::cout << "  total steps: " << plan.total_steps() << "\n";
  std::cout << "  restart steps: " << format_list(plan.restart_steps())
            << "\n";
}

Trainer load_trainer(const RunConfig& config, const std::string& checkpoint,
                     int steps_per_epoch) {
  TrainerOptions options = config.trainer_options();
  return Trainer::load_checkpoint(
      checkpoint, config.backbone_spec(), config.head_spec(),
      config.schedule(steps_per_epoch), config.optimizer_spec(), options,
      config.recipe_hash());
}

}  // namespace

int cmd_ingest(const GlobalArgs& args) {
  const RunConfig config = args.load();
  ensure_output_dir(config);

  if (!fs::exists(config.data.image_root)) {
    std::cerr << "error: image root does not exist: " << config.data.image_root
              << "\n";
    return kExitUser;
  }

  std::vector<Manifest> manifests;
  std::vector<std::string> missing;
  const auto& taxonomy = CategoryTaxonomy::ham10000();

  for (const auto& source : split_sources(config)) {
    Manifest manifest = load_manifest(*source.manifest_path, source.split,
                                      config.data.image_root);
    for (const auto& rec : manifest.records()) {
      if (!fs::exists(rec.image_path)) {
        missing.push_back(rec.image_id);
        continue;
      }
      try {
        load_and_resize(rec.image_path, 8);  // decode check at minimal size
      } catch (const LoadError&) {
        missing.push_back(rec.image_id);
      }
    }
    manifests.push_back(std::move(manifest));
  }

  if (!missing.empty()) {
    std::cerr << "error: " << missing.size()
              << " missing or undecodable image files:\n";
    for (const auto& id : missing) std::cerr << "  " << id << "\n";
    return kExitUser;
  }

  const fs::path cache_path = fs::path(config.output_dir) / "manifest_cache.csv";
  std::ofstream cache(cache_path);
  cache << "image,split,label,path\n";
  for (const auto& manifest : manifests) {
    for (const auto& rec : manifest.records()) {
      cache << rec.image_id << ',' << to_string(rec.split) << ','
            << taxonomy.at(static_cast<std::size_t>(rec.label)).code << ','
            << rec.image_path.string() << "\n";
    }
  }
  if (!cache) {
    std::cerr << "error: failed to write " << cache_path << "\n";
    return kExitInternal;
  }

  for (const auto& manifest : manifests) {
    std::cout << "split " << to_string(manifest.at(0).split) << ": "
              << manifest.size() << " records\n";
    const auto counts = manifest.category_counts();
    std::cout << " ";
    for (std::size_t c = 0; c < counts.size(); ++c) {
      std::cout << " " << taxonomy.at(c).code << " " << counts[c];
    }
    std::cout << "\n";
  }
  std::cout << "wrote manifest cache: " << cache_path.string() << "\n";
  return kExitOk;
}

int cmd_train(const GlobalArgs& args, bool dry_run) {
  const RunConfig config = args.load();
  Manifest train = load_manifest(config.data.train_manifest, Split::train,
                                 config.data.image_root);
  if (train.empty()) throw ConfigError("training manifest is empty");

  const int spe =
      static_cast<int>(steps_per_epoch(train.size(), config.train.batch_size));
  const SchedulePlan plan = config.schedule(spe);

  print_plan(config, plan, train.size());
  if (dry_run) return kExitOk;

  ensure_output_dir(config);
  const fs::path out_dir(config.output_dir);

  {
    std::ofstream sched_csv(out_dir / "schedule.csv");
    write_schedule_csv(plan, sched_csv);
  }

  std::cout << "building model (" << config.model.backbone << ")...\n";
  ModelAssembly model =
      build_model(config.backbone_spec(), config.head_spec(), config.seed);
  Trainer trainer(std::move(model), plan, config.optimizer_spec(),
                  config.trainer_options(), config.recipe_hash());

  using clock = std::chrono::steady_clock;
  std::vector<double> phase_seconds(plan.phases.size(), 0.0);
  auto last_mark = clock::now();

  trainer.run(train, [&](long step, int cycle) {
    const int phase = plan.phase_of(step - 1);
    phase_seconds[static_cast<std::size_t>(phase)] +=
        std::chrono::duration<double>(clock::now() - last_mark).count();
    last_mark = clock::now();

    const fs::path ckpt =
        out_dir / ("checkpoint_cycle" + std::to_string(cycle) + ".dnck");
    trainer.save_checkpoint(ckpt);
    std::cout << "cycle " << cycle << " done at step " << step << ", loss "
              << trainer.loss_history().back().loss << ", checkpoint "
              << ckpt.string() << "\n";
  });

  trainer.save_checkpoint(out_dir / "checkpoint_final.dnck");
  {
    std::ofstream loss_csv(out_dir / "loss.csv");
    write_loss_csv(trainer.loss_history(), loss_csv);
  }

  // final training loss two ways: last step, and mean over the final epoch
  const auto& history = trainer.loss_history();
  const double final_step_loss = history.back().loss;
  const int last_epoch = history.back().epoch;
  double epoch_sum = 0.0;
  int epoch_n = 0;
  for (const auto& r : history) {
    if (r.epoch == last_epoch) {
      epoch_sum += r.loss;
      ++epoch_n;
    }
  }
  std::printf("final training loss (last step): %.6f\n", final_step_loss);
  std::printf("final training loss (last epoch mean): %.6f\n",
              epoch_sum / epoch_n);
  for (std::size_t p = 0; p < phase_seconds.size(); ++p) {
    std::printf("phase %zu time: %.1f s\n", p + 1, phase_seconds[p]);
  }
  std::cout << "wrote " << (out_dir / "loss.csv").string() << " and "
            << (out_dir / "schedule.csv").string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const GlobalArgs& args, const std::string& checkpoint,
                 const std::string& split, bool tta) {
  const RunConfig config = args.load();
  ensure_output_dir(config);
  const fs::path out_dir(config.output_dir);

  Manifest manifest = load_manifest(manifest_path_for(config, split),
                                    split_from_string(split),
                                    config.data.image_root);

  Trainer trainer = load_trainer(config, checkpoint, 1);
  ModelAssembly& model = trainer.model();

  const auto run_one = [&](bool use_tta, const std::string& suffix) {
    std::vector<RecordPrediction> predictions;
    EvaluationReport report = evaluate(
        model, manifest, eval_options_from(config, use_tta), &predictions);
    {
      std::ofstream json(out_dir / ("report_" + split + suffix + ".json"));
      write_report_json(report, json);
    }
    {
      std::ofstream csv(out_dir / ("predictions_" + split + suffix + ".csv"));
      write_predictions_csv(predictions, csv);
    }
    return report;
  };

  const EvaluationReport plain = run_one(false, "");
  std::printf("balanced accuracy (%s, plain): %.4f\n", split.c_str(),
              plain.balanced_accuracy);
  if (tta) {
    const EvaluationReport with_tta = run_one(true, "_tta");
    std::printf("balanced accuracy (%s, TTA): %.4f\n", split.c_str(),
                with_tta.balanced_accuracy);
  }
  std::cout << "n_records: " << plain.n_records << "\n";
  return kExitOk;
}

int cmd_predict(const GlobalArgs& args, const std::string& checkpoint,
                const std::string& image_path, bool tta) {
  const RunConfig config = args.load();
  Trainer trainer = load_trainer(config, checkpoint, 1);
  ModelAssembly& model = trainer.model();

  ImageTensor img =
      normalize(load_and_resize(image_path, config.data.resize_side));
  PredictionVector pred;
  if (tta) {
    Rng rng(derive_seed(config.seed, "tta", fnv1a(image_path)));
    pred = tta_predict(model, img, config.eval.n_aug, config.augment, rng);
  } else {
    pred = predict(model, img);
  }

  const auto& taxonomy = CategoryTaxonomy::ham10000();
  for (std::size_t c = 0; c < taxonomy.size(); ++c) {
    std::printf("%s %.6f\n", taxonomy.at(c).code.c_str(), pred.probs[c]);
  }
  std::cout << "predicted: "
            << taxonomy.at(static_cast<std::size_t>(argmax_label(pred))).code
            << "\n";
  return kExitOk;
}

namespace {

struct ScheduleRow {
  long step;
  int epoch, phase, cycle;
  std::array<double, 3> lr;
};

std::vector<ScheduleRow> read_schedule_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open schedule CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("schedule CSV: empty file");
  while (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "step,epoch,phase,cycle,lr_g0,lr_g1,lr_g2") {
    throw FormatError("schedule CSV: unexpected header '" + line + "'");
  }
  std::vector<ScheduleRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ScheduleRow row;
    char c;
    std::istringstream ss(line);
    if (!(ss >> row.step >> c >> row.epoch >> c >> row.phase >> c >>
          row.cycle >> c >> row.lr[0] >> c >> row.lr[1] >> c >> row.lr[2])) {
      throw FormatError("schedule CSV: malformed row '" + line + "'");
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw FormatError("schedule CSV: no data rows");
  return rows;
}

void write_lr_figure(const std::vector<ScheduleRow>& rows, int phase,
                     const fs::path& path) {
  std::ofstream out(path);
  out << "step,lr_g0,lr_g1,lr_g2\n";
  char buf[128];
  for (const auto& row : rows) {
    if (row.phase != phase) continue;
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g", row.step,
                  row.lr[0], row.lr[1], row.lr[2]);
    out << buf << "\n";
  }
}

}  // namespace

int cmd_plot(const GlobalArgs& args, const std::string& loss_csv,
             const std::string& schedule_csv, int steps_per_epoch_arg) {
  const RunConfig config = args.load();
  ensure_output_dir(config);
  const fs::path out_dir(config.output_dir);
  bool did_anything = false;

  if (!loss_csv.empty()) {
    std::ifstream in(loss_csv);
    if (!in) throw LoadError("cannot open loss CSV: " + loss_csv);
    const auto records = read_loss_csv(in);
    if (records.empty()) {
      throw FormatError("loss CSV has no data rows: " + loss_csv);
    }
    std::ofstream out(out_dir / "fig_loss.csv");
    out << "step,loss\n";
    char buf[64];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%ld,%.17g", r.step, r.loss);
      out << buf << "\n";
    }
    std::cout << "wrote " << (out_dir / "fig_loss.csv").string() << " ("
              << records.size() << " points)\n";
    did_anything = true;
  }

  std::vector<ScheduleRow> schedule_rows;
  if (!schedule_csv.empty()) {
    schedule_rows = read_schedule_csv(schedule_csv);
  } else if (!did_anything) {
    // no inputs: derive the schedule from the config
    int spe = steps_per_epoch_arg;
    if (spe <= 0) spe = plan_steps_per_epoch(config);
    const SchedulePlan plan = config.schedule(spe);
    for (const auto& row : plan.table()) {
      schedule_rows.push_back({row.step, row.epoch, row.phase, row.cycle,
                               {row.lr[0], row.lr[1], row.lr[2]}});
    }
  }

  if (!schedule_rows.empty()) {
    write_lr_figure(schedule_rows, 0, out_dir / "fig_lr_phase1.csv");
    write_lr_figure(schedule_rows, 1, out_dir / "fig_lr_phase2.csv");
    int restarts = 0;
    double prev = -1.0;
    for (const auto& row : schedule_rows) {
      if (row.lr[2] > prev) ++restarts;
      prev = row.lr[2];
    }
    std::cout << "wrote " << (out_dir / "fig_lr_phase1.csv").string() << " and "
              << (out_dir / "fig_lr_phase2.csv").string() << "\n";
    std::cout << "learning-rate restarts: " << restarts << "\n";
    did_anything = true;
  }

  if (!did_anything) {
    throw ConfigError("plot: nothing to do (no --loss or --schedule input)");
  }
  return kExitOk;
}

}  // namespace dermanet::cli
