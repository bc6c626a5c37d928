#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dermanet/config.hpp"
#include "dermanet/trainer.hpp"
#include "support/fixtures.hpp"

using namespace dermanet;
namespace fs = std::filesystem;

namespace {

#ifndef DERMANET_CLI_PATH
#error "DERMANET_CLI_PATH must be defined by the build"
#endif

struct CliResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args, const fs::path& capture_dir) {
  const fs::path log = capture_dir / "cli_output.txt";
  const std::string cmd = std::string(DERMANET_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, buf.str()};
}

struct CliFixture {
  fs::path dir;
  testsupport::ToyDataset data;
  RunConfig config;
  fs::path config_path;

  explicit CliFixture(const std::string& tag, int per_category = 2,
                      int n_categories = 7) {
    dir = testsupport::fresh_temp_dir(tag);
    data = testsupport::make_toy_dataset(dir / "data", per_category, 48, 31,
                                         n_categories);
    config = testsupport::toy_run_config(data, dir / "out");
    config_path = testsupport::write_toy_config(dir, config);
  }

  std::string base_args() const { return "--config " + config_path.string(); }
};

}  // namespace

TEST_CASE("ingest reports per-split and per-category counts") {
  CliFixture fx("cli_ingest");
  const auto result = run_cli("ingest " + fx.base_args(), fx.dir);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("split train: 14 records") != std::string::npos);
  CHECK(result.output.find("split val: 14 records") != std::string::npos);
  CHECK(result.output.find("split test: 14 records") != std::string::npos);
  CHECK(result.output.find("MEL 2") != std::string::npos);
  CHECK(result.output.find("VASC 2") != std::string::npos);
  CHECK(fs::exists(fx.dir / "out" / "manifest_cache.csv"));
}

TEST_CASE("ingest exits 2 listing missing images") {
  CliFixture fx("cli_ingest_missing");
  fs::remove(fx.data.manifest.at(3).image_path);
  const auto result = run_cli("ingest " + fx.base_args(), fx.dir);
  CHECK(result.exit_code == 2);
  CHECK(result.output.find(fx.data.manifest.at(3).image_id) !=
        std::string::npos);
}

TEST_CASE("ingest exits 2 when the config is missing") {
  const auto dir = testsupport::fresh_temp_dir("cli_noconfig");
  const auto result = run_cli("ingest --config /definitely/not/here.toml", dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("train --dry-run prints the full reference plan") {
  CliFixture fx("cli_dryrun");
  // full-scale plan on the toy manifest: 14 records / batch 32 -> 1 step
  fx.config.train.batch_size = 32;
  fx.config.train.phase1 = {4, 1, 1, {0, 1}};
  fx.config.train.phase2 = {4, 1, 2, {}};
  fx.config_path = testsupport::write_toy_config(fx.dir, fx.config);

  const auto result = run_cli("train --dry-run " + fx.base_args(), fx.dir);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("total epochs: 19") != std::string::npos);
  CHECK(result.output.find("total cycles: 8") != std::string::npos);
  CHECK(result.output.find("restart epochs: [0, 1, 2, 3, 4, 5, 7, 11]") !=
        std::string::npos);
  CHECK(result.output.find("cycle epochs [1, 1, 1, 1]") != std::string::npos);
  CHECK(result.output.find("cycle epochs [1, 2, 4, 8]") != std::string::npos);
  // dry run trains nothing
  CHECK_FALSE(fs::exists(fx.dir / "out" / "loss.csv"));
}

TEST_CASE("train / evaluate / predict / plot work end to end on the toy set") {
  CliFixture fx("cli_endtoend");
  const auto result = run_cli("train " + fx.base_args(), fx.dir);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("final training loss") != std::string::npos);

  const fs::path out = fx.dir / "out";
  REQUIRE(fs::exists(out / "loss.csv"));
  REQUIRE(fs::exists(out / "schedule.csv"));
  REQUIRE(fs::exists(out / "checkpoint_final.dnck"));
  CHECK(fs::exists(out / "checkpoint_cycle0.dnck"));
  CHECK(fs::exists(out / "checkpoint_cycle1.dnck"));

  // deterministic rerun: identical loss CSV
  std::ifstream first(out / "loss.csv");
  std::ostringstream first_bytes;
  first_bytes << first.rdbuf();
  const auto rerun = run_cli("train " + fx.base_args(), fx.dir);
  CHECK(rerun.exit_code == 0);
  std::ifstream second(out / "loss.csv");
  std::ostringstream second_bytes;
  second_bytes << second.rdbuf();
  CHECK(first_bytes.str() == second_bytes.str());

  // evaluate with TTA on the validation split; a different seed or output
  // location must not invalidate the checkpoint
  const auto eval = run_cli("evaluate --checkpoint " +
                                (out / "checkpoint_final.dnck").string() +
                                " --split val --tta --seed 123 " +
                                fx.base_args(),
                            fx.dir);
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("balanced accuracy (val, plain):") !=
        std::string::npos);
  CHECK(eval.output.find("balanced accuracy (val, TTA):") !=
        std::string::npos);
  CHECK(fs::exists(out / "report_val.json"));
  CHECK(fs::exists(out / "report_val_tta.json"));
  CHECK(fs::exists(out / "predictions_val.csv"));

  // predict twice: identical output
  const std::string image = fx.data.manifest.at(0).image_path.string();
  const auto p1 = run_cli("predict --checkpoint " +
                              (out / "checkpoint_final.dnck").string() + " " +
                              image + " " + fx.base_args(),
                          fx.dir);
  CHECK(p1.exit_code == 0);
  CHECK(p1.output.find("predicted:") != std::string::npos);
  CHECK(p1.output.find("MEL ") != std::string::npos);
  const auto p2 = run_cli("predict --checkpoint " +
                              (out / "checkpoint_final.dnck").string() + " " +
                              image + " " + fx.base_args(),
                          fx.dir);
  CHECK(p2.output == p1.output);

  // plot from the emitted CSVs
  const auto plot = run_cli("plot --loss " + (out / "loss.csv").string() +
                                " --schedule " + (out / "schedule.csv").string() +
                                " " + fx.base_args(),
                            fx.dir);
  CHECK(plot.exit_code == 0);
  CHECK(fs::exists(out / "fig_loss.csv"));
  CHECK(fs::exists(out / "fig_lr_phase1.csv"));
  CHECK(fs::exists(out / "fig_lr_phase2.csv"));
}

TEST_CASE("the full two-phase recipe runs at toy scale: 19 epochs, 8 cycles") {
  CliFixture fx("cli_full_recipe");
  fx.config.train.phase1 = {4, 1, 1, {0, 1}};
  fx.config.train.phase2 = {4, 1, 2, {}};
  fx.config_path = testsupport::write_toy_config(fx.dir, fx.config);

  const auto result = run_cli("train " + fx.base_args(), fx.dir);
  REQUIRE(result.exit_code == 0);

  const fs::path out = fx.dir / "out";
  for (int cycle = 0; cycle < 8; ++cycle) {
    CHECK(fs::exists(out / ("checkpoint_cycle" + std::to_string(cycle) +
                            ".dnck")));
  }
  CHECK_FALSE(fs::exists(out / "checkpoint_cycle8.dnck"));

  // 19 toy epochs at 4 steps each
  std::ifstream loss(out / "loss.csv");
  const auto records = read_loss_csv(loss);
  CHECK(records.size() == 19u * 4u);
  CHECK(records.back().epoch == 18);
  CHECK(records.back().phase == 1);
}

TEST_CASE("plot counts the eight restarts of the reference schedule") {
  CliFixture fx("cli_plot");
  // derive the lr curves straight from a reference-shaped config
  fx.config.train.phase1 = {4, 1, 1, {0, 1}};
  fx.config.train.phase2 = {4, 1, 2, {}};
  fx.config_path = testsupport::write_toy_config(fx.dir, fx.config);
  const auto reference = run_cli("plot --steps-per-epoch 7 " + fx.base_args(),
                             fx.dir);
  CHECK(reference.exit_code == 0);
  CHECK(reference.output.find("learning-rate restarts: 8") != std::string::npos);

  const fs::path out = fx.dir / "out";
  std::ifstream p2(out / "fig_lr_phase2.csv");
  std::string line;
  std::getline(p2, line);
  CHECK(line == "step,lr_g0,lr_g1,lr_g2");
  std::size_t rows = 0;
  while (std::getline(p2, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 15u * 7u);  // fine-tuning phase: 15 epochs
}

TEST_CASE("plot rejects an empty loss CSV") {
  CliFixture fx("cli_plot_empty");
  const fs::path empty_csv = fx.dir / "empty.csv";
  std::ofstream(empty_csv) << "step,epoch,phase,loss\n";
  const auto result =
      run_cli("plot --loss " + empty_csv.string() + " " + fx.base_args(),
              fx.dir);
  CHECK(result.exit_code == 2);

  const fs::path garbage_csv = fx.dir / "garbage.csv";
  std::ofstream(garbage_csv) << "not,a,loss,file\n1,2\n";
  const auto r2 = run_cli(
      "plot --loss " + garbage_csv.string() + " " + fx.base_args(), fx.dir);
  CHECK(r2.exit_code == 2);
}

TEST_CASE("evaluate exits 2 for a missing checkpoint") {
  CliFixture fx("cli_eval_missing");
  const auto result = run_cli(
      "evaluate --checkpoint /nope.dnck --split val " + fx.base_args(),
      fx.dir);
  CHECK(result.exit_code == 2);
}

TEST_CASE("seed and output overrides reach the run") {
  CliFixture fx("cli_overrides");
  const fs::path alt_out = fx.dir / "alt";
  const auto result = run_cli("--output " + alt_out.string() + " --seed 99 " +
                                  "train " + fx.base_args(),
                              fx.dir);
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(alt_out / "loss.csv"));
}
