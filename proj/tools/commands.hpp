#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dermanet/config.hpp"

namespace dermanet::cli {

// exit codes: 0 success, 1 internal error, 2 user/input error
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUser = 2;

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;       // overrides config seed
  std::optional<std::string> output_dir;   // overrides config output dir

  RunConfig load() const;
};

int cmd_ingest(const GlobalArgs& args);
int cmd_train(const GlobalArgs& args, bool dry_run);
int cmd_evaluate(const GlobalArgs& args, const std::string& checkpoint,
                 const std::string& split, bool tta);
int cmd_predict(const GlobalArgs& args, const std::string& checkpoint,
                const std::string& image_path, bool tta);
int cmd_plot(const GlobalArgs& args, const std::string& loss_csv,
             const std::string& schedule_csv, int steps_per_epoch);

}  // namespace dermanet::cli
