#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dermanet/config.hpp"
#include "dermanet/manifest.hpp"
#include "dermanet/model.hpp"

namespace testsupport {

/// Fresh (emptied) directory under the system temp root, namespaced by tag.
std::filesystem::path fresh_temp_dir(const std::string& tag);

struct ToyDataset {
  std::filesystem::path image_root;
  std::filesystem::path csv_path;
  dermanet::Manifest manifest;
};

/// Writes `per_category` PNG images for the first `n_categories` categories
/// (category-distinct colors plus deterministic per-image texture), a
/// matching one-hot ground-truth CSV, and returns the parsed manifest.
ToyDataset make_toy_dataset(const std::filesystem::path& dir, int per_category,
                            int image_size, std::uint64_t seed,
                            int n_categories = 7,
                            dermanet::Split split = dermanet::Split::train);

/// Backbone spec for the 3-block toy convnet with a fresh deterministic init.
dermanet::BackboneSpec toy_backbone_spec(int channels = 8,
                                         std::uint64_t init_seed = 7);

/// Small head (16/16 hidden) with configurable dropout.
dermanet::HeadSpec toy_head_spec(double dropout = 0.0);

/// Assembled toy model ready for training.
dermanet::ModelAssembly make_toy_model(int channels = 8, double dropout = 0.0,
                                       std::uint64_t seed = 11);

/// A config file written to disk; returns its path.
std::filesystem::path write_toy_config(const std::filesystem::path& dir,
                                       const dermanet::RunConfig& config);

/// Toy RunConfig pointing at a dataset (single CSV reused for all splits).
dermanet::RunConfig toy_run_config(const ToyDataset& data,
                                   const std::filesystem::path& out_dir);

}  // namespace testsupport
