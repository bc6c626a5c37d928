#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "dermanet/rng.hpp"

namespace testsupport {

using namespace dermanet;
namespace fs = std::filesystem;

fs::path fresh_temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("dermanet_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

namespace {

// distinct base color per category (RGB)
constexpr std::array<std::array<int, 3>, 7> kBaseColors{{{230, 60, 60},
                                                         {60, 230, 60},
                                                         {60, 60, 230},
                                                         {230, 230, 60},
                                                         {230, 60, 230},
                                                         {60, 230, 230},
                                                         {180, 180, 180}}};

void write_toy_image(const fs::path& path, int category, int size,
                     std::uint64_t seed) {
  Rng rng(seed);
  cv::Mat img(size, size, CV_8UC3);
  const auto& base = kBaseColors[static_cast<std::size_t>(category)];
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      auto* px = img.ptr<std::uint8_t>(y) + 3 * x;
      for (int c = 0; c < 3; ++c) {
        const double gradient = 20.0 * (static_cast<double>(x + y) / (2 * size));
        const double noise = rng.uniform(-25.0, 25.0);
        const double v = base[static_cast<std::size_t>(2 - c)] + gradient + noise;
        px[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));  // BGR
      }
    }
  }
  if (!cv::imwrite(path.string(), img)) {
    throw std::runtime_error("fixture: failed to write " + path.string());
  }
}

}  // namespace

ToyDataset make_toy_dataset(const fs::path& dir, int per_category,
                            int image_size, std::uint64_t seed,
                            int n_categories, Split split) {
  fs::create_directories(dir);
  const auto& taxonomy = CategoryTaxonomy::ham10000();
  std::string csv = "image," + taxonomy.joined_codes() + "\n";
  int serial = 0;
  for (int c = 0; c < n_categories; ++c) {
    for (int i = 0; i < per_category; ++i, ++serial) {
      char id[32];
      std::snprintf(id, sizeof id, "TOY_%07d", serial);
      // manifests resolve <id>.jpg, so the fixtures are real JPEGs
      write_toy_image(dir / (std::string(id) + ".jpg"), c, image_size,
                      derive_seed(seed, "img", static_cast<std::uint64_t>(c),
                                  static_cast<std::uint64_t>(i)));
      csv += id;
      for (int col = 0; col < kNumCategories; ++col) {
        csv += (col == c) ? ",1.0" : ",0.0";
      }
      csv += "\n";
    }
  }
  const fs::path csv_path = dir / ("ground_truth_" + std::string(to_string(split)) + ".csv");
  std::ofstream out(csv_path);
  out << csv;
  out.close();

  ToyDataset data;
  data.image_root = dir;
  data.csv_path = csv_path;
  data.manifest = parse_manifest(csv, split, dir);
  return data;
}

BackboneSpec toy_backbone_spec(int channels, std::uint64_t init_seed) {
  BackboneSpec spec;
  spec.name = "toy";
  spec.feature_channels = channels;
  spec.pretrained_weights = "random:" + std::to_string(init_seed);
  return spec;
}

HeadSpec toy_head_spec(double dropout) {
  HeadSpec spec;
  spec.hidden_widths = {16, 16};
  spec.dropout_ps = {dropout, dropout, dropout};
  return spec;
}

ModelAssembly make_toy_model(int channels, double dropout, std::uint64_t seed) {
  return build_model(toy_backbone_spec(channels), toy_head_spec(dropout), seed);
}

RunConfig toy_run_config(const ToyDataset& data, const fs::path& out_dir) {
  RunConfig config;
  config.seed = 21;
  config.data.image_root = data.image_root.string();
  config.data.train_manifest = data.csv_path.string();
  config.data.val_manifest = data.csv_path.string();
  config.data.test_manifest = data.csv_path.string();
  config.model.backbone = "toy";
  config.model.feature_channels = 8;
  config.model.weights = "random:7";
  config.model.hidden_widths = {16, 16};
  config.model.dropout = {0.1, 0.1, 0.1};
  config.train.batch_size = 4;
  config.train.phase1 = {1, 1, 1, {0, 1}};
  config.train.phase2 = {1, 1, 1, {}};
  config.eval.n_aug = 2;
  config.output_dir = out_dir.string();
  return config;
}

fs::path write_toy_config(const fs::path& dir, const RunConfig& config) {
  const fs::path path = dir / "config.toml";
  std::ofstream out(path);
  out << serialize_config(config);
  return path;
}

}  // namespace testsupport
