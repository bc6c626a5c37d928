#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dermanet/taxonomy.hpp"

namespace dermanet {

enum class Split { train, val, test };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct ManifestRecord {
  std::string image_id;
  std::filesystem::path image_path;
  int label = 0;  // canonical category index
  Split split = Split::train;
};

/// An immutable list of labeled records for one split. Image ids are unique
/// and labels are valid taxonomy indices.
class Manifest {
public:
  Manifest() = default;
  explicit Manifest(std::vector<ManifestRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ManifestRecord& at(std::size_t i) const { return records_.at(i); }
  const std::vector<ManifestRecord>& records() const { return records_; }

  /// Records per category, indexed canonically.
  std::array<std::size_t, kNumCategories> category_counts() const;

private:
  std::vector<ManifestRecord> records_;
};

/// Parses a one-hot ground-truth CSV (header `image,MEL,NV,...,VASC`; each
/// data row has exactly one 1.0 among the seven category columns). Image
/// paths are resolved as `<image_root>/<id>.jpg`; file existence is not
/// checked here — missing files surface when the image is loaded.
Manifest parse_manifest(std::string_view csv_text, Split split,
                        const std::filesystem::path& image_root,
                        const CategoryTaxonomy& taxonomy =
                            CategoryTaxonomy::ham10000());

/// Reads a ground-truth CSV from disk and parses it.
Manifest load_manifest(const std::filesystem::path& csv_path, Split split,
                       const std::filesystem::path& image_root,
                       const CategoryTaxonomy& taxonomy =
                           CategoryTaxonomy::ham10000());

/// Serializes back to the one-hot CSV format (round-trips with
/// parse_manifest).
std::string to_ground_truth_csv(const Manifest& manifest,
                                const CategoryTaxonomy& taxonomy =
                                    CategoryTaxonomy::ham10000());

}  // namespace dermanet
