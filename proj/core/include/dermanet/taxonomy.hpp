#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dermanet {

inline constexpr int kNumCategories = 7;

struct Category {
  std::string code;
  std::string display_name;
};

/// The seven diagnosis categories in their canonical index order. The order
/// matches the ground-truth CSV column order (MEL, NV, BCC, AKIEC, BKL, DF,
/// VASC) and is the index basis for logits and confusion-matrix axes.
class CategoryTaxonomy {
public:
  /// Builds a taxonomy; requires exactly 7 entries with unique codes.
  explicit CategoryTaxonomy(std::vector<Category> categories);

  /// The canonical HAM10000 taxonomy.
  static const CategoryTaxonomy& ham10000();

  std::size_t size() const { return categories_.size(); }
  const Category& at(std::size_t index) const { return categories_.at(index); }

  /// Index of a category code, or nullopt if unknown.
  std::optional<std::size_t> index_of(std::string_view code) const;

  /// Codes in canonical order, joined by `sep` (header/printing helper).
  std::string joined_codes(std::string_view sep = ",") const;

private:
  std::vector<Category> categories_;
};

}  // namespace dermanet
