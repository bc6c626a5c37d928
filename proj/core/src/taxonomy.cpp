#include "dermanet/taxonomy.hpp"

#include <set>

#include "dermanet/errors.hpp"

namespace dermanet {

CategoryTaxonomy::CategoryTaxonomy(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  if (categories_.size() != kNumCategories) {
    throw ConfigError("taxonomy must have exactly " +
                      std::to_string(kNumCategories) + " categories, got " +
                      std::to_string(categories_.size()));
  }
  std::set<std::string> seen;
  for (const auto& c : categories_) {
    if (c.code.empty()) throw ConfigError("taxonomy category code is empty");
    if (!seen.insert(c.code).second) {
      throw ConfigError("duplicate taxonomy code: " + c.code);
    }
  }
}

const CategoryTaxonomy& CategoryTaxonomy::ham10000() {
  static const CategoryTaxonomy taxonomy({
      {"MEL", "Melanoma"},
      {"NV", "Melanocytic nevus"},
      {"BCC", "Basal cell carcinoma"},
      {"AKIEC", "Actinic keratosis / intraepithelial carcinoma"},
      {"BKL", "Benign keratosis"},
      {"DF", "Dermatofibroma"},
      {"VASC", "Vascular lesion"},
  });
  return taxonomy;
}

std::optional<std::size_t> CategoryTaxonomy::index_of(
    std::string_view code) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].code == code) return i;
  }
  return std::nullopt;
}

std::string CategoryTaxonomy::joined_codes(std::string_view sep) const {
  std::string out;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (i > 0) out += sep;
    out += categories_[i].code;
  }
  return out;
}

}  // namespace dermanet
