#include "dermanet/manifest.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "dermanet/errors.hpp"

namespace dermanet {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  return s;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  auto t = trim(cell);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw FormatError("line " + std::to_string(line_no) +
                      ": not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split: '" + std::string(s) + "'");
}

Manifest::Manifest(std::vector<ManifestRecord> records)
    : records_(std::move(records)) {
  std::set<std::string> ids;
  for (const auto& r : records_) {
    if (r.label < 0 || r.label >= kNumCategories) {
      throw FormatError("record " + r.image_id + ": label index " +
                        std::to_string(r.label) + " out of range");
    }
    if (!ids.insert(r.image_id).second) {
      throw FormatError("duplicate image id in manifest: " + r.image_id);
    }
  }
}

std::array<std::size_t, kNumCategories> Manifest::category_counts() const {
  std::array<std::size_t, kNumCategories> counts{};
  for (const auto& r : records_) counts[static_cast<std::size_t>(r.label)]++;
  return counts;
}

Manifest parse_manifest(std::string_view csv_text, Split split,
                        const std::filesystem::path& image_root,
                        const CategoryTaxonomy& taxonomy) {
  std::vector<ManifestRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;

  while (pos <= csv_text.size()) {
    std::size_t eol = csv_text.find('\n', pos);
    std::string_view raw = (eol == std::string_view::npos)
                               ? csv_text.substr(pos)
                               : csv_text.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? csv_text.size() + 1 : eol + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    auto cells = split_csv_line(line);
    if (!header_seen) {
      if (cells.size() != 1 + taxonomy.size() || trim(cells[0]) != "image") {
        throw FormatError("malformed header: expected 'image," +
                          taxonomy.joined_codes() + "', got '" +
                          std::string(line) + "'");
      }
      for (std::size_t c = 0; c < taxonomy.size(); ++c) {
        if (trim(cells[c + 1]) != taxonomy.at(c).code) {
          throw FormatError("malformed header: column " +
                            std::to_string(c + 1) + " is '" + cells[c + 1] +
                            "', expected '" + taxonomy.at(c).code + "'");
        }
      }
      header_seen = true;
      continue;
    }

    if (cells.size() != 1 + taxonomy.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(1 + taxonomy.size()) +
                        " columns, got " + std::to_string(cells.size()));
    }
    std::string id(trim(cells[0]));
    int label = -1;
    int ones = 0;
    for (std::size_t c = 0; c < taxonomy.size(); ++c) {
      double v = parse_cell(cells[c + 1], line_no);
      if (v == 1.0) {
        label = static_cast<int>(c);
        ++ones;
      }
    }
    if (ones != 1) {
      throw AmbiguousLabelError(
          id, "image " + id + ": expected exactly one 1.0 label column, found " +
                  std::to_string(ones));
    }

    ManifestRecord rec;
    rec.image_id = id;
    rec.image_path = image_root / (id + ".jpg");
    rec.label = label;
    rec.split = split;
    records.push_back(std::move(rec));
  }

  if (!header_seen) throw FormatError("empty manifest: no header row");
  return Manifest(std::move(records));
}

Manifest load_manifest(const std::filesystem::path& csv_path, Split split,
                       const std::filesystem::path& image_root,
                       const CategoryTaxonomy& taxonomy) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw LoadError("cannot open manifest: " + csv_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), split, image_root, taxonomy);
}

std::string to_ground_truth_csv(const Manifest& manifest,
                                const CategoryTaxonomy& taxonomy) {
  std::string out = "image," + taxonomy.joined_codes() + "\n";
  for (const auto& r : manifest.records()) {
    out += r.image_id;
    for (std::size_t c = 0; c < taxonomy.size(); ++c) {
      out += (static_cast<int>(c) == r.label) ? ",1.0" : ",0.0";
    }
    out += "\n";
  }
  return out;
}

}  // namespace dermanet
