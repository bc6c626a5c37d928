#include "dermanet/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "dermanet/errors.hpp"

namespace dermanet {

namespace {

using Value = std::variant<bool, double, std::string, std::vector<double>>;
using Table = std::map<std::string, std::map<std::string, Value>>;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view text, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError("config line " + std::to_string(line_no) +
                      ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

Value parse_value(std::string_view text, std::size_t line_no) {
  text = trim(text);
  if (text.empty()) {
    throw FormatError("config line " + std::to_string(line_no) +
                      ": missing value");
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": unterminated string");
    }
    return std::string(text.substr(1, text.size() - 2));
  }
  if (text.front() == '[') {
    if (text.back() != ']') {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": unterminated array");
    }
    std::vector<double> items;
    std::string_view body = trim(text.substr(1, text.size() - 2));
    while (!body.empty()) {
      std::size_t comma = body.find(',');
      std::string_view cell =
          comma == std::string_view::npos ? body : body.substr(0, comma);
      items.push_back(parse_number(trim(cell), line_no));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
      if (body.empty()) {
        throw FormatError("config line " + std::to_string(line_no) +
                          ": trailing comma in array");
      }
    }
    return items;
  }
  return parse_number(text, line_no);
}

Table parse_table(std::string_view text) {
  Table table;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view raw = (eol == std::string_view::npos)
                               ? text.substr(pos)
                               : text.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw FormatError("config line " + std::to_string(line_no) +
                          ": malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    if (table[section].count(key)) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
    table[section][key] = parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

/// Typed extractor that tracks which keys were consumed so unknown keys can
/// be rejected (they are usually typos).
class Section {
public:
  Section(Table& table, std::string name) : name_(std::move(name)) {
    auto it = table.find(name_);
    if (it != table.end()) entries_ = &it->second;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!entries_) return;
    auto it = entries_->find(key);
    if (it == entries_->end()) return;
    consumed_.insert(key);
    read(it->second, key, out);
  }

  void finish() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_) {
      if (!consumed_.count(key)) {
        throw FormatError("config: unknown key '" + key + "' in section [" +
                          name_ + "]");
      }
    }
  }

private:
  [[noreturn]] void type_error(const std::string& key,
                               const char* expected) const {
    throw FormatError("config: key '" + key + "' in [" + name_ +
                      "] must be a " + expected);
  }

  void read(const Value& v, const std::string& key, std::string& out) const {
    if (const auto* s = std::get_if<std::string>(&v)) {
      out = *s;
      return;
    }
    type_error(key, "string");
  }
  void read(const Value& v, const std::string& key, bool& out) const {
    if (const auto* b = std::get_if<bool>(&v)) {
      out = *b;
      return;
    }
    type_error(key, "boolean");
  }
  void read(const Value& v, const std::string& key, double& out) const {
    if (const auto* d = std::get_if<double>(&v)) {
      out = *d;
      return;
    }
    type_error(key, "number");
  }
  void read(const Value& v, const std::string& key, int& out) const {
    double d;
    read(v, key, d);
    if (d != std::floor(d)) type_error(key, "integer");
    out = static_cast<int>(d);
  }
  void read(const Value& v, const std::string& key, std::uint64_t& out) const {
    double d;
    read(v, key, d);
    if (d < 0 || d != std::floor(d)) type_error(key, "non-negative integer");
    out = static_cast<std::uint64_t>(d);
  }
  void read(const Value& v, const std::string& key,
            std::vector<double>& out) const {
    if (const auto* a = std::get_if<std::vector<double>>(&v)) {
      out = *a;
      return;
    }
    type_error(key, "array");
  }
  void read(const Value& v, const std::string& key,
            std::vector<int>& out) const {
    std::vector<double> d;
    read(v, key, d);
    out.clear();
    for (double x : d) {
      if (x != std::floor(x)) type_error(key, "integer array");
      out.push_back(static_cast<int>(x));
    }
  }
  void read(const Value& v, const std::string& key, std::set<int>& out) const {
    std::vector<int> items;
    read(v, key, items);
    out = std::set<int>(items.begin(), items.end());
  }
  void read(const Value& v, const std::string& key,
            std::array<double, 3>& out) const {
    std::vector<double> d;
    read(v, key, d);
    if (d.size() != 3) type_error(key, "3-element array");
    std::copy(d.begin(), d.end(), out.begin());
  }

  std::string name_;
  std::map<std::string, Value>* entries_ = nullptr;
  std::set<std::string> consumed_;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::strlen(buf), back);
    if (back == v) break;
  }
  std::string s = buf;
  // keep numbers recognizable as floats where it matters; integers fine
  return s;
}

void phase_from_sections(Section& section, PhaseConfig& phase) {
  section.get("cycles", phase.cycles);
  section.get("first_cycle_epochs", phase.first_cycle_epochs);
  section.get("cycle_mult", phase.cycle_mult);
  section.get("frozen_groups", phase.frozen_groups);
}

}  // namespace

void RunConfig::validate() const {
  if (data.resize_side < 1) throw ConfigError("data.resize_side must be >= 1");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(train.base_lr > 0.0)) throw ConfigError("train.base_lr must be > 0");
  if (train.lr_shape != "cosine" && train.lr_shape != "triangular") {
    throw ConfigError("train.lr_shape must be 'cosine' or 'triangular'");
  }
  if (eval.n_aug < 0) throw ConfigError("eval.n_aug must be >= 0");
  OptimizerSpec::from_name(train.optimizer);
  augment.validate();
  schedule(1).validate();
  head_spec();  // validates widths/dropout arity
}

static SchedulePlan plan_from_train(const TrainSection& train,
                                    int steps_per_epoch, CycleShape shape) {
  SchedulePlan plan;
  plan.steps_per_epoch = steps_per_epoch;
  plan.shape = shape;
  for (const PhaseConfig* pc : {&train.phase1, &train.phase2}) {
    PhaseSpec phase;
    phase.n_cycles = pc->cycles;
    phase.first_cycle_epochs = pc->first_cycle_epochs;
    phase.cycle_mult = pc->cycle_mult;
    phase.base_lr = train.base_lr;
    phase.group_divisors = train.divisors;
    phase.frozen_groups = pc->frozen_groups;
    plan.phases.push_back(phase);
  }
  return plan;
}

SchedulePlan RunConfig::schedule(int steps_per_epoch) const {
  const CycleShape shape = train.lr_shape == "triangular"
                               ? CycleShape::triangular
                               : CycleShape::cosine;
  return plan_from_train(train, steps_per_epoch, shape);
}

BackboneSpec RunConfig::backbone_spec() const {
  BackboneSpec spec;
  spec.name = model.backbone;
  spec.feature_channels = model.feature_channels;
  spec.pretrained_weights = model.weights;
  spec.weights_hash = model.weights_hash;
  return spec;
}

HeadSpec RunConfig::head_spec() const {
  HeadSpec spec;
  spec.hidden_widths = model.hidden_widths;
  spec.dropout_ps = model.dropout;
  spec.n_outputs = kNumCategories;
  if (spec.dropout_ps.size() != spec.hidden_widths.size() + 1) {
    throw ConfigError("model.dropout must have one entry per linear block (" +
                      std::to_string(spec.hidden_widths.size() + 1) + ")");
  }
  return spec;
}

OptimizerSpec RunConfig::optimizer_spec() const {
  OptimizerSpec spec = OptimizerSpec::from_name(train.optimizer);
  spec.momentum = train.momentum;
  return spec;
}

TrainerOptions RunConfig::trainer_options() const {
  TrainerOptions options;
  options.batch_size = train.batch_size;
  options.augment_policy = augment;
  options.augment = true;
  options.seed = seed;
  options.side = data.resize_side;
  return options;
}

std::uint64_t RunConfig::recipe_hash() const {
  RunConfig pinned = *this;
  pinned.seed = 0;
  pinned.data.image_root.clear();
  pinned.data.train_manifest.clear();
  pinned.data.val_manifest.clear();
  pinned.data.test_manifest.clear();
  pinned.model.weights.clear();  // location is free; weights_hash pins content
  pinned.eval = EvalSection{};
  pinned.output_dir.clear();
  return fnv1a(serialize_config(pinned));
}

RunConfig parse_config(std::string_view toml_text) {
  Table table = parse_table(toml_text);
  RunConfig config;

  Section top(table, "");
  top.get("seed", config.seed);
  top.finish();

  Section data(table, "data");
  data.get("image_root", config.data.image_root);
  data.get("train_manifest", config.data.train_manifest);
  data.get("val_manifest", config.data.val_manifest);
  data.get("test_manifest", config.data.test_manifest);
  data.get("resize_side", config.data.resize_side);
  data.finish();

  Section model(table, "model");
  model.get("backbone", config.model.backbone);
  model.get("feature_channels", config.model.feature_channels);
  model.get("weights", config.model.weights);
  model.get("weights_hash", config.model.weights_hash);
  model.get("hidden_widths", config.model.hidden_widths);
  model.get("dropout", config.model.dropout);
  model.finish();

  Section train(table, "train");
  train.get("batch_size", config.train.batch_size);
  train.get("base_lr", config.train.base_lr);
  train.get("optimizer", config.train.optimizer);
  train.get("momentum", config.train.momentum);
  train.get("divisors", config.train.divisors);
  train.get("lr_shape", config.train.lr_shape);
  train.finish();

  Section phase1(table, "train.phase1");
  phase_from_sections(phase1, config.train.phase1);
  phase1.finish();

  Section phase2(table, "train.phase2");
  phase_from_sections(phase2, config.train.phase2);
  phase2.finish();

  Section augment(table, "augment");
  augment.get("p_hflip", config.augment.p_hflip);
  augment.get("p_vflip", config.augment.p_vflip);
  augment.get("zoom_min", config.augment.zoom_min);
  augment.get("zoom_max", config.augment.zoom_max);
  augment.finish();

  Section eval(table, "eval");
  eval.get("tta", config.eval.tta);
  eval.get("n_aug", config.eval.n_aug);
  eval.finish();

  Section output(table, "output");
  output.get("dir", config.output_dir);
  output.finish();

  // catch sections we never visited
  for (const auto& [name, _] : table) {
    static const std::set<std::string> known{
        "",      "data",         "model",        "train", "train.phase1",
        "train.phase2", "augment", "eval", "output"};
    if (!known.count(name)) {
      throw FormatError("config: unknown section [" + name + "]");
    }
  }

  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string format_int_array(const std::vector<int>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

std::string format_int_set(const std::set<int>& v) {
  return format_int_array(std::vector<int>(v.begin(), v.end()));
}

template <typename Seq>
std::string format_double_array(const Seq& v) {
  std::string out = "[";
  bool first = true;
  for (double x : v) {
    if (!first) out += ", ";
    out += format_double(x);
    first = false;
  }
  return out + "]";
}

void append_phase(std::string& out, const char* name,
                  const PhaseConfig& phase) {
  out += "[";
  out += name;
  out += "]\n";
  out += "cycles = " + std::to_string(phase.cycles) + "\n";
  out += "first_cycle_epochs = " + std::to_string(phase.first_cycle_epochs) +
         "\n";
  out += "cycle_mult = " + std::to_string(phase.cycle_mult) + "\n";
  out += "frozen_groups = " + format_int_set(phase.frozen_groups) + "\n\n";
}

}  // namespace

std::string serialize_config(const RunConfig& c) {
  std::string out;
  out += "seed = " + std::to_string(c.seed) + "\n\n";

  out += "[data]\n";
  out += "image_root = \"" + c.data.image_root + "\"\n";
  out += "train_manifest = \"" + c.data.train_manifest + "\"\n";
  out += "val_manifest = \"" + c.data.val_manifest + "\"\n";
  out += "test_manifest = \"" + c.data.test_manifest + "\"\n";
  out += "resize_side = " + std::to_string(c.data.resize_side) + "\n\n";

  out += "[model]\n";
  out += "backbone = \"" + c.model.backbone + "\"\n";
  out += "feature_channels = " + std::to_string(c.model.feature_channels) +
         "\n";
  out += "weights = \"" + c.model.weights + "\"\n";
  out += "weights_hash = \"" + c.model.weights_hash + "\"\n";
  out += "hidden_widths = " + format_int_array(c.model.hidden_widths) + "\n";
  out += "dropout = " + format_double_array(c.model.dropout) + "\n\n";

  out += "[train]\n";
  out += "batch_size = " + std::to_string(c.train.batch_size) + "\n";
  out += "base_lr = " + format_double(c.train.base_lr) + "\n";
  out += "optimizer = \"" + c.train.optimizer + "\"\n";
  out += "momentum = " + format_double(c.train.momentum) + "\n";
  out += "divisors = " + format_double_array(c.train.divisors) + "\n";
  out += "lr_shape = \"" + c.train.lr_shape + "\"\n\n";

  append_phase(out, "train.phase1", c.train.phase1);
  append_phase(out, "train.phase2", c.train.phase2);

  out += "[augment]\n";
  out += "p_hflip = " + format_double(c.augment.p_hflip) + "\n";
  out += "p_vflip = " + format_double(c.augment.p_vflip) + "\n";
  out += "zoom_min = " + format_double(c.augment.zoom_min) + "\n";
  out += "zoom_max = " + format_double(c.augment.zoom_max) + "\n\n";

  out += "[eval]\n";
  out += std::string("tta = ") + (c.eval.tta ? "true" : "false") + "\n";
  out += "n_aug = " + std::to_string(c.eval.n_aug) + "\n\n";

  out += "[output]\n";
  out += "dir = \"" + c.output_dir + "\"\n";
  return out;
}

}  // namespace dermanet
