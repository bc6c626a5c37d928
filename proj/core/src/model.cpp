#include "dermanet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "dermanet/errors.hpp"
#include "dermanet/image.hpp"
#include "dermanet/serialize.hpp"

namespace dermanet {

namespace {
constexpr char kWeightsMagic[4] = {'D', 'N', 'W', 'T'};
constexpr std::uint32_t kWeightsVersion = 1;
}  // namespace

ModelAssembly::ModelAssembly(std::unique_ptr<nn::Sequential> backbone,
                             std::unique_ptr<nn::Sequential> head,
                             std::array<std::vector<nn::Layer*>, 3> groups,
                             BackboneSpec backbone_spec, HeadSpec head_spec)
    : backbone_(std::move(backbone)),
      head_(std::move(head)),
      groups_(std::move(groups)),
      backbone_spec_(std::move(backbone_spec)),
      head_spec_(std::move(head_spec)) {
  // The partition must be exhaustive: every parameter reachable from the
  // backbone or head appears in exactly one group.
  std::vector<nn::Param*> all;
  backbone_->collect_params(all);
  head_->collect_params(all);
  std::size_t grouped = 0;
  for (int g = 0; g < 3; ++g) grouped += group_params(g).size();
  if (grouped != all.size()) {
    throw ConfigError("layer-group partition does not cover the model (" +
                      std::to_string(grouped) + " of " +
                      std::to_string(all.size()) + " parameters)");
  }
}

nn::Tensor ModelAssembly::forward(const ImageBatch& batch, bool training,
                                  std::uint64_t step_seed) {
  if (!batch.normalized) {
    throw ContractViolation("forward: batch is not normalized");
  }
  if (batch.images.h() != kImageSide || batch.images.w() != kImageSide) {
    throw ContractViolation("forward: expected 224x224 input");
  }
  nn::ForwardCtx ctx{training, step_seed};
  nn::Tensor features = backbone_->forward(batch.images, ctx);
  return head_->forward(features, ctx);
}

void ModelAssembly::backward(const nn::Tensor& dlogits) {
  nn::Tensor dfeat = head_->backward(dlogits, backbone_->has_trainable_params());
  if (!dfeat.empty()) {
    backbone_->backward(dfeat, false);
  }
}

void ModelAssembly::zero_grads() {
  for (nn::Param* p : params()) p->zero_grad();
}

void ModelAssembly::set_frozen(const std::set<int>& group_indices,
                               bool frozen) {
  for (int g : group_indices) {
    if (g < 0 || g >= 3) throw ContractViolation("group index out of range");
    frozen_[g] = frozen;
    for (nn::Layer* layer : groups_[g]) layer->set_frozen(frozen);
  }
}

void ModelAssembly::apply_frozen_set(const std::set<int>& frozen_groups) {
  for (int g = 0; g < 3; ++g) {
    const bool f = frozen_groups.count(g) > 0;
    frozen_[g] = f;
    for (nn::Layer* layer : groups_[g]) layer->set_frozen(f);
  }
}

bool ModelAssembly::group_frozen(int group) const {
  return frozen_.at(static_cast<std::size_t>(group));
}

std::vector<nn::Param*> ModelAssembly::group_params(int group) const {
  std::vector<nn::Param*> out;
  for (nn::Layer* layer : groups_.at(static_cast<std::size_t>(group))) {
    layer->collect_params(out);
  }
  return out;
}

std::vector<nn::Buffer*> ModelAssembly::group_buffers(int group) const {
  std::vector<nn::Buffer*> out;
  for (nn::Layer* layer : groups_.at(static_cast<std::size_t>(group))) {
    layer->collect_buffers(out);
  }
  return out;
}

std::vector<nn::Param*> ModelAssembly::params() const {
  std::vector<nn::Param*> out;
  for (int g = 0; g < 3; ++g) {
    auto gp = group_params(g);
    out.insert(out.end(), gp.begin(), gp.end());
  }
  return out;
}

std::vector<nn::Buffer*> ModelAssembly::buffers() const {
  std::vector<nn::Buffer*> out;
  for (int g = 0; g < 3; ++g) {
    auto gb = group_buffers(g);
    out.insert(out.end(), gb.begin(), gb.end());
  }
  return out;
}

std::uint64_t ModelAssembly::group_checksum(int group) const {
  std::uint64_t h = 14695981039346656037ull;
  for (const nn::Param* p : group_params(group)) {
    h = fnv1a(p->name.data(), p->name.size(), h);
    h = fnv1a(p->value.data(), p->value.size() * sizeof(nn::Scalar), h);
  }
  for (const nn::Buffer* b : group_buffers(group)) {
    h = fnv1a(b->name.data(), b->name.size(), h);
    h = fnv1a(b->value.data(), b->value.size() * sizeof(nn::Scalar), h);
  }
  return h;
}

std::unique_ptr<nn::Sequential> build_head(int feature_channels,
                                           const HeadSpec& spec) {
  if (spec.n_outputs < 1) throw ConfigError("head: n_outputs must be >= 1");
  const std::size_t n_blocks = spec.hidden_widths.size() + 1;
  if (spec.dropout_ps.size() != n_blocks) {
    throw ConfigError("head: expected " + std::to_string(n_blocks) +
                      " dropout probabilities, got " +
                      std::to_string(spec.dropout_ps.size()));
  }

  auto head = std::make_unique<nn::Sequential>("head");
  head->add(std::make_unique<nn::ConcatPool>("head.pool"));

  std::vector<int> widths;
  widths.push_back(2 * feature_channels);
  widths.insert(widths.end(), spec.hidden_widths.begin(),
                spec.hidden_widths.end());
  widths.push_back(spec.n_outputs);

  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string tag = std::to_string(i + 1);
    head->add(std::make_unique<nn::BatchNorm>("head.bn" + tag, widths[i]));
    head->add(std::make_unique<nn::Dropout>("head.drop" + tag,
                                            spec.dropout_ps[i], i));
    head->add(std::make_unique<nn::Linear>("head.fc" + tag, widths[i],
                                           widths[i + 1]));
    if (i + 2 < widths.size()) {
      head->add(std::make_unique<nn::ReLU>("head.relu" + tag));
    }
  }
  return head;
}

std::string file_content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open file for hashing: " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char hex[32];
  std::snprintf(hex, sizeof hex, "fnv64:%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

void save_backbone_weights(ModelAssembly& model,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open for writing: " + path.string());
  BinaryWriter w(out);
  w.write_bytes(kWeightsMagic, sizeof kWeightsMagic);
  w.write_u32(kWeightsVersion);
  w.write_string(model.backbone_spec().name);

  std::vector<nn::Param*> params;
  std::vector<nn::Buffer*> buffers;
  model.backbone().collect_params(params);
  model.backbone().collect_buffers(buffers);
  w.write_u32(static_cast<std::uint32_t>(params.size()));
  for (const nn::Param* p : params) {
    w.write_string(p->name);
    w.write_doubles(p->value);
  }
  w.write_u32(static_cast<std::uint32_t>(buffers.size()));
  for (const nn::Buffer* b : buffers) {
    w.write_string(b->name);
    w.write_doubles(b->value);
  }
  w.finish();
  if (!out) throw LoadError("failed writing weights: " + path.string());
}

namespace {

void load_backbone_weights(ModelAssembly& model,
                           const std::filesystem::path& path,
                           const std::string& expected_hash) {
  if (!std::filesystem::exists(path)) {
    throw LoadError("pretrained weights not found: " + path.string());
  }
  if (!expected_hash.empty()) {
    const std::string actual = file_content_hash(path);
    if (actual != expected_hash) {
      throw LoadError("weights artifact hash mismatch for " + path.string() +
                      ": expected " + expected_hash + ", got " + actual);
    }
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open weights: " + path.string());
  BinaryReader r(in, "weights artifact " + path.string());

  char magic[4];
  r.read_bytes(magic, sizeof magic);
  if (std::memcmp(magic, kWeightsMagic, sizeof magic) != 0) {
    r.fail("bad magic (not a weights artifact)");
  }
  const std::uint32_t version = r.read_u32();
  if (version != kWeightsVersion) {
    r.fail("unsupported format version " + std::to_string(version));
  }
  const std::string arch = r.read_string();
  if (arch != model.backbone_spec().name) {
    r.fail("artifact is for backbone '" + arch + "', expected '" +
           model.backbone_spec().name + "'");
  }

  std::vector<nn::Param*> params;
  std::vector<nn::Buffer*> buffers;
  model.backbone().collect_params(params);
  model.backbone().collect_buffers(buffers);

  const std::uint32_t n_params = r.read_u32();
  if (n_params != params.size()) {
    r.fail("parameter count mismatch: artifact has " +
           std::to_string(n_params) + ", model needs " +
           std::to_string(params.size()));
  }
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.read_string();
    auto values = r.read_doubles();
    if (name != params[i]->name) {
      r.fail("parameter name mismatch at index " + std::to_string(i) + ": '" +
             name + "' vs '" + params[i]->name + "'");
    }
    if (values.size() != params[i]->value.size()) {
      r.fail("parameter size mismatch for " + name);
    }
    params[i]->value = std::move(values);
  }
  const std::uint32_t n_buffers = r.read_u32();
  if (n_buffers != buffers.size()) r.fail("buffer count mismatch");
  for (std::uint32_t i = 0; i < n_buffers; ++i) {
    const std::string name = r.read_string();
    auto values = r.read_doubles();
    if (name != buffers[i]->name || values.size() != buffers[i]->value.size()) {
      r.fail("buffer mismatch for " + name);
    }
    buffers[i]->value = std::move(values);
  }
  r.verify_checksum();
}

}  // namespace

ModelAssembly build_model(const BackboneSpec& backbone, const HeadSpec& head,
                          std::uint64_t seed) {
  ModelAssembly model = build_architecture(backbone, head, seed);

  const std::string& source = backbone.pretrained_weights;
  if (source.empty()) {
    throw LoadError(
        "backbone requires pretrained weights (a path, or 'random[:<seed>]' "
        "for a fresh initialization)");
  }
  if (source == "random" || source.rfind("random:", 0) == 0) {
    std::uint64_t init_seed = seed;
    if (auto colon = source.find(':'); colon != std::string::npos) {
      init_seed = std::stoull(source.substr(colon + 1));
    }
    std::vector<nn::Param*> params;
    model.backbone().collect_params(params);
    nn::initialize_parameters(params, derive_seed(init_seed, "backbone_init"));
  } else {
    load_backbone_weights(model, source, backbone.weights_hash);
  }
  return model;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ContractViolation("softmax: empty input");
  double max_logit = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    max_logit = std::max(max_logit, v);
  }
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace dermanet
