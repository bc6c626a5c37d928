#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dermanet/nn/layers.hpp"
#include "dermanet/taxonomy.hpp"

namespace dermanet {

/// Convolutional feature extractor choice. `pretrained_weights` is either a
/// path to a weights artifact or the registry form "random" / "random:<seed>"
/// for a fresh initialization (used by the toy backbone in tests).
struct BackboneSpec {
  std::string name = "resnet50";
  int feature_channels = 2048;
  std::string pretrained_weights;
  std::string weights_hash;  // optional "fnv64:<hex>" of the artifact bytes
};

/// Classifier head: [batch-norm -> dropout -> linear -> relu] per hidden
/// width, then batch-norm -> dropout -> linear to the output logits. Input
/// width is 2 * feature_channels from the concat pooling.
struct HeadSpec {
  std::vector<int> hidden_widths{512, 512};
  std::vector<double> dropout_ps{0.25, 0.25, 0.5};  // one per linear block
  int n_outputs = kNumCategories;
};

/// Image batch ready for the model: NCHW pixel data plus labels and ids.
struct ImageBatch {
  nn::Tensor images;
  std::vector<int> labels;
  std::vector<std::string> ids;
  bool normalized = false;
};

/// Backbone + head with the parameters partitioned into three ordered layer
/// groups (bottom, middle, top). The head always belongs to the top group.
class ModelAssembly {
public:
  ModelAssembly(std::unique_ptr<nn::Sequential> backbone,
                std::unique_ptr<nn::Sequential> head,
                std::array<std::vector<nn::Layer*>, 3> groups,
                BackboneSpec backbone_spec, HeadSpec head_spec);

  ModelAssembly(ModelAssembly&&) = default;
  ModelAssembly& operator=(ModelAssembly&&) = default;

  /// Forward pass over a normalized 224x224 batch; returns (N, n_outputs,
  /// 1, 1) logits. Training mode enables batch statistics and dropout.
  nn::Tensor forward(const ImageBatch& batch, bool training,
                     std::uint64_t step_seed = 0);

  /// Backpropagates logit gradients, accumulating parameter gradients for
  /// every unfrozen group.
  void backward(const nn::Tensor& dlogits);

  void zero_grads();

  /// Freezes (or unfreezes) whole layer groups. Frozen groups receive no
  /// gradient updates and their batch-norm statistics stay fixed.
  void set_frozen(const std::set<int>& group_indices, bool frozen);

  /// Applies exactly this frozen set: listed groups frozen, the rest not.
  void apply_frozen_set(const std::set<int>& frozen_groups);

  bool group_frozen(int group) const;

  std::vector<nn::Param*> group_params(int group) const;
  std::vector<nn::Buffer*> group_buffers(int group) const;
  /// All parameters in group order (stable across runs; optimizer state and
  /// checkpoints key off this order).
  std::vector<nn::Param*> params() const;
  std::vector<nn::Buffer*> buffers() const;

  /// FNV-1a over the raw bytes of a group's parameters and buffers.
  std::uint64_t group_checksum(int group) const;

  const BackboneSpec& backbone_spec() const { return backbone_spec_; }
  const HeadSpec& head_spec() const { return head_spec_; }
  int head_input_features() const { return 2 * backbone_spec_.feature_channels; }

  nn::Sequential& backbone() { return *backbone_; }
  nn::Sequential& head() { return *head_; }

private:
  std::unique_ptr<nn::Sequential> backbone_;
  std::unique_ptr<nn::Sequential> head_;
  std::array<std::vector<nn::Layer*>, 3> groups_;
  std::array<bool, 3> frozen_{false, false, false};
  BackboneSpec backbone_spec_;
  HeadSpec head_spec_;
};

/// Builds the classifier head for a backbone with `feature_channels` output
/// channels: concat pooling followed by the HeadSpec linear blocks.
std::unique_ptr<nn::Sequential> build_head(int feature_channels,
                                           const HeadSpec& spec);

/// Constructs the architecture (backbone graph + head + group partition)
/// with fresh deterministic initialization, without consulting any weights
/// artifact. Checkpoint loading and artifact loading fill parameters after.
ModelAssembly build_architecture(const BackboneSpec& backbone,
                                 const HeadSpec& head, std::uint64_t seed);

/// Full model construction: architecture plus backbone weights from the
/// pretrained artifact (or a fresh init for "random[:<seed>]"). The head is
/// always freshly initialized. Throws LoadError when the artifact is
/// missing, corrupt, or fails the declared content hash.
ModelAssembly build_model(const BackboneSpec& backbone, const HeadSpec& head,
                          std::uint64_t seed);

/// Writes the backbone parameters and buffers of a model as a weights
/// artifact loadable by build_model.
void save_backbone_weights(ModelAssembly& model,
                           const std::filesystem::path& path);

/// Content hash string ("fnv64:<hex>") of a file, as recorded in configs.
std::string file_content_hash(const std::filesystem::path& path);

/// Numerically stabilized softmax (max subtraction). Throws NumericError on
/// non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace dermanet
