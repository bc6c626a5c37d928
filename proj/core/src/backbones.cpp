#include <memory>

#include "dermanet/errors.hpp"
#include "dermanet/model.hpp"

namespace dermanet {

namespace {

std::unique_ptr<nn::Sequential> make_stage(const std::string& name, int count,
                                           int in_ch, int mid_ch, int out_ch,
                                           int stride) {
  auto stage = std::make_unique<nn::Sequential>(name);
  stage->add(std::make_unique<nn::Bottleneck>(name + ".0", in_ch, mid_ch,
                                              out_ch, stride, true));
  for (int i = 1; i < count; ++i) {
    stage->add(std::make_unique<nn::Bottleneck>(
        name + "." + std::to_string(i), out_ch, mid_ch, out_ch, 1, false));
  }
  return stage;
}

std::unique_ptr<nn::Sequential> build_resnet50_backbone() {
  auto backbone = std::make_unique<nn::Sequential>("backbone");
  backbone->add(std::make_unique<nn::Conv2d>("backbone.conv1", 3, 64, 7, 2, 3,
                                             false));
  backbone->add(std::make_unique<nn::BatchNorm>("backbone.bn1", 64));
  backbone->add(std::make_unique<nn::ReLU>("backbone.relu1"));
  backbone->add(std::make_unique<nn::MaxPool2d>("backbone.maxpool", 3, 2, 1));
  backbone->add(make_stage("backbone.layer1", 3, 64, 64, 256, 1));
  backbone->add(make_stage("backbone.layer2", 4, 256, 128, 512, 2));
  backbone->add(make_stage("backbone.layer3", 6, 512, 256, 1024, 2));
  backbone->add(make_stage("backbone.layer4", 3, 1024, 512, 2048, 2));
  return backbone;
}

/// Small three-block convnet for tests and desk-scale runs: each block is
/// conv3x3(stride 2) -> batch norm -> relu, all at `channels` width.
std::unique_ptr<nn::Sequential> build_toy_backbone(int channels) {
  auto backbone = std::make_unique<nn::Sequential>("backbone");
  int in_ch = 3;
  for (int b = 1; b <= 3; ++b) {
    const std::string name = "backbone.block" + std::to_string(b);
    auto block = std::make_unique<nn::Sequential>(name);
    block->add(std::make_unique<nn::Conv2d>(name + ".conv", in_ch, channels, 3,
                                            2, 1, false));
    block->add(std::make_unique<nn::BatchNorm>(name + ".bn", channels));
    block->add(std::make_unique<nn::ReLU>(name + ".relu"));
    backbone->add(std::move(block));
    in_ch = channels;
  }
  return backbone;
}

}  // namespace

ModelAssembly build_architecture(const BackboneSpec& backbone_spec,
                                 const HeadSpec& head_spec,
                                 std::uint64_t seed) {
  if (backbone_spec.feature_channels <= 0) {
    throw ConfigError("backbone feature_channels must be > 0");
  }

  std::unique_ptr<nn::Sequential> backbone;
  std::array<std::vector<nn::Layer*>, 3> groups;

  if (backbone_spec.name == "resnet50") {
    if (backbone_spec.feature_channels != 2048) {
      throw ConfigError("resnet50 produces 2048 feature channels, configured " +
                        std::to_string(backbone_spec.feature_channels));
    }
    backbone = build_resnet50_backbone();
    // bottom: stem plus stages 1-2; middle: stages 3-4; top: the head.
    for (std::size_t i = 0; i < 6; ++i) groups[0].push_back(backbone->child(i));
    groups[1].push_back(backbone->child(6));
    groups[1].push_back(backbone->child(7));
  } else if (backbone_spec.name == "toy") {
    backbone = build_toy_backbone(backbone_spec.feature_channels);
    // one block per group; the head joins the top block.
    groups[0].push_back(backbone->child(0));
    groups[1].push_back(backbone->child(1));
    groups[2].push_back(backbone->child(2));
  } else {
    throw ConfigError("no layer-group split declared for backbone '" +
                      backbone_spec.name + "'");
  }

  auto head = build_head(backbone_spec.feature_channels, head_spec);
  groups[2].push_back(head.get());

  std::vector<nn::Param*> backbone_params;
  backbone->collect_params(backbone_params);
  nn::initialize_parameters(backbone_params, derive_seed(seed, "backbone_init"));

  std::vector<nn::Param*> head_params;
  head->collect_params(head_params);
  nn::initialize_parameters(head_params, derive_seed(seed, "head_init"));

  return ModelAssembly(std::move(backbone), std::move(head), std::move(groups),
                       backbone_spec, head_spec);
}

}  // namespace dermanet
