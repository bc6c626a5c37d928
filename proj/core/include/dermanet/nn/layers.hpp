#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dermanet/nn/tensor.hpp"
#include "dermanet/rng.hpp"

namespace dermanet::nn {

/// A trainable parameter vector with its gradient accumulator.
struct Param {
  std::string name;
  std::vector<Scalar> value;
  std::vector<Scalar> grad;
  int fan_in = 0;  // > 0 selects Kaiming-uniform init for this parameter

  Param(std::string n, std::size_t size, int fan = 0)
      : name(std::move(n)), value(size, 0.0), grad(size, 0.0), fan_in(fan) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// Non-trainable named state (batch-norm running statistics).
struct Buffer {
  std::string name;
  std::vector<Scalar> value;

  Buffer(std::string n, std::size_t size, Scalar fill = 0.0)
      : name(std::move(n)), value(size, fill) {}
};

struct ForwardCtx {
  bool training = false;
  std::uint64_t step_seed = 0;  // root of this step's dropout streams
};

/// Base layer. forward() caches whatever backward() needs when training;
/// backward() accumulates parameter gradients (unless the layer is frozen)
/// and returns dL/dinput only when requested. A frozen layer updates no
/// parameters and no running statistics but still propagates gradients.
class Layer {
public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, const ForwardCtx& ctx) = 0;
  virtual Tensor backward(const Tensor& dy, bool need_input_grad) = 0;

  virtual void collect_params(std::vector<Param*>&) {}
  virtual void collect_buffers(std::vector<Buffer*>&) {}

  virtual void set_frozen(bool frozen) { frozen_ = frozen; }
  bool frozen() const { return frozen_; }

  /// True when this layer (or any child) carries unfrozen parameters.
  virtual bool has_trainable_params() {
    std::vector<Param*> ps;
    collect_params(ps);
    return !frozen_ && !ps.empty();
  }

  const std::string& name() const { return name_; }

protected:
  std::string name_;
  bool frozen_ = false;
};

class Conv2d : public Layer {
public:
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride,
         int pad, bool with_bias);

  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;
  void collect_params(std::vector<Param*>& out) override;

  int out_dim(int in_dim) const {
    return (in_dim + 2 * pad_ - ksize_) / stride_ + 1;
  }

private:
  int in_ch_, out_ch_, ksize_, stride_, pad_;
  Param weight_;  // (out_ch, in_ch * k * k) row-major
  std::unique_ptr<Param> bias_;
  Tensor cached_x_;

  void im2col(const Tensor& x, int sample, std::vector<Scalar>& cols) const;
};

/// Spatial batch normalization over (N, H, W) per channel; with H = W = 1 it
/// is exactly 1-d feature normalization, so the same layer serves the head.
class BatchNorm : public Layer {
public:
  BatchNorm(std::string name, int channels, double eps = 1e-5,
            double momentum = 0.1);

  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<Buffer*>& out) override;

private:
  int channels_;
  double eps_, momentum_;
  Param gamma_, beta_;
  Buffer running_mean_, running_var_;

  Tensor cached_x_;
  std::vector<Scalar> cached_mean_, cached_inv_std_;
  bool used_batch_stats_ = false;
};

class ReLU : public Layer {
public:
  explicit ReLU(std::string name) : Layer(std::move(name)) {}
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;

private:
  std::vector<char> mask_;
  std::array<int, 4> cached_dims_{};
};

class MaxPool2d : public Layer {
public:
  MaxPool2d(std::string name, int ksize, int stride, int pad);
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;

private:
  int ksize_, stride_, pad_;
  std::vector<int> argmax_;  // flat input index per output element
  std::array<int, 4> in_dims_{};
};

/// Global adaptive max pooling and average pooling to 1x1, concatenated as
/// [max | avg] along channels: (N, C, H, W) -> (N, 2C, 1, 1).
class ConcatPool : public Layer {
public:
  explicit ConcatPool(std::string name) : Layer(std::move(name)) {}
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;

private:
  std::vector<int> argmax_;
  std::array<int, 4> in_dims_{};
};

/// Fully-connected layer; flattens (C, H, W) into features.
class Linear : public Layer {
public:
  Linear(std::string name, int in_features, int out_features,
         bool with_bias = true);
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;
  void collect_params(std::vector<Param*>& out) override;

private:
  int in_features_, out_features_;
  Param weight_;  // (out, in) row-major
  std::unique_ptr<Param> bias_;
  Tensor cached_x_;
};

/// Inverted dropout. Mask randomness is drawn from a stream derived from the
/// step seed and this layer's stream id, so draws depend only on (seed, step,
/// layer), never on evaluation order.
class Dropout : public Layer {
public:
  Dropout(std::string name, double p, std::uint64_t stream_id);
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;

private:
  double p_;
  std::uint64_t stream_id_;
  std::vector<char> keep_;
  bool identity_ = true;
  std::array<int, 4> cached_dims_{};
};

class Sequential : public Layer {
public:
  explicit Sequential(std::string name) : Layer(std::move(name)) {}

  Sequential& add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }

  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  /// Backward pass that stops descending once no layer below needs
  /// gradients (everything below frozen and the input gradient unwanted).
  Tensor backward(const Tensor& dy, bool need_input_grad) override;

  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<Buffer*>& out) override;
  void set_frozen(bool frozen) override;
  bool has_trainable_params() override;

  std::size_t child_count() const { return layers_.size(); }
  Layer* child(std::size_t i) { return layers_[i].get(); }

private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Residual bottleneck: 1x1 -> 3x3(stride) -> 1x1 with batch norms, plus an
/// identity or 1x1-projection skip, joined by an output ReLU.
class Bottleneck : public Layer {
public:
  Bottleneck(std::string name, int in_ch, int mid_ch, int out_ch, int stride,
             bool project_skip);

  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& dy, bool need_input_grad) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<Buffer*>& out) override;
  void set_frozen(bool frozen) override;
  bool has_trainable_params() override;

private:
  Sequential main_;
  std::unique_ptr<Sequential> projection_;  // null = identity skip
  std::vector<char> relu_mask_;
  std::array<int, 4> out_dims_{};
};

/// Kaiming-uniform fan-in initialization for every weight parameter with a
/// declared fan-in; each parameter gets its own stream derived from its name
/// so initialization is independent of traversal order.
void initialize_parameters(const std::vector<Param*>& params,
                           std::uint64_t seed);

}  // namespace dermanet::nn
