#include "dermanet/nn/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "dermanet/errors.hpp"

namespace dermanet::nn {

namespace {

using MatrixRM =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride,
               int pad, bool with_bias)
    : Layer(std::move(name)),
      in_ch_(in_ch),
      out_ch_(out_ch),
      ksize_(ksize),
      stride_(stride),
      pad_(pad),
      weight_(name_ + ".weight",
              static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize,
              in_ch * ksize * ksize) {
  if (with_bias) {
    bias_ = std::make_unique<Param>(name_ + ".bias", out_ch);
  }
}

void Conv2d::im2col(const Tensor& x, int sample,
                    std::vector<Scalar>& cols) const {
  const int oh = out_dim(x.h());
  const int ow = out_dim(x.w());
  const int patch = in_ch_ * ksize_ * ksize_;
  cols.assign(static_cast<std::size_t>(patch) * oh * ow, 0.0);
  const Scalar* xs = x.sample(sample);
  const int xh = x.h(), xw = x.w();
  for (int ic = 0; ic < in_ch_; ++ic) {
    for (int ky = 0; ky < ksize_; ++ky) {
      for (int kx = 0; kx < ksize_; ++kx) {
        const int row = (ic * ksize_ + ky) * ksize_ + kx;
        Scalar* dst = cols.data() + static_cast<std::size_t>(row) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int y = oy * stride_ - pad_ + ky;
          if (y < 0 || y >= xh) continue;
          const Scalar* src = xs + (static_cast<std::size_t>(ic) * xh + y) * xw;
          for (int ox = 0; ox < ow; ++ox) {
            const int xcol = ox * stride_ - pad_ + kx;
            if (xcol < 0 || xcol >= xw) continue;
            dst[oy * ow + ox] = src[xcol];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, const ForwardCtx& ctx) {
  require(x.c() == in_ch_, "conv: channel mismatch");
  const int oh = out_dim(x.h());
  const int ow = out_dim(x.w());
  require(oh > 0 && ow > 0, "conv: output would be empty");
  Tensor y(x.n(), out_ch_, oh, ow);

  const int patch = in_ch_ * ksize_ * ksize_;
  ConstMapRM W(weight_.value.data(), out_ch_, patch);
  std::vector<Scalar> cols;
  for (int i = 0; i < x.n(); ++i) {
    im2col(x, i, cols);
    ConstMapRM C(cols.data(), patch, oh * ow);
    MapRM Y(y.sample(i), out_ch_, oh * ow);
    Y.noalias() = W * C;
    if (bias_) {
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> b(
          bias_->value.data(), out_ch_);
      Y.colwise() += b;
    }
  }
  if (ctx.training) cached_x_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& dy, bool need_input_grad) {
  require(!cached_x_.empty(), "conv: backward before forward");
  const Tensor& x = cached_x_;
  const int oh = dy.h(), ow = dy.w();
  const int patch = in_ch_ * ksize_ * ksize_;

  Tensor dx;
  if (need_input_grad) dx = Tensor::zeros_like(x);

  ConstMapRM W(weight_.value.data(), out_ch_, patch);
  MapRM dW(weight_.grad.data(), out_ch_, patch);
  std::vector<Scalar> cols;
  std::vector<Scalar> dcols(static_cast<std::size_t>(patch) * oh * ow);

  for (int i = 0; i < x.n(); ++i) {
    ConstMapRM dY(dy.sample(i), out_ch_, oh * ow);
    if (!frozen_) {
      im2col(x, i, cols);
      ConstMapRM C(cols.data(), patch, oh * ow);
      dW.noalias() += dY * C.transpose();
      if (bias_) {
        Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> db(
            bias_->grad.data(), out_ch_);
        db.noalias() += dY.rowwise().sum();
      }
    }
    if (need_input_grad) {
      MapRM dC(dcols.data(), patch, oh * ow);
      dC.noalias() = W.transpose() * dY;
      // col2im: scatter-add patches back onto the input gradient
      Scalar* dxs = dx.sample(i);
      const int xh = x.h(), xw = x.w();
      for (int ic = 0; ic < in_ch_; ++ic) {
        for (int ky = 0; ky < ksize_; ++ky) {
          for (int kx = 0; kx < ksize_; ++kx) {
            const int row = (ic * ksize_ + ky) * ksize_ + kx;
            const Scalar* src =
                dcols.data() + static_cast<std::size_t>(row) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
              const int y = oy * stride_ - pad_ + ky;
              if (y < 0 || y >= xh) continue;
              Scalar* dst = dxs + (static_cast<std::size_t>(ic) * xh + y) * xw;
              for (int ox = 0; ox < ow; ++ox) {
                const int xcol = ox * stride_ - pad_ + kx;
                if (xcol < 0 || xcol >= xw) continue;
                dst[xcol] += src[oy * ow + ox];
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight_);
  if (bias_) out.push_back(bias_.get());
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, int channels, double eps,
                     double momentum)
    : Layer(std::move(name)),
      channels_(channels),
      eps_(eps),
      momentum_(momentum),
      gamma_(name_ + ".gamma", channels),
      beta_(name_ + ".beta", channels),
      running_mean_(name_ + ".running_mean", channels, 0.0),
      running_var_(name_ + ".running_var", channels, 1.0) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
}

Tensor BatchNorm::forward(const Tensor& x, const ForwardCtx& ctx) {
  require(x.c() == channels_, "batchnorm: channel mismatch");
  Tensor y = Tensor::zeros_like(x);
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  const std::size_t count = static_cast<std::size_t>(x.n()) * plane;

  used_batch_stats_ = ctx.training && !frozen_;
  cached_mean_.assign(channels_, 0.0);
  cached_inv_std_.assign(channels_, 0.0);

  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (used_batch_stats_) {
      double sum = 0.0;
      for (int i = 0; i < x.n(); ++i) {
        const Scalar* p = x.sample(i) + c * plane;
        for (std::size_t k = 0; k < plane; ++k) sum += p[k];
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int i = 0; i < x.n(); ++i) {
        const Scalar* p = x.sample(i) + c * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          const double d = p[k] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      const double unbiased =
          count > 1 ? sq / static_cast<double>(count - 1) : var;
      running_mean_.value[c] =
          (1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean;
      running_var_.value[c] =
          (1.0 - momentum_) * running_var_.value[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    cached_mean_[c] = mean;
    cached_inv_std_[c] = inv_std;
    const double g = gamma_.value[c];
    const double b = beta_.value[c];
    for (int i = 0; i < x.n(); ++i) {
      const Scalar* p = x.sample(i) + c * plane;
      Scalar* q = y.sample(i) + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        q[k] = g * (p[k] - mean) * inv_std + b;
      }
    }
  }
  if (ctx.training) cached_x_ = x;
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy, bool need_input_grad) {
  require(!cached_x_.empty(), "batchnorm: backward before forward");
  const Tensor& x = cached_x_;
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  const double count = static_cast<double>(x.n()) * plane;

  Tensor dx;
  if (need_input_grad) dx = Tensor::zeros_like(x);

  for (int c = 0; c < channels_; ++c) {
    const double mean = cached_mean_[c];
    const double inv_std = cached_inv_std_[c];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < x.n(); ++i) {
      const Scalar* px = x.sample(i) + c * plane;
      const Scalar* pdy = dy.sample(i) + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum_dy += pdy[k];
        sum_dy_xhat += pdy[k] * (px[k] - mean) * inv_std;
      }
    }
    if (!frozen_) {
      gamma_.grad[c] += sum_dy_xhat;
      beta_.grad[c] += sum_dy;
    }
    if (need_input_grad) {
      const double g = gamma_.value[c];
      for (int i = 0; i < x.n(); ++i) {
        const Scalar* px = x.sample(i) + c * plane;
        const Scalar* pdy = dy.sample(i) + c * plane;
        Scalar* pdx = dx.sample(i) + c * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          if (used_batch_stats_) {
            const double xhat = (px[k] - mean) * inv_std;
            pdx[k] = g * inv_std / count *
                     (count * pdy[k] - sum_dy - xhat * sum_dy_xhat);
          } else {
            pdx[k] = g * inv_std * pdy[k];
          }
        }
      }
    }
  }
  return dx;
}

void BatchNorm::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm::collect_buffers(std::vector<Buffer*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x, const ForwardCtx& ctx) {
  Tensor y = x;
  if (ctx.training) {
    mask_.assign(x.size(), 0);
    cached_dims_ = {x.n(), x.c(), x.h(), x.w()};
  }
  Scalar* d = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (d[i] > 0.0) {
      if (ctx.training) mask_[i] = 1;
    } else {
      d[i] = 0.0;
    }
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy, bool need_input_grad) {
  require(mask_.size() == dy.size(), "relu: backward before forward");
  if (!need_input_grad) return {};
  Tensor dx = dy;
  Scalar* d = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!mask_[i]) d[i] = 0.0;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d

MaxPool2d::MaxPool2d(std::string name, int ksize, int stride, int pad)
    : Layer(std::move(name)), ksize_(ksize), stride_(stride), pad_(pad) {}

Tensor MaxPool2d::forward(const Tensor& x, const ForwardCtx&) {
  const int oh = (x.h() + 2 * pad_ - ksize_) / stride_ + 1;
  const int ow = (x.w() + 2 * pad_ - ksize_) / stride_ + 1;
  require(oh > 0 && ow > 0, "maxpool: output would be empty");
  Tensor y(x.n(), x.c(), oh, ow);
  argmax_.assign(y.size(), -1);
  in_dims_ = {x.n(), x.c(), x.h(), x.w()};

  std::size_t out_idx = 0;
  for (int i = 0; i < x.n(); ++i) {
    for (int c = 0; c < x.c(); ++c) {
      const Scalar* plane =
          x.sample(i) + static_cast<std::size_t>(c) * x.h() * x.w();
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++out_idx) {
          Scalar best = -std::numeric_limits<Scalar>::infinity();
          int best_idx = -1;
          for (int ky = 0; ky < ksize_; ++ky) {
            const int yy = oy * stride_ - pad_ + ky;
            if (yy < 0 || yy >= x.h()) continue;
            for (int kx = 0; kx < ksize_; ++kx) {
              const int xx = ox * stride_ - pad_ + kx;
              if (xx < 0 || xx >= x.w()) continue;
              const Scalar v = plane[yy * x.w() + xx];
              if (v > best) {
                best = v;
                best_idx = yy * x.w() + xx;
              }
            }
          }
          y.data()[out_idx] = best_idx >= 0 ? best : 0.0;
          argmax_[out_idx] = best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy, bool need_input_grad) {
  require(argmax_.size() == dy.size(), "maxpool: backward before forward");
  if (!need_input_grad) return {};
  Tensor dx(in_dims_[0], in_dims_[1], in_dims_[2], in_dims_[3]);
  const std::size_t plane =
      static_cast<std::size_t>(in_dims_[2]) * in_dims_[3];
  const std::size_t out_plane = static_cast<std::size_t>(dy.h()) * dy.w();
  std::size_t out_idx = 0;
  for (int i = 0; i < dy.n(); ++i) {
    for (int c = 0; c < dy.c(); ++c) {
      Scalar* dplane = dx.sample(i) + c * plane;
      for (std::size_t k = 0; k < out_plane; ++k, ++out_idx) {
        const int src = argmax_[out_idx];
        if (src >= 0) dplane[src] += dy.data()[out_idx];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ConcatPool

Tensor ConcatPool::forward(const Tensor& x, const ForwardCtx&) {
  require(x.h() > 0 && x.w() > 0, "concatpool: empty feature map");
  const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
  Tensor y(x.n(), 2 * x.c(), 1, 1);
  argmax_.assign(static_cast<std::size_t>(x.n()) * x.c(), -1);
  in_dims_ = {x.n(), x.c(), x.h(), x.w()};

  for (int i = 0; i < x.n(); ++i) {
    Scalar* out = y.sample(i);
    for (int c = 0; c < x.c(); ++c) {
      const Scalar* p = x.sample(i) + c * plane;
      Scalar best = p[0];
      int best_idx = 0;
      Scalar sum = 0.0;
      for (std::size_t k = 0; k < plane; ++k) {
        sum += p[k];
        if (p[k] > best) {
          best = p[k];
          best_idx = static_cast<int>(k);
        }
      }
      out[c] = best;                                       // max half
      out[x.c() + c] = sum / static_cast<Scalar>(plane);   // avg half
      argmax_[static_cast<std::size_t>(i) * x.c() + c] = best_idx;
    }
  }
  return y;
}

Tensor ConcatPool::backward(const Tensor& dy, bool need_input_grad) {
  require(!argmax_.empty(), "concatpool: backward before forward");
  if (!need_input_grad) return {};
  const int n = in_dims_[0], c = in_dims_[1];
  const std::size_t plane =
      static_cast<std::size_t>(in_dims_[2]) * in_dims_[3];
  Tensor dx(n, c, in_dims_[2], in_dims_[3]);
  for (int i = 0; i < n; ++i) {
    const Scalar* g = dy.sample(i);
    for (int ch = 0; ch < c; ++ch) {
      Scalar* dplane = dx.sample(i) + ch * plane;
      dplane[argmax_[static_cast<std::size_t>(i) * c + ch]] += g[ch];
      const Scalar spread = g[c + ch] / static_cast<Scalar>(plane);
      for (std::size_t k = 0; k < plane; ++k) dplane[k] += spread;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int in_features, int out_features,
               bool with_bias)
    : Layer(std::move(name)),
      in_features_(in_features),
      out_features_(out_features),
      weight_(name_ + ".weight",
              static_cast<std::size_t>(out_features) * in_features,
              in_features) {
  if (with_bias) {
    bias_ = std::make_unique<Param>(name_ + ".bias", out_features);
  }
}

Tensor Linear::forward(const Tensor& x, const ForwardCtx& ctx) {
  require(static_cast<int>(x.sample_size()) == in_features_,
          "linear: feature width mismatch");
  Tensor y(x.n(), out_features_, 1, 1);
  ConstMapRM X(x.data(), x.n(), in_features_);
  ConstMapRM W(weight_.value.data(), out_features_, in_features_);
  MapRM Y(y.data(), x.n(), out_features_);
  Y.noalias() = X * W.transpose();
  if (bias_) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias_->value.data(), out_features_);
    Y.rowwise() += b;
  }
  if (ctx.training) cached_x_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& dy, bool need_input_grad) {
  require(!cached_x_.empty(), "linear: backward before forward");
  const Tensor& x = cached_x_;
  ConstMapRM X(x.data(), x.n(), in_features_);
  ConstMapRM dY(dy.data(), dy.n(), out_features_);
  if (!frozen_) {
    MapRM dW(weight_.grad.data(), out_features_, in_features_);
    dW.noalias() += dY.transpose() * X;
    if (bias_) {
      Eigen::Map<Eigen::RowVectorXd> db(bias_->grad.data(), out_features_);
      db.noalias() += dY.colwise().sum();
    }
  }
  if (!need_input_grad) return {};
  Tensor dx = Tensor::zeros_like(x);
  ConstMapRM W(weight_.value.data(), out_features_, in_features_);
  MapRM dX(dx.data(), x.n(), in_features_);
  dX.noalias() = dY * W;
  return dx;
}

void Linear::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight_);
  if (bias_) out.push_back(bias_.get());
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(std::string name, double p, std::uint64_t stream_id)
    : Layer(std::move(name)), p_(p), stream_id_(stream_id) {
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout probability must lie in [0, 1)");
  }
}

Tensor Dropout::forward(const Tensor& x, const ForwardCtx& ctx) {
  identity_ = !ctx.training || p_ == 0.0;
  cached_dims_ = {x.n(), x.c(), x.h(), x.w()};
  if (identity_) return x;

  Rng rng(derive_seed(ctx.step_seed, "dropout", stream_id_));
  keep_.assign(x.size(), 0);
  Tensor y = x;
  const Scalar scale = 1.0 / (1.0 - p_);
  Scalar* d = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (rng.uniform() >= p_) {
      keep_[i] = 1;
      d[i] *= scale;
    } else {
      d[i] = 0.0;
    }
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy, bool need_input_grad) {
  if (!need_input_grad) return {};
  if (identity_) return dy;
  require(keep_.size() == dy.size(), "dropout: backward before forward");
  Tensor dx = dy;
  const Scalar scale = 1.0 / (1.0 - p_);
  Scalar* d = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    d[i] = keep_[i] ? d[i] * scale : 0.0;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& x, const ForwardCtx& ctx) {
  Tensor cur = x;
  for (auto& layer : layers_) cur = layer->forward(cur, ctx);
  return cur;
}

Tensor Sequential::backward(const Tensor& dy, bool need_input_grad) {
  Tensor grad = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    bool need_below = need_input_grad;
    if (!need_below) {
      for (std::size_t j = 0; j < i; ++j) {
        if (layers_[j]->has_trainable_params()) {
          need_below = true;
          break;
        }
      }
    }
    grad = layers_[i]->backward(grad, need_below);
    if (!need_below) return {};
  }
  return grad;
}

void Sequential::collect_params(std::vector<Param*>& out) {
  for (auto& layer : layers_) layer->collect_params(out);
}

void Sequential::collect_buffers(std::vector<Buffer*>& out) {
  for (auto& layer : layers_) layer->collect_buffers(out);
}

void Sequential::set_frozen(bool frozen) {
  frozen_ = frozen;
  for (auto& layer : layers_) layer->set_frozen(frozen);
}

bool Sequential::has_trainable_params() {
  for (auto& layer : layers_) {
    if (layer->has_trainable_params()) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Bottleneck

Bottleneck::Bottleneck(std::string name, int in_ch, int mid_ch, int out_ch,
                       int stride, bool project_skip)
    : Layer(std::move(name)), main_(name_ + ".main") {
  main_.add(std::make_unique<Conv2d>(name_ + ".conv1", in_ch, mid_ch, 1, 1, 0,
                                     false));
  main_.add(std::make_unique<BatchNorm>(name_ + ".bn1", mid_ch));
  main_.add(std::make_unique<ReLU>(name_ + ".relu1"));
  main_.add(std::make_unique<Conv2d>(name_ + ".conv2", mid_ch, mid_ch, 3,
                                     stride, 1, false));
  main_.add(std::make_unique<BatchNorm>(name_ + ".bn2", mid_ch));
  main_.add(std::make_unique<ReLU>(name_ + ".relu2"));
  main_.add(std::make_unique<Conv2d>(name_ + ".conv3", mid_ch, out_ch, 1, 1, 0,
                                     false));
  main_.add(std::make_unique<BatchNorm>(name_ + ".bn3", out_ch));
  if (project_skip) {
    projection_ = std::make_unique<Sequential>(name_ + ".proj");
    projection_->add(std::make_unique<Conv2d>(name_ + ".proj_conv", in_ch,
                                              out_ch, 1, stride, 0, false));
    projection_->add(std::make_unique<BatchNorm>(name_ + ".proj_bn", out_ch));
  } else {
    require(in_ch == out_ch && stride == 1,
            "bottleneck: identity skip requires matching shape");
  }
}

Tensor Bottleneck::forward(const Tensor& x, const ForwardCtx& ctx) {
  Tensor m = main_.forward(x, ctx);
  Tensor s = projection_ ? projection_->forward(x, ctx) : x;
  require(m.same_shape(s), "bottleneck: branch shape mismatch");
  Tensor y = Tensor::zeros_like(m);
  if (ctx.training) relu_mask_.assign(y.size(), 0);
  out_dims_ = {y.n(), y.c(), y.h(), y.w()};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Scalar v = m.data()[i] + s.data()[i];
    if (v > 0.0) {
      y.data()[i] = v;
      if (ctx.training) relu_mask_[i] = 1;
    }
  }
  return y;
}

Tensor Bottleneck::backward(const Tensor& dy, bool need_input_grad) {
  require(relu_mask_.size() == dy.size(), "bottleneck: backward before forward");
  Tensor dsum = dy;
  for (std::size_t i = 0; i < dsum.size(); ++i) {
    if (!relu_mask_[i]) dsum.data()[i] = 0.0;
  }
  Tensor dx_main = main_.backward(dsum, need_input_grad);
  if (projection_) {
    Tensor dx_proj = projection_->backward(dsum, need_input_grad);
    if (!need_input_grad) return {};
    for (std::size_t i = 0; i < dx_main.size(); ++i) {
      dx_main.data()[i] += dx_proj.data()[i];
    }
    return dx_main;
  }
  if (!need_input_grad) return {};
  // identity skip feeds the gradient straight through
  for (std::size_t i = 0; i < dx_main.size(); ++i) {
    dx_main.data()[i] += dsum.data()[i];
  }
  return dx_main;
}

void Bottleneck::collect_params(std::vector<Param*>& out) {
  main_.collect_params(out);
  if (projection_) projection_->collect_params(out);
}

void Bottleneck::collect_buffers(std::vector<Buffer*>& out) {
  main_.collect_buffers(out);
  if (projection_) projection_->collect_buffers(out);
}

void Bottleneck::set_frozen(bool frozen) {
  frozen_ = frozen;
  main_.set_frozen(frozen);
  if (projection_) projection_->set_frozen(frozen);
}

bool Bottleneck::has_trainable_params() {
  return main_.has_trainable_params() ||
         (projection_ && projection_->has_trainable_params());
}

// ---------------------------------------------------------------------------

void initialize_parameters(const std::vector<Param*>& params,
                           std::uint64_t seed) {
  for (Param* p : params) {
    if (p->fan_in <= 0) continue;  // biases/batch-norm keep their defaults
    Rng rng(derive_seed(seed, "init", fnv1a(p->name)));
    const double bound = std::sqrt(6.0 / static_cast<double>(p->fan_in));
    for (auto& v : p->value) v = rng.uniform(-bound, bound);
  }
}

}  // namespace dermanet::nn
