#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace dermanet::nn {

using Scalar = double;

/// Dense NCHW tensor. Fully-connected activations use shape (N, F, 1, 1).
class Tensor {
public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w)
      : dims_{n, c, h, w},
        data_(static_cast<std::size_t>(n) * c * h * w, Scalar(0)) {}

  static Tensor zeros_like(const Tensor& other) {
    return Tensor(other.n(), other.c(), other.h(), other.w());
  }

  int n() const { return dims_[0]; }
  int c() const { return dims_[1]; }
  int h() const { return dims_[2]; }
  int w() const { return dims_[3]; }

  /// Features per sample (c * h * w).
  std::size_t sample_size() const {
    return static_cast<std::size_t>(c()) * h() * w();
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar* sample(int i) { return data() + i * sample_size(); }
  const Scalar* sample(int i) const { return data() + i * sample_size(); }

  Scalar& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * dims_[1] + c) * dims_[2] + y) *
                     dims_[3] +
                 x];
  }
  Scalar at(int n, int c, int y, int x) const {
    return const_cast<Tensor*>(this)->at(n, c, y, x);
  }

  bool all_finite() const {
    for (Scalar v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

private:
  std::array<int, 4> dims_{0, 0, 0, 0};
  std::vector<Scalar> data_;
};

}  // namespace dermanet::nn
