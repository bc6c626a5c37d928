#pragma once

#include <vector>

#include "dermanet/nn/tensor.hpp"

namespace dermanet {

/// Mean categorical cross-entropy over the batch:
///   -(1/N) sum_i log softmax(logits_i)[label_i]
/// computed with log-sum-exp stabilization. When `dlogits` is non-null it
/// receives the gradient (softmax - onehot) / N. Throws on invalid labels
/// and non-finite logits.
double cross_entropy(const nn::Tensor& logits, const std::vector<int>& labels,
                     nn::Tensor* dlogits = nullptr);

}  // namespace dermanet
