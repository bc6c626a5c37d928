#include "dermanet/loss.hpp"

#include <cmath>

#include "dermanet/errors.hpp"

namespace dermanet {

double cross_entropy(const nn::Tensor& logits, const std::vector<int>& labels,
                     nn::Tensor* dlogits) {
  const int n = logits.n();
  const int k = static_cast<int>(logits.sample_size());
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ContractViolation("cross_entropy: batch size mismatch");
  }
  if (dlogits) *dlogits = nn::Tensor::zeros_like(logits);

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= k) {
      throw ContractViolation("cross_entropy: label index " +
                              std::to_string(label) + " out of range");
    }
    const nn::Scalar* row = logits.sample(i);
    double max_logit = row[0];
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(row[j])) {
        throw NumericError("cross_entropy: non-finite logit");
      }
      max_logit = std::max(max_logit, row[j]);
    }
    double sum_exp = 0.0;
    for (int j = 0; j < k; ++j) sum_exp += std::exp(row[j] - max_logit);
    const double lse = max_logit + std::log(sum_exp);
    total += lse - row[label];

    if (dlogits) {
      nn::Scalar* grow = dlogits->sample(i);
      for (int j = 0; j < k; ++j) {
        const double p = std::exp(row[j] - max_logit) / sum_exp;
        grow[j] = (p - (j == label ? 1.0 : 0.0)) / n;
      }
    }
  }
  return total / n;
}

}  // namespace dermanet
