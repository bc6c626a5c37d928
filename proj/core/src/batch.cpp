#include "dermanet/batch.hpp"

#include <numeric>

#include "dermanet/errors.hpp"

namespace dermanet {

std::vector<std::size_t> epoch_order(std::size_t n_records, std::uint64_t seed,
                                     long epoch) {
  std::vector<std::size_t> order(n_records);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  shuffle(order, rng);
  return order;
}

BatchStream::BatchStream(const Manifest& manifest, BatchOptions options,
                         std::uint64_t seed, long epoch)
    : manifest_(&manifest),
      options_(std::move(options)),
      seed_(seed),
      epoch_(epoch) {
  if (manifest.empty()) throw ContractViolation("batching an empty manifest");
  if (options_.batch_size < 1) {
    throw ConfigError("batch_size must be >= 1");
  }
  options_.policy.validate();
  order_ = epoch_order(manifest.size(), seed, epoch);
}

std::size_t BatchStream::n_batches() const {
  return static_cast<std::size_t>(
      steps_per_epoch(manifest_->size(), options_.batch_size));
}

std::vector<std::size_t> BatchStream::batch_indices(std::size_t b) const {
  if (b >= n_batches()) throw ContractViolation("batch index out of range");
  const std::size_t begin = b * static_cast<std::size_t>(options_.batch_size);
  const std::size_t end =
      std::min(begin + options_.batch_size, order_.size());
  return {order_.begin() + begin, order_.begin() + end};
}

ImageTensor load_record_image(const ManifestRecord& record,
                              const BatchOptions& options, std::uint64_t seed,
                              long epoch, std::size_t record_index) {
  ImageTensor img = load_and_resize(record.image_path, options.side);
  if (options.augmenting) {
    Rng rng(derive_seed(seed, "augment", static_cast<std::uint64_t>(epoch),
                        record_index));
    img = augment(img, options.policy, rng);
  }
  return normalize(img, options.mean, options.std);
}

ImageBatch BatchStream::load_batch(std::size_t b) const {
  const auto indices = batch_indices(b);
  ImageBatch batch;
  batch.images = nn::Tensor(static_cast<int>(indices.size()), 3, options_.side,
                            options_.side);
  batch.normalized = true;
  batch.labels.reserve(indices.size());
  batch.ids.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const ManifestRecord& rec = manifest_->at(indices[i]);
    ImageTensor img =
        load_record_image(rec, options_, seed_, epoch_, indices[i]);
    std::copy(img.data.begin(), img.data.end(),
              batch.images.sample(static_cast<int>(i)));
    batch.labels.push_back(rec.label);
    batch.ids.push_back(rec.image_id);
  }
  return batch;
}

}  // namespace dermanet
