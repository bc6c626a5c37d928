#pragma once

#include <cstdint>
#include <vector>

#include "dermanet/augment.hpp"
#include "dermanet/image.hpp"
#include "dermanet/manifest.hpp"
#include "dermanet/model.hpp"

namespace dermanet {

inline long div_ceil(long a, long b) { return (a + b - 1) / b; }

/// Batches per epoch when the final partial batch is retained.
inline long steps_per_epoch(std::size_t n_records, int batch_size) {
  return div_ceil(static_cast<long>(n_records), batch_size);
}

/// The (deterministic) record visit order for one epoch: a Fisher-Yates
/// shuffle of 0..n-1 seeded by (seed, "shuffle", epoch).
std::vector<std::size_t> epoch_order(std::size_t n_records, std::uint64_t seed,
                                     long epoch);

struct BatchOptions {
  int batch_size = 32;
  bool augmenting = false;  // training only; never for val/test
  AugmentationPolicy policy;
  int side = kImageSide;
  std::array<double, 3> mean = kImagenetMean;
  std::array<double, 3> std = kImagenetStd;
};

/// One epoch of shuffled batches over a manifest. Construction computes the
/// order only; images are loaded when a batch is materialized. Augmentation
/// randomness is keyed by (seed, epoch, record index), so results do not
/// depend on how batch loading is scheduled.
class BatchStream {
public:
  BatchStream(const Manifest& manifest, BatchOptions options,
              std::uint64_t seed, long epoch);

  std::size_t n_batches() const;
  /// Record indices (into the manifest) making up batch b.
  std::vector<std::size_t> batch_indices(std::size_t b) const;
  /// Loads, preprocesses and (optionally) augments batch b.
  ImageBatch load_batch(std::size_t b) const;

  const std::vector<std::size_t>& order() const { return order_; }

private:
  const Manifest* manifest_;
  BatchOptions options_;
  std::uint64_t seed_;
  long epoch_;
  std::vector<std::size_t> order_;
};

/// Loads one record through the full preprocessing path: decode, resize,
/// optional augmentation (rng keyed by record index), normalization.
ImageTensor load_record_image(const ManifestRecord& record,
                              const BatchOptions& options, std::uint64_t seed,
                              long epoch, std::size_t record_index);

}  // namespace dermanet
