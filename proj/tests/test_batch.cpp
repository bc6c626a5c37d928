#include <doctest.h>

#include <map>

#include "dermanet/batch.hpp"
#include "dermanet/errors.hpp"
#include "support/fixtures.hpp"

using namespace dermanet;

namespace {

Manifest synthetic_manifest(std::size_t n) {
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    records.push_back({"ID_" + std::to_string(i),
                       "none/ID_" + std::to_string(i) + ".jpg",
                       static_cast<int>(i % kNumCategories), Split::train});
  }
  return Manifest(std::move(records));
}

}  // namespace

TEST_CASE("10015 records at batch 32 plan 313 batches, last of 31") {
  const Manifest m = synthetic_manifest(10015);
  CHECK(steps_per_epoch(m.size(), 32) == 313);
  BatchStream stream(m, {.batch_size = 32}, 1, 0);
  REQUIRE(stream.n_batches() == 313);
  for (std::size_t b = 0; b + 1 < 313; ++b) {
    CHECK(stream.batch_indices(b).size() == 32);
  }
  CHECK(stream.batch_indices(312).size() == 31);
}

TEST_CASE("small manifests fit into one partial batch") {
  const Manifest m = synthetic_manifest(10);
  BatchStream stream(m, {.batch_size = 32}, 1, 0);
  REQUIRE(stream.n_batches() == 1);
  CHECK(stream.batch_indices(0).size() == 10);
}

TEST_CASE("the same seed reproduces the same epoch order") {
  const Manifest m = synthetic_manifest(100);
  BatchStream a(m, {.batch_size = 8}, 42, 3);
  BatchStream b(m, {.batch_size = 8}, 42, 3);
  CHECK(a.order() == b.order());

  BatchStream next_epoch(m, {.batch_size = 8}, 42, 4);
  CHECK(a.order() != next_epoch.order());
  BatchStream other_seed(m, {.batch_size = 8}, 43, 3);
  CHECK(a.order() != other_seed.order());
}

TEST_CASE("every record appears exactly once per epoch") {
  const Manifest m = synthetic_manifest(47);
  BatchStream stream(m, {.batch_size = 5}, 9, 2);
  std::map<std::size_t, int> seen;
  for (std::size_t b = 0; b < stream.n_batches(); ++b) {
    for (std::size_t idx : stream.batch_indices(b)) seen[idx]++;
  }
  REQUIRE(seen.size() == 47);
  for (const auto& [idx, count] : seen) {
    CHECK(count == 1);
    CHECK(idx < 47);
  }
}

TEST_CASE("loaded batches carry normalized images, labels and ids") {
  const auto dir = testsupport::fresh_temp_dir("batch_load");
  const auto data = testsupport::make_toy_dataset(dir, 2, 48, 5);
  REQUIRE(data.manifest.size() == 14);

  BatchOptions options;
  options.batch_size = 4;
  options.augmenting = false;
  BatchStream stream(data.manifest, options, 1, 0);
  CHECK(stream.n_batches() == 4);

  std::multiset<int> labels_seen;
  for (std::size_t b = 0; b < stream.n_batches(); ++b) {
    const ImageBatch batch = stream.load_batch(b);
    CHECK(batch.normalized);
    CHECK(batch.images.c() == 3);
    CHECK(batch.images.h() == 224);
    CHECK(batch.images.w() == 224);
    CHECK(batch.images.n() == static_cast<int>(batch.labels.size()));
    CHECK(batch.ids.size() == batch.labels.size());
    for (int l : batch.labels) labels_seen.insert(l);
  }
  // epoch coverage: the multiset of labels equals the manifest's
  std::multiset<int> expected;
  for (const auto& rec : data.manifest.records()) expected.insert(rec.label);
  CHECK(labels_seen == expected);
}

TEST_CASE("augmented loading is deterministic per (seed, epoch, record)") {
  const auto dir = testsupport::fresh_temp_dir("batch_aug");
  const auto data = testsupport::make_toy_dataset(dir, 1, 48, 6, 3);

  BatchOptions options;
  options.batch_size = 3;
  options.augmenting = true;
  BatchStream a(data.manifest, options, 11, 0);
  BatchStream b(data.manifest, options, 11, 0);
  const ImageBatch ba = a.load_batch(0);
  const ImageBatch bb = b.load_batch(0);
  CHECK(std::equal(ba.images.data(), ba.images.data() + ba.images.size(),
                   bb.images.data()));
}

TEST_CASE("empty manifests cannot be batched") {
  Manifest empty;
  CHECK_THROWS_AS(BatchStream(empty, {.batch_size = 4}, 1, 0),
                  ContractViolation);
}

TEST_CASE("batch size below one is rejected") {
  const Manifest m = synthetic_manifest(5);
  CHECK_THROWS_AS(BatchStream(m, {.batch_size = 0}, 1, 0), ConfigError);
}
