#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dermanet/augment.hpp"
#include "dermanet/batch.hpp"
#include "dermanet/manifest.hpp"
#include "dermanet/model.hpp"

namespace dermanet {

/// A categorical probability vector: non-negative, sums to 1 (within 1e-9).
struct PredictionVector {
  std::array<double, kNumCategories> probs{};

  bool operator==(const PredictionVector&) const = default;
};

/// Rows are true categories, columns predicted.
struct ConfusionMatrix {
  std::array<std::array<long, kNumCategories>, kNumCategories> counts{};

  long total() const;
  long row_sum(int truth) const;

  bool operator==(const ConfusionMatrix&) const = default;
};

struct EvaluationReport {
  ConfusionMatrix confusion;
  std::array<std::optional<double>, kNumCategories> per_category_recall;
  double balanced_accuracy = 0.0;
  std::size_t n_records = 0;
  bool tta = false;
  int n_aug = 0;
  std::uint64_t seed = 0;
};

/// Per-record outcome, kept for the prediction CSV dump.
struct RecordPrediction {
  std::string image_id;
  PredictionVector prediction;
  int predicted = 0;
  int truth = 0;
};

/// Softmax of the evaluation-mode forward pass on one normalized image.
PredictionVector predict(ModelAssembly& model, const ImageTensor& img);

/// Smallest index among maximal components.
int argmax_label(const PredictionVector& pred);

/// Arithmetic mean of prediction vectors, anchored at the first member:
/// mean = v0 + (sum of (vi - v0)) / k. Identical members therefore average
/// to the member bit-for-bit.
PredictionVector mean_prediction(std::span<const PredictionVector> members);

/// Mean of predict(img) and predictions on n_aug randomly transformed
/// copies. The rng should be keyed per record so parallel evaluation cannot
/// change results.
PredictionVector tta_predict(ModelAssembly& model, const ImageTensor& img,
                             int n_aug, const AugmentationPolicy& policy,
                             Rng& rng);

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& truths);

/// Recall per category; empty (no true instances) categories yield nullopt.
std::array<std::optional<double>, kNumCategories> per_category_recall(
    const ConfusionMatrix& cm);

/// Mean recall over categories with at least one true instance. Throws on an
/// all-zero matrix.
double balanced_accuracy(const ConfusionMatrix& cm);

struct EvalOptions {
  bool tta = false;
  int n_aug = 4;
  AugmentationPolicy policy;
  std::uint64_t seed = 0;
  int side = kImageSide;
  std::array<double, 3> mean = kImagenetMean;
  std::array<double, 3> std = kImagenetStd;
};

/// Evaluates every record of a manifest (missing image files are collected
/// up front and reported in one error). When `predictions` is non-null it
/// receives the per-record outcomes in manifest order.
EvaluationReport evaluate(ModelAssembly& model, const Manifest& manifest,
                          const EvalOptions& options,
                          std::vector<RecordPrediction>* predictions = nullptr);

/// JSON report with fields n_records, confusion, per_category_recall,
/// balanced_accuracy, tta, n_aug, seed.
void write_report_json(const EvaluationReport& report, std::ostream& out);

/// CSV `image,MEL,...,VASC,predicted` mirroring the ground-truth column
/// order; `predicted` is the category code.
void write_predictions_csv(const std::vector<RecordPrediction>& predictions,
                           std::ostream& out,
                           const CategoryTaxonomy& taxonomy =
                               CategoryTaxonomy::ham10000());

}  // namespace dermanet
