#include "dermanet/metrics.hpp"

#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "dermanet/errors.hpp"

namespace dermanet {

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long v : row) t += v;
  return t;
}

long ConfusionMatrix::row_sum(int truth) const {
  long t = 0;
  for (long v : counts.at(static_cast<std::size_t>(truth))) t += v;
  return t;
}

PredictionVector predict(ModelAssembly& model, const ImageTensor& img) {
  if (!img.normalized) {
    throw ContractViolation("predict: image is not normalized");
  }
  ImageBatch batch;
  batch.images = nn::Tensor(1, 3, img.height, img.width);
  std::copy(img.data.begin(), img.data.end(), batch.images.sample(0));
  batch.labels = {0};
  batch.ids = {""};
  batch.normalized = true;

  nn::Tensor logits = model.forward(batch, /*training=*/false);
  const auto probs =
      softmax(std::span<const double>(logits.data(), logits.size()));
  PredictionVector out;
  if (probs.size() != out.probs.size()) {
    throw ContractViolation("predict: model does not emit 7 logits");
  }
  std::copy(probs.begin(), probs.end(), out.probs.begin());
  return out;
}

int argmax_label(const PredictionVector& pred) {
  int best = 0;
  for (int i = 1; i < kNumCategories; ++i) {
    if (pred.probs[static_cast<std::size_t>(i)] >
        pred.probs[static_cast<std::size_t>(best)]) {
      best = i;
    }
  }
  return best;
}

PredictionVector mean_prediction(std::span<const PredictionVector> members) {
  if (members.empty()) {
    throw ContractViolation("mean_prediction: no members");
  }
  const double k = static_cast<double>(members.size());
  PredictionVector out = members[0];
  for (int j = 0; j < kNumCategories; ++j) {
    double delta_sum = 0.0;
    for (std::size_t i = 1; i < members.size(); ++i) {
      delta_sum += members[i].probs[j] - members[0].probs[j];
    }
    out.probs[j] = members[0].probs[j] + delta_sum / k;
  }
  return out;
}

PredictionVector tta_predict(ModelAssembly& model, const ImageTensor& img,
                             int n_aug, const AugmentationPolicy& policy,
                             Rng& rng) {
  if (n_aug < 0) throw ContractViolation("tta_predict: n_aug must be >= 0");
  std::vector<PredictionVector> members;
  members.reserve(static_cast<std::size_t>(n_aug) + 1);
  members.push_back(predict(model, img));
  for (int k = 0; k < n_aug; ++k) {
    members.push_back(predict(model, augment(img, policy, rng)));
  }
  return mean_prediction(members);
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& truths) {
  if (predictions.size() != truths.size()) {
    throw ContractViolation("confusion_matrix: length mismatch");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int t = truths[i], p = predictions[i];
    if (t < 0 || t >= kNumCategories || p < 0 || p >= kNumCategories) {
      throw ContractViolation("confusion_matrix: category index out of range");
    }
    cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]++;
  }
  return cm;
}

std::array<std::optional<double>, kNumCategories> per_category_recall(
    const ConfusionMatrix& cm) {
  std::array<std::optional<double>, kNumCategories> out;
  for (int t = 0; t < kNumCategories; ++t) {
    const long row = cm.row_sum(t);
    if (row > 0) {
      out[static_cast<std::size_t>(t)] =
          static_cast<double>(
              cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)]) /
          static_cast<double>(row);
    }
  }
  return out;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  const auto recalls = per_category_recall(cm);
  double sum = 0.0;
  int populated = 0;
  for (const auto& r : recalls) {
    if (r) {
      sum += *r;
      ++populated;
    }
  }
  if (populated == 0) {
    throw ContractViolation("balanced_accuracy: all-zero confusion matrix");
  }
  return sum / populated;
}

EvaluationReport evaluate(ModelAssembly& model, const Manifest& manifest,
                          const EvalOptions& options,
                          std::vector<RecordPrediction>* predictions) {
  if (manifest.empty()) {
    throw ContractViolation("evaluate: empty manifest");
  }
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& rec : manifest.records()) {
    if (!std::filesystem::exists(rec.image_path)) {
      if (!missing.empty()) missing += ", ";
      missing += rec.image_id;
      ++n_missing;
    }
  }
  if (n_missing > 0) {
    throw LoadError("evaluate: " + std::to_string(n_missing) +
                    " missing image files: " + missing);
  }

  std::vector<int> preds, truths;
  preds.reserve(manifest.size());
  truths.reserve(manifest.size());
  if (predictions) predictions->clear();

  for (const auto& rec : manifest.records()) {
    ImageTensor img =
        normalize(load_and_resize(rec.image_path, options.side), options.mean,
                  options.std);
    PredictionVector pred;
    if (options.tta) {
      Rng rng(derive_seed(options.seed, "tta", fnv1a(rec.image_id)));
      pred = tta_predict(model, img, options.n_aug, options.policy, rng);
    } else {
      pred = predict(model, img);
    }
    const int label = argmax_label(pred);
    preds.push_back(label);
    truths.push_back(rec.label);
    if (predictions) {
      predictions->push_back({rec.image_id, pred, label, rec.label});
    }
  }

  EvaluationReport report;
  report.confusion = confusion_matrix(preds, truths);
  report.per_category_recall = per_category_recall(report.confusion);
  report.balanced_accuracy = balanced_accuracy(report.confusion);
  report.n_records = manifest.size();
  report.tta = options.tta;
  report.n_aug = options.tta ? options.n_aug : 0;
  report.seed = options.seed;
  return report;
}

void write_report_json(const EvaluationReport& report, std::ostream& out) {
  nlohmann::json j;
  j["n_records"] = report.n_records;
  auto confusion = nlohmann::json::array();
  for (const auto& row : report.confusion.counts) {
    confusion.push_back(row);
  }
  j["confusion"] = confusion;
  auto recalls = nlohmann::json::array();
  for (const auto& r : report.per_category_recall) {
    if (r) {
      recalls.push_back(*r);
    } else {
      recalls.push_back(nullptr);
    }
  }
  j["per_category_recall"] = recalls;
  j["balanced_accuracy"] = report.balanced_accuracy;
  j["tta"] = report.tta;
  j["n_aug"] = report.n_aug;
  j["seed"] = report.seed;
  out << j.dump(2) << '\n';
}

void write_predictions_csv(const std::vector<RecordPrediction>& predictions,
                           std::ostream& out,
                           const CategoryTaxonomy& taxonomy) {
  out << "image," << taxonomy.joined_codes() << ",predicted\n";
  char buf[64];
  for (const auto& p : predictions) {
    out << p.image_id;
    for (double v : p.prediction.probs) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      out << buf;
    }
    out << ',' << taxonomy.at(static_cast<std::size_t>(p.predicted)).code
        << '\n';
  }
}

}  // namespace dermanet
