#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "softbubble/classify/classifier.hpp"
#include "softbubble/classify/descriptor_classifier.hpp"
#include "softbubble/classify/dataset.hpp"
#include "softbubble/classify/degrade.hpp"
#include "softbubble/render/pgm.hpp"

namespace softbubble::classify {

/// Manifest entries of one split, read from disk and degraded to N.
class ManifestImageSource final : public ImageSource {
 public:
  ManifestImageSource(const DatasetManifest& m, fs::path dir, Split split, int n)
      : dir_(std::move(dir)), n_(n) {
    check_resolution_param(n);
    for (const DatasetEntry& e : m.entries)
      if (e.split == split) entries_.push_back(&e);
  }
  std::size_t size() const override { return entries_.size(); }
  DepthImage image(std::size_t i) const override {
    return degrade_resolution(render::read_pgm((dir_ / entries_.at(i)->file).string()), n_);
  }
  int label(std::size_t i) const override { return entries_.at(i)->label; }
  const DatasetEntry& entry(std::size_t i) const { return *entries_.at(i); }

 private:
  fs::path dir_;
  int n_;
  std::vector<const DatasetEntry*> entries_;
};

/// Builds a fresh classifier for resolution N given the degraded reference.
using ClassifierFactory = std::function<std::unique_ptr<ClassifierModel>(int n, const DepthImage& reference)>;

inline ClassifierFactory nearest_centroid_factory(int feature_side = 28) {
  return [feature_side](int, const DepthImage& ref) { return std::make_unique<NearestCentroid>(ref, feature_side); };
}

inline ClassifierFactory descriptor_centroid_factory(render::SensorRig rig = {}, double ridge = 0.01) {
  return [rig, ridge](int, const DepthImage& ref) { return std::make_unique<DescriptorCentroid>(ref, rig, ridge); };
}

struct AccuracyRow {
  std::string dataset;
  int n = 0;
  std::string split;
  double top1_accuracy = 0.0;  // macro average over classes
  std::size_t n_samples = 0;
};

/// Top-1 accuracy of `model` on a source, macro-averaged over the classes
/// present in it.
inline double macro_accuracy(const ClassifierModel& model, const ImageSource& src, int num_classes,
                             std::vector<int>* predictions = nullptr) {
  std::vector<int> hits(num_classes, 0), totals(num_classes, 0);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto scores = model.predict(src.image(i));
    if (static_cast<int>(scores.size()) != num_classes) throw Error("classifier returned the wrong score count");
    const int pred = argmax(scores);
    if (predictions) predictions->push_back(pred);
    ++totals.at(src.label(i));
    hits[src.label(i)] += pred == src.label(i);
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c)
    if (totals[c] > 0) {
      sum += static_cast<double>(hits[c]) / totals[c];
      ++present;
    }
  return present ? sum / present : 0.0;
}

/// For every N: fit on the degraded training split, score the validation split.
inline std::vector<AccuracyRow> evaluate(const DatasetManifest& m, const fs::path& dir,
                                         const ClassifierFactory& factory, const std::vector<int>& ns) {
  const DepthImage reference = render::read_pgm((dir / m.reference).string());
  const int classes = static_cast<int>(m.classes.size());
  std::vector<AccuracyRow> rows;
  for (int n : ns) {
    check_resolution_param(n);
    auto model = factory(n, degrade_resolution(reference, n));
    ManifestImageSource train(m, dir, Split::Train, n);
    ManifestImageSource val(m, dir, Split::Val, n);
    model->fit(train, classes);
    rows.push_back({m.dataset, n, "val", macro_accuracy(*model, val, classes), val.size()});
  }
  return rows;
}

inline void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyRow>& rows) {
  out << "dataset,N,split,top1_accuracy,n_samples\n";
  char buf[160];
  for (const AccuracyRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%s,%.6f,%zu\n", r.dataset.c_str(), r.n, r.split.c_str(), r.top1_accuracy,
                  r.n_samples);
    out << buf;
  }
}

inline void write_accuracy_csv(const std::string& path, const std::vector<AccuracyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_accuracy_csv(out, rows);
}

}  // namespace softbubble::classify
