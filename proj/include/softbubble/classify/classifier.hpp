#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "softbubble/classify/degrade.hpp"
#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"
#include "softbubble/random.hpp"

namespace softbubble::classify {

/// Random-access labelled images, loaded on demand.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::size_t size() const = 0;
  virtual DepthImage image(std::size_t i) const = 0;
  virtual int label(std::size_t i) const = 0;
};

class VectorImageSource final : public ImageSource {
 public:
  void add(DepthImage img, int label) {
    images_.push_back(std::move(img));
    labels_.push_back(label);
  }
  std::size_t size() const override { return images_.size(); }
  DepthImage image(std::size_t i) const override { return images_.at(i); }
  int label(std::size_t i) const override { return labels_.at(i); }

 private:
  std::vector<DepthImage> images_;
  std::vector<int> labels_;
};

/// Pluggable image classifier: scores are a probability vector over classes.
class ClassifierModel {
 public:
  virtual ~ClassifierModel() = default;
  virtual void fit(const ImageSource& train, int num_classes) = 0;
  virtual std::vector<double> predict(const DepthImage& image) const = 0;
  virtual std::string name() const = 0;
};

/// Index of the highest score; ties resolve to the lowest index.
inline int argmax(const std::vector<double>& scores) {
  if (scores.empty()) throw InvalidArgument("argmax of an empty score vector");
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

/// exp(-d) normalized, computed relative to the smallest distance.
inline std::vector<double> softmax_negative(const std::vector<double>& distances) {
  const double dmin = *std::min_element(distances.begin(), distances.end());
  std::vector<double> s(distances.size());
  double total = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) total += s[k] = std::exp(-(distances[k] - dmin));
  for (double& v : s) v /= total;
  return s;
}

/// Deformation map (reference minus depth, clamped at 0, invalid -> 0),
/// box-averaged to side x side and scaled to unit L2 norm.
inline std::vector<double> deformation_features(const DepthImage& image, const DepthImage& reference, int side) {
  if (!image.same_shape(reference)) throw InvalidArgument("image and reference dimensions differ");
  DepthImage deform(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const float d = image.data()[i], r = reference.data()[i];
    deform.data()[i] = (d > 0.0f && r > 0.0f) ? std::max(0.0f, r - d) : 0.0f;
  }
  std::vector<double> f(static_cast<std::size_t>(side) * side, 0.0);
  for (int j = 0; j < side; ++j) {
    const int y0 = j * image.height() / side, y1 = (j + 1) * image.height() / side;
    for (int i = 0; i < side; ++i) {
      const int x0 = i * image.width() / side, x1 = (i + 1) * image.width() / side;
      double sum = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) sum += deform.at(x, y);
      const int n = (x1 - x0) * (y1 - y0);
      f[j * side + i] = n > 0 ? sum / n : 0.0;
    }
  }
  double norm = 0.0;
  for (double v : f) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : f) v /= norm;
  }
  return f;
}

/// Nearest class centroid in the deformation-feature space.
class NearestCentroid final : public ClassifierModel {
 public:
  explicit NearestCentroid(DepthImage reference, int feature_side = 28)
      : reference_(std::move(reference)), side_(feature_side) {
    if (side_ < 1) throw InvalidArgument("feature side must be positive");
  }

  std::vector<double> features(const DepthImage& img) const { return deformation_features(img, reference_, side_); }

  void fit(const ImageSource& train, int num_classes) override {
    if (num_classes < 1) throw InvalidArgument("classifier needs at least one class");
    const std::size_t dim = static_cast<std::size_t>(side_) * side_;
    centroids_.assign(num_classes, std::vector<double>(dim, 0.0));
    std::vector<int> counts(num_classes, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      const int label = train.label(i);
      if (label < 0 || label >= num_classes) throw InvalidArgument("training label out of range");
      const auto f = features(train.image(i));
      for (std::size_t d = 0; d < dim; ++d) centroids_[label][d] += f[d];
      ++counts[label];
    }
    for (int c = 0; c < num_classes; ++c) {
      if (counts[c] == 0) throw InvalidArgument("class " + std::to_string(c) + " has no training samples");
      for (double& v : centroids_[c]) v /= counts[c];
    }
  }

  std::vector<double> predict(const DepthImage& image) const override {
    if (centroids_.empty()) throw Error("classifier used before fit");
    return scores_for(features(image));
  }

  std::vector<double> scores_for(const std::vector<double>& f) const {
    std::vector<double> dist;
    for (const auto& c : centroids_) {
      double s = 0.0;
      for (std::size_t d = 0; d < f.size(); ++d) s += (f[d] - c[d]) * (f[d] - c[d]);
      dist.push_back(std::sqrt(s));
    }
    return softmax_negative(dist);
  }

  const std::vector<std::vector<double>>& centroids() const { return centroids_; }
  void set_centroids(std::vector<std::vector<double>> c) { centroids_ = std::move(c); }
  int feature_side() const { return side_; }
  std::string name() const override { return "nearest_centroid"; }

 private:
  DepthImage reference_;
  int side_;
  std::vector<std::vector<double>> centroids_;
};

/// Replays a fixed label sequence, one per predict call. Fed with the true
/// labels in evaluation order it acts as a perfect classifier.
class ScriptedClassifier final : public ClassifierModel {
 public:
  explicit ScriptedClassifier(std::vector<int> labels) : labels_(std::move(labels)) {}
  void fit(const ImageSource&, int num_classes) override {
    classes_ = num_classes;
    next_ = 0;
  }
  std::vector<double> predict(const DepthImage&) const override {
    std::vector<double> s(classes_, 0.0);
    s.at(labels_.at(next_++ % labels_.size())) = 1.0;
    return s;
  }
  std::string name() const override { return "scripted"; }

 private:
  std::vector<int> labels_;
  int classes_ = 0;
  mutable std::size_t next_ = 0;
};

class ConstantClassifier final : public ClassifierModel {
 public:
  explicit ConstantClassifier(int label) : label_(label) {}
  void fit(const ImageSource&, int num_classes) override {
    if (label_ < 0 || label_ >= num_classes) throw InvalidArgument("constant label out of range");
    classes_ = num_classes;
  }
  std::vector<double> predict(const DepthImage&) const override {
    std::vector<double> s(classes_, 0.0);
    s[label_] = 1.0;
    return s;
  }
  std::string name() const override { return "constant"; }

 private:
  int label_;
  int classes_ = 0;
};

/// Uniformly random probability vectors from a seeded stream.
class RandomClassifier final : public ClassifierModel {
 public:
  explicit RandomClassifier(std::uint64_t seed) : rng_(seed) {}
  void fit(const ImageSource&, int num_classes) override { classes_ = num_classes; }
  std::vector<double> predict(const DepthImage&) const override {
    std::vector<double> s(classes_);
    double total = 0.0;
    for (double& v : s) total += v = -std::log(1.0 - rng_.uniform());
    for (double& v : s) v /= total;
    return s;
  }
  std::string name() const override { return "random"; }

 private:
  mutable Rng rng_;
  int classes_ = 0;
};

}  // namespace softbubble::classify
