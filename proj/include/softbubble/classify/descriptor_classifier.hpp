#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "softbubble/classify/classifier.hpp"
#include "softbubble/classify/features.hpp"
#include "softbubble/render/sensor_rig.hpp"

namespace softbubble::classify {

/// Nearest class centroid of the contact descriptor under the pooled
/// within-class covariance (Mahalanobis distance). Features are z-scored
/// first and `ridge` is added to the covariance diagonal.
class DescriptorCentroid final : public ClassifierModel {
 public:
  DescriptorCentroid(DepthImage reference, render::SensorRig rig, double ridge = 0.01)
      : reference_(std::move(reference)), rig_(std::move(rig)), ridge_(ridge) {
    if (!(ridge_ > 0.0)) throw InvalidArgument("covariance ridge must be positive");
  }

  Eigen::VectorXd features(const DepthImage& img) const {
    const std::vector<double> f = contact_descriptor(img, reference_, rig_);
    return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }

  void fit(const ImageSource& train, int num_classes) override {
    if (num_classes < 1) throw InvalidArgument("classifier needs at least one class");
    if (train.size() == 0) throw InvalidArgument("empty training set");
    std::vector<Eigen::VectorXd> x;
    std::vector<int> labels;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const int label = train.label(i);
      if (label < 0 || label >= num_classes) throw InvalidArgument("training label out of range");
      x.push_back(features(train.image(i)));
      labels.push_back(label);
    }
    const Eigen::Index dim = x.front().size();
    const double n = static_cast<double>(x.size());
    mean_ = Eigen::VectorXd::Zero(dim);
    for (const auto& v : x) mean_ += v;
    mean_ /= n;
    scale_ = Eigen::VectorXd::Zero(dim);
    for (const auto& v : x) scale_ += (v - mean_).cwiseAbs2();
    scale_ = (scale_ / n).cwiseSqrt().array() + 1e-9;
    for (auto& v : x) v = (v - mean_).cwiseQuotient(scale_);

    centroids_.assign(num_classes, Eigen::VectorXd::Zero(dim));
    std::vector<int> counts(num_classes, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      centroids_[labels[i]] += x[i];
      ++counts[labels[i]];
    }
    for (int c = 0; c < num_classes; ++c) {
      if (counts[c] == 0) throw InvalidArgument("class " + std::to_string(c) + " has no training samples");
      centroids_[c] /= counts[c];
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Eigen::VectorXd r = x[i] - centroids_[labels[i]];
      cov.noalias() += r * r.transpose();
    }
    cov /= n;
    cov.diagonal().array() += ridge_;
    cholesky_.compute(cov);
    if (cholesky_.info() != Eigen::Success) throw Error("pooled covariance is not positive definite");
    whitened_.clear();
    for (const auto& c : centroids_) whitened_.push_back(cholesky_.matrixL().solve(c));
  }

  std::vector<double> predict(const DepthImage& image) const override {
    if (whitened_.empty()) throw Error("classifier used before fit");
    const Eigen::VectorXd z = cholesky_.matrixL().solve((features(image) - mean_).cwiseQuotient(scale_));
    std::vector<double> dist;
    for (const auto& c : whitened_) dist.push_back((z - c).norm());
    return softmax_negative(dist);
  }

  std::string name() const override { return "descriptor_centroid"; }

 private:
  DepthImage reference_;
  render::SensorRig rig_;
  double ridge_;
  Eigen::VectorXd mean_, scale_;
  std::vector<Eigen::VectorXd> centroids_, whitened_;
  Eigen::LLT<Eigen::MatrixXd> cholesky_;
};

}  // namespace softbubble::classify
