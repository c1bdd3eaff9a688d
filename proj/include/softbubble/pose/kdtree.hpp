#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/transform.hpp"

namespace softbubble::pose {

using geometry::Vec3;

/// Static 3-d tree with exact nearest-neighbour queries.
class KdTree {
 public:
  struct Match {
    int index = -1;
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) root_ = build(0, static_cast<int>(order_.size()));
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  Match nearest(const Vec3& q) const {
    Match best;
    if (root_ >= 0) search(root_, q, best);
    return best;
  }

 private:
  static constexpr int kLeafSize = 8;

  struct Node {
    int begin, end;  // range in order_
    int axis = -1;   // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (int k = begin; k < end; ++k) {
      lo = lo.cwiseMin(points_[order_[k]]);
      hi = hi.cwiseMax(points_[order_[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    Node& n = nodes_[id];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
  }

  void search(int id, const Vec3& q, Match& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (int k = n.begin; k < n.end; ++k) {
        const int idx = order_[k];
        const double d = (points_[idx] - q).squaredNorm();
        if (d < best.squared_distance || (d == best.squared_distance && idx < best.index)) best = {idx, d};
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (diff * diff <= best.squared_distance) search(far, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace softbubble::pose
