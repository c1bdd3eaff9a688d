#pragma once

#include <map>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/transform.hpp"

namespace softbubble::geometry {

inline constexpr const char* kWorldFrame = "W";

/// Named frames arranged as a forest. Every frame has at most one parent, so
/// the path between two connected frames is unique.
///
/// The edge stored for a child is the pose of the child in its parent, i.e.
/// the transform that maps child coordinates to parent coordinates.
class FrameGraph {
 public:
  FrameGraph() { frames_.emplace(kWorldFrame, Node{}); }

  bool contains(const std::string& name) const { return frames_.count(name) != 0; }

  /// Adds a root frame with no parent.
  void add_root(const std::string& name) {
    if (contains(name)) throw InvalidArgument("frame already exists: " + name);
    frames_.emplace(name, Node{});
  }

  void add_frame(const std::string& name, const std::string& parent,
                 const RigidTransform& parent_from_child) {
    if (contains(name)) throw InvalidArgument("frame already exists: " + name);
    if (!contains(parent)) throw InvalidArgument("unknown parent frame: " + parent);
    frames_.emplace(name, Node{parent, parent_from_child});
  }

  /// Replaces the edge of an existing non-root frame (e.g. a moving end effector).
  void set_transform(const std::string& name, const RigidTransform& parent_from_child) {
    auto it = frames_.find(name);
    if (it == frames_.end()) throw InvalidArgument("unknown frame: " + name);
    if (it->second.parent.empty()) throw InvalidArgument("cannot set transform of root frame: " + name);
    it->second.parent_from_child = parent_from_child;
  }

  /// Pose of `to` expressed in `from`: maps coordinates in `to` into `from`.
  RigidTransform resolve(const std::string& from, const std::string& to) const {
    auto [root_from, from_pose] = pose_in_root(from);
    auto [root_to, to_pose] = pose_in_root(to);
    if (root_from != root_to) {
      throw InvalidArgument("frames are not connected: " + from + ", " + to);
    }
    return from_pose.inverse() * to_pose;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, node] : frames_) out.push_back(name);
    return out;
  }

 private:
  struct Node {
    std::string parent;
    RigidTransform parent_from_child;
  };

  std::pair<std::string, RigidTransform> pose_in_root(const std::string& name) const {
    auto it = frames_.find(name);
    if (it == frames_.end()) throw InvalidArgument("unknown frame: " + name);
    RigidTransform pose = RigidTransform::identity();
    std::string current = name;
    while (!it->second.parent.empty()) {
      pose = it->second.parent_from_child * pose;
      current = it->second.parent;
      it = frames_.find(current);
    }
    return {current, pose};
  }

  std::map<std::string, Node> frames_;
};

}  // namespace softbubble::geometry
