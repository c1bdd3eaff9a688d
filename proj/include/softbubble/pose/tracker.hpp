#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "softbubble/geometry/camera.hpp"
#include "softbubble/pose/estimate.hpp"

namespace softbubble::pose {

struct TrackerConfig {
  double window_deg = 20.0;  // fixed rotations about the contact normal, +/-
  double target_rate_hz = 1.0;
  PoseParams params;
};

/// Windowed ICP tracker: each frame tries the nominal face orientation
/// rotated by +/- window_deg about the contact normal, plus the orientation of
/// the last successful estimate.
class PoseTracker {
 public:
  PoseTracker(PointCloud model, Vec3 contact_normal, Quat nominal_orientation, TrackerConfig cfg = {})
      : contact_normal_(contact_normal.normalized()), nominal_(nominal_orientation), cfg_(cfg) {
    if (!(cfg_.target_rate_hz >= 1.0 && cfg_.target_rate_hz <= 2.0))
      throw InvalidArgument("tracker target rate must lie in [1, 2] Hz");
    cropped_ = crop_model(model, contact_normal_, cfg_.params.crop_fraction);
    tree_ = KdTree(cropped_.points);
  }

  /// Orientations tried on the next frame (2 fixed + last success).
  std::vector<Quat> window() const {
    const double a = geometry::deg2rad(cfg_.window_deg);
    std::vector<Quat> w = {nominal_ * Quat(Eigen::AngleAxisd(a, contact_normal_)),
                           nominal_ * Quat(Eigen::AngleAxisd(-a, contact_normal_))};
    if (last_) w.push_back(last_->pose.rotation());
    return w;
  }

  PoseEstimate step(const PointCloud& patch) {
    if (patch.size() < 3) return {};
    PoseEstimate e = detail::run_inits(patch, cropped_, tree_, contact_normal_, window(), cfg_.params);
    if (e.success) last_ = e;
    return e;
  }

  const std::optional<PoseEstimate>& last_success() const { return last_; }

 private:
  Vec3 contact_normal_;
  Quat nominal_;
  TrackerConfig cfg_;
  PointCloud cropped_;
  KdTree tree_;
  std::optional<PoseEstimate> last_;
};

struct PoseLogRow {
  int frame = 0;
  double timestamp = 0.0;  // s
  PoseEstimate estimate;
};

inline void write_pose_log(std::ostream& out, const std::vector<PoseLogRow>& rows) {
  out << "frame,timestamp,qw,qx,qy,qz,tx,ty,tz,fitness,inlier_fraction,init_index,success\n";
  char buf[320];
  for (const PoseLogRow& r : rows) {
    const Quat& q = r.estimate.pose.rotation();
    const Vec3& t = r.estimate.pose.translation();
    std::snprintf(buf, sizeof buf, "%d,%.4f,%.9f,%.9f,%.9f,%.9f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d\n", r.frame,
                  r.timestamp, q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z(), r.estimate.fitness,
                  r.estimate.inlier_fraction, r.estimate.init_index, r.estimate.success ? 1 : 0);
    out << buf;
  }
}

inline void write_pose_log(const std::string& path, const std::vector<PoseLogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_pose_log(out, rows);
}

}  // namespace softbubble::pose
