#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace softbubble::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Proper rigid motion p -> R p + t. Lengths are in mm.
///
/// The rotation is stored as a unit quaternion with non-negative real part so
/// that equal rotations compare equal component-wise.
class RigidTransform {
 public:
  RigidTransform() = default;

  RigidTransform(const Quat& rotation, const Vec3& translation)
      : rotation_(rotation.normalized()), translation_(translation) {
    canonicalize();
  }

  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : RigidTransform(Quat(rotation), translation) {}

  static RigidTransform identity() { return {}; }

  static RigidTransform translation(const Vec3& t) { return {Quat::Identity(), t}; }

  static RigidTransform axis_angle(const Vec3& axis, double angle_rad,
                                   const Vec3& t = Vec3::Zero()) {
    return {Quat(Eigen::AngleAxisd(angle_rad, axis.normalized())), t};
  }

  const Quat& rotation() const { return rotation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_direction(const Vec3& d) const { return rotation_ * d; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }

  /// (this * other)(p) == this(other(p)).
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }

  RigidTransform inverse() const {
    const Quat inv = rotation_.conjugate();
    return {inv, -(inv * translation_)};
  }

  /// Rotation angle of this transform in radians, in [0, pi].
  double angle() const {
    return 2.0 * std::atan2(rotation_.vec().norm(), std::abs(rotation_.w()));
  }

 private:
  void canonicalize() {
    if (rotation_.w() < 0.0) rotation_.coeffs() *= -1.0;
  }

  Quat rotation_ = Quat::Identity();
  Vec3 translation_ = Vec3::Zero();
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

inline RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

/// Angle of the relative rotation a^-1 b, radians.
inline double rotation_distance(const RigidTransform& a, const RigidTransform& b) {
  return (a.inverse() * b).angle();
}

inline double translation_distance(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation() - b.translation()).norm();
}

/// Smallest rotation taking unit vector `from` onto unit vector `to`.
inline Quat rotation_between(const Vec3& from, const Vec3& to) {
  return Quat::FromTwoVectors(from.normalized(), to.normalized());
}

}  // namespace softbubble::geometry
