#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace grasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec3i = Eigen::Vector3i;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Gripper orientation as roll (about x), pitch (about y) and yaw (about z).
/// The matrix is the extrinsic composition Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerRotation {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  Mat3 matrix = Mat3::Identity();

  static EulerRotation from_angles(double roll, double pitch, double yaw) {
    EulerRotation r;
    r.roll = roll;
    r.pitch = pitch;
    r.yaw = yaw;
    r.matrix = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                Eigen::AngleAxisd(roll, Vec3::UnitX()))
                   .toRotationMatrix();
    return r;
  }

  static EulerRotation identity() { return {}; }
};

/// Axis-aligned box, min <= max componentwise.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  Aabb inflated(double margin) const {
    return {min - Vec3::Constant(margin), max + Vec3::Constant(margin)};
  }
};

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace grasp
