// Copyright 2026 The armstab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ARMSTAB_GEOMETRY_HPP_
#define ARMSTAB_GEOMETRY_HPP_

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>

namespace armstab::geom {

/// Tolerance for single pose operations (normalization, inverse round-trip).
inline constexpr double kAtomicTol = 1e-9;
/// Tolerance for chained operations (associativity, composed transforms).
inline constexpr double kComposedTol = 1e-8;

/// A point expressed in the arm base frame (meters).
using PointBase = Eigen::Vector3d;

/// Rigid transform: translation (m) plus unit quaternion (w, x, y, z).
/// The rotation is re-normalized by every constructing operation, so long
/// 200 Hz pose streams cannot accumulate norm drift.
class Pose {
 public:
  Pose() : translation_(Eigen::Vector3d::Zero()),
           rotation_(Eigen::Quaterniond::Identity()) {}

  Pose(const Eigen::Vector3d& translation, const Eigen::Quaterniond& rotation)
      : translation_(translation), rotation_(rotation.normalized()) {}

  static Pose identity() { return Pose(); }

  static Pose from_translation(double x, double y, double z) {
    return Pose(Eigen::Vector3d(x, y, z), Eigen::Quaterniond::Identity());
  }

  static Pose from_translation(const Eigen::Vector3d& t) {
    return Pose(t, Eigen::Quaterniond::Identity());
  }

  static Pose from_axis_angle(const Eigen::Vector3d& axis, double angle_rad,
                              const Eigen::Vector3d& translation =
                                  Eigen::Vector3d::Zero()) {
    return Pose(translation, Eigen::Quaterniond(
                                 Eigen::AngleAxisd(angle_rad, axis.normalized())));
  }

  const Eigen::Vector3d& translation() const { return translation_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }

  bool is_finite() const {
    return translation_.allFinite() && rotation_.coeffs().allFinite();
  }

 private:
  Eigen::Vector3d translation_;
  Eigen::Quaterniond rotation_;
};

/// Group product a*b; the rotation of the result is re-normalized.
Pose compose(const Pose& a, const Pose& b);

Pose inverse(const Pose& p);

/// Pose of `other` expressed in the frame of `base`: inverse(base) * other.
Pose relative(const Pose& base, const Pose& other);

/// R*x + t.
PointBase transform_point(const Pose& p, const PointBase& x);

/// Quaternion distance up to sign: min(|q1 - q2|, |q1 + q2|).
double quat_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Max of translation distance and quaternion distance, for tolerance checks.
double pose_distance(const Pose& a, const Pose& b);

bool approx_equal(const Pose& a, const Pose& b, double tol = kAtomicTol);

/// Weighted blend of two poses: linear in translation, sign-aligned
/// normalized linear blend of the quaternions. Exact for agreeing inputs and
/// for translation-only differences; first-order for small rotations.
Pose blend(const Pose& a, double wa, const Pose& b, double wb);

/// CSV row convention shared by all logs: tx ty tz qw qx qy qz.
std::array<double, 7> to_row(const Pose& p);
Pose from_row(const std::array<double, 7>& row);

/// Fixed rigid transform between the pose-sensor frame and the arm base
/// frame. `transform` maps arm-base coordinates into sensor coordinates
/// (equivalently: the pose of the arm mount expressed in the sensor frame).
struct Extrinsics {
  Pose transform;
};

}  // namespace armstab::geom

#endif  // ARMSTAB_GEOMETRY_HPP_
