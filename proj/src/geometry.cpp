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

#include "armstab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace armstab::geom {

Pose compose(const Pose& a, const Pose& b) {
  const Eigen::Vector3d t = a.translation() + a.rotation() * b.translation();
  const Eigen::Quaterniond q = a.rotation() * b.rotation();
  return Pose(t, q);  // ctor normalizes
}

Pose inverse(const Pose& p) {
  const Eigen::Quaterniond qi = p.rotation().conjugate();
  return Pose(-(qi * p.translation()), qi);
}

Pose relative(const Pose& base, const Pose& other) {
  return compose(inverse(base), other);
}

PointBase transform_point(const Pose& p, const PointBase& x) {
  return p.rotation() * x + p.translation();
}

double quat_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double dminus = (a.coeffs() - b.coeffs()).norm();
  const double dplus = (a.coeffs() + b.coeffs()).norm();
  return std::min(dminus, dplus);
}

double pose_distance(const Pose& a, const Pose& b) {
  return std::max((a.translation() - b.translation()).norm(),
                  quat_distance(a.rotation(), b.rotation()));
}

bool approx_equal(const Pose& a, const Pose& b, double tol) {
  return pose_distance(a, b) <= tol;
}

Pose blend(const Pose& a, double wa, const Pose& b, double wb) {
  const double wsum = wa + wb;
  const double la = wa / wsum;
  const double lb = wb / wsum;
  const Eigen::Vector3d t = la * a.translation() + lb * b.translation();
  Eigen::Vector4d qb = b.rotation().coeffs();
  if (a.rotation().coeffs().dot(qb) < 0.0) qb = -qb;  // double cover
  const Eigen::Vector4d qc = la * a.rotation().coeffs() + lb * qb;
  return Pose(t, Eigen::Quaterniond(qc));
}

std::array<double, 7> to_row(const Pose& p) {
  const auto& t = p.translation();
  const auto& q = p.rotation();
  return {t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()};
}

Pose from_row(const std::array<double, 7>& row) {
  return Pose(Eigen::Vector3d(row[0], row[1], row[2]),
              Eigen::Quaterniond(row[3], row[4], row[5], row[6]));
}

}  // namespace armstab::geom
