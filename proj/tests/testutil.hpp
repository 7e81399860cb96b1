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

#ifndef ARMSTAB_TESTS_TESTUTIL_HPP_
#define ARMSTAB_TESTS_TESTUTIL_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "armstab/geometry.hpp"
#include "armstab/rng.hpp"

namespace testutil {

/// Uniform random rotation (normalized 4-gaussian) with translation in a box.
inline armstab::geom::Pose random_pose(armstab::Rng& rng, double box = 2.0) {
  const Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(),
                             rng.normal());
  return armstab::geom::Pose(
      Eigen::Vector3d(rng.uniform(-box, box), rng.uniform(-box, box),
                      rng.uniform(-box, box)),
      q.normalized());
}

/// Independent oracle: poses as 4x4 homogeneous matrices.
inline Eigen::Matrix4d to_mat4(const armstab::geom::Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rotation().toRotationMatrix();
  m.topRightCorner<3, 1>() = p.translation();
  return m;
}

inline armstab::geom::Pose from_mat4(const Eigen::Matrix4d& m) {
  return armstab::geom::Pose(m.topRightCorner<3, 1>(),
                             Eigen::Quaterniond(m.topLeftCorner<3, 3>()));
}

inline double mat4_distance(const Eigen::Matrix4d& a, const Eigen::Matrix4d& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Unique scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "armstab_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

#endif  // ARMSTAB_TESTS_TESTUTIL_HPP_
