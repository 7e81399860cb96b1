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

#include <doctest.h>

#include "testutil.hpp"

using armstab::Rng;
using namespace armstab::geom;

TEST_CASE("compose identities and translations") {
  Rng rng(7);
  const Pose p = testutil::random_pose(rng);
  CHECK(approx_equal(compose(Pose::identity(), p), p));
  CHECK(approx_equal(compose(p, inverse(p)), Pose::identity(), kAtomicTol));

  const Pose a = Pose::from_translation(1, 0, 0);
  const Pose b = Pose::from_translation(0, 1, 0);
  CHECK(approx_equal(compose(a, b), Pose::from_translation(1, 1, 0)));
}

TEST_CASE("inverse of pure translation flips the vector") {
  const Pose p = Pose::from_translation(0.1, 0, 0);
  CHECK(approx_equal(inverse(p), Pose::from_translation(-0.1, 0, 0)));
  CHECK(approx_equal(inverse(Pose::identity()), Pose::identity()));
}

TEST_CASE("inverse matches the homogeneous-matrix oracle") {
  const Pose p = Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), M_PI / 2,
                                       Eigen::Vector3d(1, 0, 0));
  const Eigen::Matrix4d expected = testutil::to_mat4(p).inverse();
  CHECK(testutil::mat4_distance(testutil::to_mat4(inverse(p)), expected) <
        1e-12);

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Pose q = testutil::random_pose(rng);
    CHECK(testutil::mat4_distance(testutil::to_mat4(inverse(q)),
                                  testutil::to_mat4(q).inverse()) < 1e-9);
  }
}

TEST_CASE("relative pose") {
  Rng rng(3);
  const Pose p = testutil::random_pose(rng);
  CHECK(approx_equal(relative(Pose::identity(), p), p));
  CHECK(approx_equal(relative(p, p), Pose::identity()));

  // matrix-multiply oracle
  const Pose base = Pose::from_translation(1, 0, 0);
  const Pose other = Pose::from_translation(0.9, 0, 0);
  const Eigen::Matrix4d expected =
      testutil::to_mat4(base).inverse() * testutil::to_mat4(other);
  CHECK(testutil::mat4_distance(testutil::to_mat4(relative(base, other)),
                                expected) < 1e-12);
  CHECK(approx_equal(relative(base, other), Pose::from_translation(-0.1, 0, 0)));
}

TEST_CASE("transform_point basics") {
  CHECK((transform_point(Pose::identity(), {1, 2, 3}) -
         Eigen::Vector3d(1, 2, 3)).norm() == 0.0);
  CHECK((transform_point(Pose::from_translation(0, 0, 0.5), {0, 0, 0}) -
         Eigen::Vector3d(0, 0, 0.5)).norm() == 0.0);
  const Pose half_turn = Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), M_PI);
  CHECK((transform_point(half_turn, {1, 0, 0}) - Eigen::Vector3d(-1, 0, 0))
            .norm() < 1e-12);
}

TEST_CASE("associativity on random poses") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = testutil::random_pose(rng);
    const Pose b = testutil::random_pose(rng);
    const Pose c = testutil::random_pose(rng);
    CHECK(pose_distance(compose(compose(a, b), c), compose(a, compose(b, c))) <
          kComposedTol);
  }
}

TEST_CASE("relative recovers the delta") {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Pose p0 = testutil::random_pose(rng);
    const Pose d = testutil::random_pose(rng);
    CHECK(pose_distance(relative(p0, compose(p0, d)), d) < kAtomicTol);
  }
}

TEST_CASE("transform_point distributes over compose") {
  Rng rng(29);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = testutil::random_pose(rng);
    const Pose b = testutil::random_pose(rng);
    const Eigen::Vector3d x(rng.uniform(-1, 1), rng.uniform(-1, 1),
                            rng.uniform(-1, 1));
    CHECK((transform_point(compose(a, b), x) -
           transform_point(a, transform_point(b, x)))
              .norm() < kComposedTol);
  }
}

TEST_CASE("quaternion double cover") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const Pose p = testutil::random_pose(rng);
    Eigen::Quaterniond neg = p.rotation();
    neg.coeffs() = -neg.coeffs();
    const Pose q(p.translation(), neg);
    const Eigen::Vector3d x(rng.uniform(-1, 1), rng.uniform(-1, 1),
                            rng.uniform(-1, 1));
    CHECK((transform_point(p, x) - transform_point(q, x)).norm() < 1e-12);
    CHECK(quat_distance(p.rotation(), q.rotation()) < 1e-15);
  }
}

TEST_CASE("rotation stays normalized through long chains") {
  Rng rng(37);
  Pose p = Pose::identity();
  const Pose step = testutil::random_pose(rng, 0.01);
  for (int i = 0; i < 20000; ++i) p = compose(p, step);
  CHECK(std::abs(p.rotation().norm() - 1.0) < kAtomicTol);
}

TEST_CASE("pose row serialization round-trips") {
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    const Pose p = testutil::random_pose(rng);
    const Pose q = from_row(to_row(p));
    CHECK(pose_distance(p, q) < 1e-15);
  }
}

TEST_CASE("blend endpoints and translation linearity") {
  Rng rng(43);
  const Pose a = testutil::random_pose(rng);
  const Pose b = testutil::random_pose(rng);
  CHECK(pose_distance(blend(a, 1.0, b, 0.0), a) < 1e-15);
  CHECK(pose_distance(blend(a, 0.0, b, 1.0), b) < 1e-15);

  const Pose ta = Pose::from_translation(1, 0, 0);
  const Pose tb = Pose::from_translation(3, 0, 0);
  CHECK(pose_distance(blend(ta, 1.0, tb, 1.0), Pose::from_translation(2, 0, 0)) <
        1e-15);

  // sign-aligned: blending q with -q must not cancel
  Eigen::Quaterniond neg = a.rotation();
  neg.coeffs() = -neg.coeffs();
  const Pose a_neg(a.translation(), neg);
  CHECK(pose_distance(blend(a, 1.0, a_neg, 1.0), a) < 1e-12);
}
