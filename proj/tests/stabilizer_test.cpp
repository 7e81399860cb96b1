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

#include "armstab/stabilizer.hpp"

#include <doctest.h>

#include <cmath>

#include "armstab/errors.hpp"
#include "testutil.hpp"

using namespace armstab;
using namespace armstab::stab;

namespace {

pred::RelativePoseSeq seq_of(std::vector<geom::Pose> poses, double f = 200.0) {
  pred::RelativePoseSeq s;
  s.frequency = f;
  s.poses = std::move(poses);
  return s;
}

CompensationContext ctx_of(const geom::Pose& extrinsics, double latency,
                           double gen_lag, double f = 200.0) {
  CompensationContext ctx;
  ctx.extrinsics.transform = extrinsics;
  ctx.latency = latency;
  ctx.pose_frequency = f;
  ctx.generation_lag = gen_lag;
  return ctx;
}

}  // namespace

TEST_CASE("no motion means no correction") {
  const auto past = seq_of(std::vector<geom::Pose>(10, geom::Pose::identity()));
  const auto fut = seq_of(std::vector<geom::Pose>(10, geom::Pose::identity()));
  const Offset off =
      compute_offset(ctx_of(geom::Pose::identity(), 0.03, 0.02), past, fut);
  CHECK(geom::pose_distance(off.delta, geom::Pose::identity()) < 1e-15);
}

TEST_CASE("platform translation is undone with identity extrinsics") {
  // Platform at the generation time sat at the base pose; by execution it
  // will have moved +0.02 m along x. The action must shift by -0.02 m.
  std::vector<geom::Pose> past(10, geom::Pose::identity());
  std::vector<geom::Pose> fut(10, geom::Pose::from_translation(0.02, 0, 0));
  const auto ctx = ctx_of(geom::Pose::identity(), 10.0 / 200.0, 1.0 / 200.0);
  const Offset off = compute_offset(ctx, seq_of(std::move(past)),
                                    seq_of(std::move(fut)));
  CHECK((off.delta.translation() - Eigen::Vector3d(-0.02, 0, 0)).norm() <
        1e-12);

  const actions::Action a{Eigen::Vector3d(0.3, 0.0, 0.1), 0.7};
  const actions::Action b = compensate(a, off);
  CHECK((b.position - Eigen::Vector3d(0.28, 0.0, 0.1)).norm() < 1e-12);
  CHECK(b.gripper == a.gripper);
}

TEST_CASE("rotated extrinsics map the correction into the arm frame") {
  // Same +x platform translation, arm frame rotated 90 degrees about z
  // relative to the sensor. Verified against the homogeneous-matrix oracle.
  const geom::Pose e =
      geom::Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), M_PI / 2);
  std::vector<geom::Pose> past(10, geom::Pose::identity());
  std::vector<geom::Pose> fut(10, geom::Pose::from_translation(0.02, 0, 0));
  const auto ctx = ctx_of(e, 5.0 / 200.0, 1.0 / 200.0);
  const Offset off =
      compute_offset(ctx, seq_of(std::move(past)), seq_of(std::move(fut)));

  const Eigen::Matrix4d expected =
      testutil::to_mat4(e).inverse() *
      testutil::to_mat4(geom::Pose::from_translation(0.02, 0, 0)).inverse() *
      testutil::to_mat4(e);
  CHECK(testutil::mat4_distance(testutil::to_mat4(off.delta), expected) <
        1e-12);
  // the rotation sense: undoing +x world motion in a +90deg-rotated arm frame
  // pulls the action along -y of the arm frame... verified numerically:
  CHECK(off.delta.translation().y() == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(std::abs(off.delta.translation().x()) < 1e-12);
}

TEST_CASE("window lookup picks ceil for the past and floor for the future") {
  // Distinct marker poses per index expose the chosen offsets.
  std::vector<geom::Pose> past, fut;
  for (int i = 10; i >= 1; --i) {
    past.push_back(geom::Pose::from_translation(-i, 0, 0));  // offset -i
  }
  for (int j = 1; j <= 10; ++j) {
    fut.push_back(geom::Pose::from_translation(j, 0, 0));  // offset +j
  }
  const double f = 200.0;
  // generation_lag * f = 2.4 -> ceil = 3 steps back -> translation -3
  // latency * f = 5.8 -> floor = 5 steps forward -> translation +5
  const auto ctx = ctx_of(geom::Pose::identity(), 5.8 / f, 2.4 / f, f);
  const Offset off =
      compute_offset(ctx, seq_of(std::move(past), f), seq_of(std::move(fut), f));
  // motion = rel_gen^-1 * rel_exec = (+3) + (+5) = +8; delta = -8
  CHECK(off.delta.translation().x() == doctest::Approx(-8.0).epsilon(1e-12));
}

TEST_CASE("offset index zero means the base pose itself") {
  std::vector<geom::Pose> past(4, geom::Pose::from_translation(-1, 0, 0));
  std::vector<geom::Pose> fut(4, geom::Pose::from_translation(2, 0, 0));
  const auto ctx = ctx_of(geom::Pose::identity(), 0.0, 0.0);
  const Offset off =
      compute_offset(ctx, seq_of(std::move(past)), seq_of(std::move(fut)));
  CHECK(geom::pose_distance(off.delta, geom::Pose::identity()) < 1e-15);
}

TEST_CASE("window lookups past the coverage raise") {
  const auto past = seq_of(std::vector<geom::Pose>(4, geom::Pose::identity()));
  const auto fut = seq_of(std::vector<geom::Pose>(4, geom::Pose::identity()));
  CHECK_THROWS_AS(
      compute_offset(ctx_of(geom::Pose::identity(), 0.0, 5.0 / 200.0), past, fut),
      IndexOutOfRangeError);
  CHECK_THROWS_AS(
      compute_offset(ctx_of(geom::Pose::identity(), 5.0 / 200.0, 0.0), past, fut),
      IndexOutOfRangeError);
}

TEST_CASE("delta is identity whenever generation equals execution pose") {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const geom::Pose rel = testutil::random_pose(rng, 0.05);
    const geom::Pose e = testutil::random_pose(rng, 0.3);
    const Offset off =
        offset_from_relative(ctx_of(e, 0.0, 0.0), rel, rel);
    CHECK(geom::pose_distance(off.delta, geom::Pose::identity()) < 1e-9);
  }
}

TEST_CASE("frame covariance: rotated sensor frame, rotated extrinsics") {
  // Expressing the same platform motion in a rotated sensor frame while
  // rotating the extrinsics accordingly must leave delta unchanged.
  Rng rng(33);
  for (int i = 0; i < 200; ++i) {
    const geom::Pose rel_gen = testutil::random_pose(rng, 0.05);
    const geom::Pose rel_exec = testutil::random_pose(rng, 0.05);
    const geom::Pose e = testutil::random_pose(rng, 0.3);
    const geom::Pose r = testutil::random_pose(rng, 0.0);  // pure rotation

    const Offset direct = offset_from_relative(ctx_of(e, 0, 0), rel_gen,
                                               rel_exec);
    const geom::Pose rel_gen_r =
        geom::compose(geom::inverse(r), geom::compose(rel_gen, r));
    const geom::Pose rel_exec_r =
        geom::compose(geom::inverse(r), geom::compose(rel_exec, r));
    const geom::Pose e_r = geom::compose(geom::inverse(r), e);
    const Offset rotated =
        offset_from_relative(ctx_of(e_r, 0, 0), rel_gen_r, rel_exec_r);
    CHECK(geom::pose_distance(direct.delta, rotated.delta) < 1e-9);
  }
}

TEST_CASE("compensate passes the gripper through bit-exactly") {
  Rng rng(55);
  for (int i = 0; i < 100; ++i) {
    const double grip = rng.uniform();
    actions::Action a{Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()),
                      grip};
    const Offset off{testutil::random_pose(rng, 0.1)};
    const actions::Action b = compensate(a, off);
    CHECK(b.gripper == grip);
    // position matches the transform_point oracle
    CHECK((b.position - geom::transform_point(off.delta, a.position)).norm() ==
          0.0);
  }
}

TEST_CASE("disabled stabilizer is exactly the identity on actions") {
  StabilizerConfig cfg;
  cfg.enabled = false;
  const Stabilizer stab(cfg, nullptr);
  actions::BufferSample s;
  s.action = actions::Action{Eigen::Vector3d(0.4, -0.2, 0.3), 0.25};
  s.gen_pose = geom::Pose::from_translation(1, 2, 3);
  s.gen_time = 5.0;
  const auto out = stab.stabilize(s, {}, 123.0);
  CHECK((out.action.position - s.action.position).norm() == 0.0);
  CHECK(out.action.gripper == s.action.gripper);
  CHECK(geom::pose_distance(out.offset.delta, geom::Pose::identity()) == 0.0);
}

TEST_CASE("stabilize on a static platform equals the buffered action") {
  // Identity pose history: logged generation pose equals the base pose, the
  // predictor (constant velocity on a still stream) returns identities, so
  // the action passes through exactly.
  StabilizerConfig cfg;
  cfg.enabled = true;
  cfg.latency = 0.1;
  cfg.pose_frequency = 200.0;
  cfg.input_frames = 50;
  cfg.output_frames = 25;
  const Stabilizer stab(cfg,
                        std::make_shared<ConstantVelocityPosePredictor>());
  std::vector<pred::PoseSample> history;
  for (int i = 0; i <= 400; ++i) {
    history.push_back({i * 0.005, geom::Pose::identity()});
  }
  actions::BufferSample s;
  s.action = actions::Action{Eigen::Vector3d(0.4, -0.2, 0.3), 0.5};
  s.gen_pose = geom::Pose::identity();
  s.gen_time = 1.8;
  const auto out = stab.stabilize(s, history, 2.02);
  CHECK((out.action.position - s.action.position).norm() < 1e-12);
  CHECK(out.action.gripper == s.action.gripper);
}

TEST_CASE("logged and window generation poses agree on an exact stream") {
  // Constant-velocity platform; the generation pose logged with the chunk is
  // the sample the window lookup lands on, so both variants coincide.
  const double v = 0.1, f = 200.0;
  std::vector<pred::PoseSample> history;
  for (int i = 0; i <= 400; ++i) {
    history.push_back(
        {i / f, geom::Pose::from_translation(v * i / f, 0, 0)});
  }
  const double now = 400.0 / f;
  const double gen_time = now - 8.0 / f;
  const double exec_time = now + 8.0 / f;  // gen lag 16 samples exactly

  StabilizerConfig cfg;
  cfg.enabled = true;
  cfg.latency = 8.0 / f;
  cfg.pose_frequency = f;
  cfg.input_frames = 100;
  cfg.output_frames = 50;
  actions::BufferSample s;
  s.action = actions::Action{Eigen::Vector3d(0.2, 0.0, 0.1), 0.0};
  s.gen_time = gen_time;
  s.gen_pose = geom::Pose::from_translation(v * gen_time, 0, 0);

  cfg.gen_source = GenPoseSource::kLogged;
  const auto logged =
      Stabilizer(cfg, std::make_shared<ConstantVelocityPosePredictor>())
          .stabilize(s, history, exec_time);
  cfg.gen_source = GenPoseSource::kWindowLookup;
  const auto window =
      Stabilizer(cfg, std::make_shared<ConstantVelocityPosePredictor>())
          .stabilize(s, history, exec_time);
  CHECK((logged.action.position - window.action.position).norm() < 1e-9);
  // both compensate the 16-sample platform advance
  const double expected_shift = -v * 16.0 / f;
  CHECK(logged.offset.delta.translation().x() ==
        doctest::Approx(expected_shift).epsilon(1e-6));
}

TEST_CASE("configured latency beyond the horizon raises") {
  StabilizerConfig cfg;
  cfg.enabled = true;
  cfg.latency = 1.0;  // 200 steps at 200 Hz, horizon is only 25
  cfg.pose_frequency = 200.0;
  cfg.input_frames = 50;
  cfg.output_frames = 25;
  const Stabilizer stab(cfg,
                        std::make_shared<ConstantVelocityPosePredictor>());
  std::vector<pred::PoseSample> history;
  for (int i = 0; i <= 400; ++i) {
    history.push_back({i * 0.005, geom::Pose::identity()});
  }
  actions::BufferSample s;
  s.gen_time = 1.9;
  s.gen_pose = geom::Pose::identity();
  CHECK_THROWS_AS(stab.stabilize(s, history, 2.0), IndexOutOfRangeError);
}
