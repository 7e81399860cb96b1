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

#include "armstab/latency.hpp"

#include <doctest.h>

#include <cmath>

#include "armstab/errors.hpp"
#include "armstab/sim.hpp"
#include "testutil.hpp"

using namespace armstab;
using namespace armstab::calib;

namespace {

sim::ScenarioConfig hold_scenario(double sensor_latency) {
  sim::ScenarioConfig cfg;
  cfg.task = sim::TaskKind::kEndHold;
  cfg.motion.kind = sim::MotionKind::kSinusoid;
  cfg.motion.amplitude = 0.05;
  cfg.motion.frequency = 0.5;
  cfg.sensor.latency = sensor_latency;
  cfg.stabilizer.enabled = true;
  cfg.predictor = sim::PredictorKind::kOracle;
  return cfg;
}

}  // namespace

TEST_CASE("pinhole projection") {
  CameraModel cam;  // identity pose, +Z forward
  cam.fx = 500.0;
  cam.fy = 500.0;
  cam.cx = 320.0;
  cam.cy = 240.0;

  // point on the optical axis lands at the principal point
  const auto c = project_marker(cam, {0.0, 0.0, 2.0});
  CHECK(c.x() == doctest::Approx(320.0));
  CHECK(c.y() == doctest::Approx(240.0));

  const auto p = project_marker(cam, {0.1, 0.0, 1.0});
  CHECK(p.x() == doctest::Approx(370.0).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(240.0).epsilon(1e-12));

  CHECK_THROWS_AS(project_marker(cam, {0.0, 0.0, 0.0}), BehindCameraError);
  CHECK_THROWS_AS(project_marker(cam, {0.0, 0.0, -1.0}), BehindCameraError);

  // a posed camera: 90 deg yaw, the +x world axis becomes the optical axis
  CameraModel posed = cam;
  posed.pose = geom::Pose::from_axis_angle(Eigen::Vector3d::UnitY(), M_PI / 2);
  const auto q = project_marker(posed, {2.0, 0.0, 0.0});
  CHECK(q.x() == doctest::Approx(320.0).epsilon(1e-9));
}

TEST_CASE("stationary platform makes the ratio degenerate") {
  sim::ScenarioConfig cfg = hold_scenario(0.0);
  cfg.motion.kind = sim::MotionKind::kStatic;
  LatencySearchConfig search;
  search.dwell = 2.0;
  const auto runner = sim::make_hold_runner(cfg, search.dwell);
  CHECK_THROWS_AS(score_candidate(0.1, runner, search), DegenerateMotionError);
  CHECK_THROWS_AS(linear_search(runner, search), AllDegenerateError);
}

TEST_CASE("ratio is near zero at the true latency and grows off it") {
  const double injected = 0.1;  // 0.08 sensor + 0.02 actuation
  sim::ScenarioConfig cfg = hold_scenario(0.08);
  LatencySearchConfig search;
  search.dwell = 3.0;
  const auto runner = sim::make_hold_runner(cfg, search.dwell);

  const auto at_true = score_candidate(injected, runner, search);
  const auto off_by_02 = score_candidate(injected + 0.2, runner, search);
  CHECK(at_true.ratio < 0.05);
  CHECK(off_by_02.ratio > at_true.ratio);
}

TEST_CASE("linear search recovers an injected latency on the grid") {
  sim::ScenarioConfig cfg = hold_scenario(0.28);  // total 0.3
  LatencySearchConfig search;
  search.dwell = 3.0;
  const auto runner = sim::make_hold_runner(cfg, search.dwell);
  const LatencyEstimate est = linear_search(runner, search);
  CHECK(est.delta_t == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(est.curve.size() == 21);

  // curve minimum sits at the estimate
  double best = est.curve.front().ratio;
  double best_dt = est.curve.front().candidate;
  for (const auto& m : est.curve) {
    if (m.ratio < best) {
      best = m.ratio;
      best_dt = m.candidate;
    }
  }
  CHECK(best_dt == est.delta_t);
}

TEST_CASE("zero injected latency estimates to zero") {
  sim::ScenarioConfig cfg = hold_scenario(0.0);
  cfg.arm.actuation_lag = 0.0;
  LatencySearchConfig search;
  search.dwell = 2.0;
  const auto runner = sim::make_hold_runner(cfg, search.dwell);
  CHECK(linear_search(runner, search).delta_t == 0.0);
}

TEST_CASE("ties break toward the smaller candidate") {
  LatencySearchConfig search;
  search.min_latency = 0.0;
  search.max_latency = 0.05;
  search.step = 0.025;
  search.dwell = 1.0;
  // synthetic runner: identical traces for every candidate
  const HoldRunner runner = [](double) {
    HoldTrace t;
    for (int i = 0; i < 10; ++i) {
      t.marker_px.emplace_back(i * 1.0, 0.0);
      t.platform_translation.emplace_back(i * 0.01, 0.0, 0.0);
    }
    return t;
  };
  const LatencyEstimate est = linear_search(runner, search);
  CHECK(est.delta_t == 0.0);
  CHECK(est.curve.size() == 3);
  CHECK(est.curve[0].ratio == est.curve[2].ratio);
}

TEST_CASE("ratio is insensitive to the platform amplitude") {
  // With an imperfect (constant-velocity) predictor the residual scales with
  // the motion, which is the point of using a ratio: doubling the amplitude
  // moves the score by well under 20 percent.
  sim::ScenarioConfig cfg = hold_scenario(0.08);
  cfg.predictor = sim::PredictorKind::kConstantVelocity;
  LatencySearchConfig search;
  search.dwell = 4.0;

  const auto r1 = score_candidate(
      0.1, sim::make_hold_runner(cfg, search.dwell), search);
  cfg.motion.amplitude = 0.1;
  const auto r2 = score_candidate(
      0.1, sim::make_hold_runner(cfg, search.dwell), search);
  CHECK(r1.ratio > 1e-4);  // imperfect prediction leaves residual
  CHECK(std::abs(r2.ratio - r1.ratio) / r1.ratio < 0.2);
}

TEST_CASE("same seed gives an identical curve, different seed differs") {
  sim::ScenarioConfig cfg = hold_scenario(0.08);
  cfg.motion.kind = sim::MotionKind::kFilteredShake;
  cfg.seed = 21;
  LatencySearchConfig search;
  search.dwell = 2.0;
  search.max_latency = 0.2;
  const LatencyEstimate a =
      linear_search(sim::make_hold_runner(cfg, search.dwell), search);
  const LatencyEstimate b =
      linear_search(sim::make_hold_runner(cfg, search.dwell), search);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].ratio == b.curve[i].ratio);
    CHECK(a.curve[i].candidate == b.curve[i].candidate);
  }
}

TEST_CASE("curve CSV schema") {
  const auto dir = testutil::scratch_dir("latency_csv");
  LatencyEstimate est;
  est.delta_t = 0.025;
  est.curve = {{0.0, 0.5}, {0.025, 0.125}};
  write_curve_csv(dir / "curve.csv", est);
  CHECK(testutil::slurp(dir / "curve.csv") ==
        "delta_t,ratio\n0,0.5\n0.025,0.125\n");
}

TEST_CASE("search grid validation") {
  const HoldRunner runner = [](double) { return HoldTrace{}; };
  LatencySearchConfig bad;
  bad.min_latency = 0.4;
  bad.max_latency = 0.2;
  CHECK_THROWS_AS(linear_search(runner, bad), ValidationError);
  LatencySearchConfig bad2;
  bad2.step = 0.0;
  CHECK_THROWS_AS(linear_search(runner, bad2), ValidationError);
}
