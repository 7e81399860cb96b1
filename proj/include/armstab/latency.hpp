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

#ifndef ARMSTAB_LATENCY_HPP_
#define ARMSTAB_LATENCY_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <vector>

#include "armstab/geometry.hpp"

namespace armstab::calib {

/// Grid for the pre-mission latency search.
struct LatencySearchConfig {
  double min_latency = 0.0;
  double max_latency = 0.5;
  double step = 0.025;  // five 200 Hz pose periods
  double dwell = 5.0;   // seconds of end-hold per candidate
};

/// Score of one candidate: summed marker pixel speed over summed platform
/// translational speed across the dwell. Lower is better; the ratio form
/// keeps the score insensitive to how vigorously the platform happened to
/// move during that dwell.
struct StabilityMetric {
  double candidate = 0.0;
  double ratio = 0.0;
};

struct LatencyEstimate {
  double delta_t = 0.0;
  std::vector<StabilityMetric> curve;
};

/// Fixed monocular third-view camera: pose of the camera frame in the world,
/// +Z optical axis, pinhole intrinsics.
struct CameraModel {
  geom::Pose pose;
  double fx = 600.0, fy = 600.0;
  double cx = 320.0, cy = 240.0;
};

/// Pinhole projection u = fx*X/Z + cx, v = fy*Y/Z + cy of a world point.
/// Throws BehindCameraError when the camera-frame depth is <= 0.
Eigen::Vector2d project_marker(const CameraModel& camera,
                               const Eigen::Vector3d& world_point);

/// Per-tick series from one end-hold dwell: the tracked marker in pixels and
/// the platform translation, sampled on the same clock.
struct HoldTrace {
  std::vector<Eigen::Vector2d> marker_px;
  std::vector<Eigen::Vector3d> platform_translation;
};

/// Runs one end-hold dwell with the stabilizer set to the given candidate
/// latency, from identical initial conditions each call.
using HoldRunner = std::function<HoldTrace(double candidate_latency)>;

/// Runs the scenario at candidate `dt` and evaluates the velocity ratio.
/// Throws DegenerateMotionError when the platform barely moved.
StabilityMetric score_candidate(double dt, const HoldRunner& runner,
                                const LatencySearchConfig& cfg);

/// Evaluates every grid point and returns the argmin; ties go to the smaller
/// candidate. Throws AllDegenerateError when no candidate produced a metric.
LatencyEstimate linear_search(const HoldRunner& runner,
                              const LatencySearchConfig& cfg);

void write_curve_csv(const std::filesystem::path& path,
                     const LatencyEstimate& estimate);

}  // namespace armstab::calib

#endif  // ARMSTAB_LATENCY_HPP_
