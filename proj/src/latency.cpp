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

#include <cmath>

#include "armstab/csv.hpp"
#include "armstab/errors.hpp"

namespace armstab::calib {

namespace {
constexpr double kDegenerateMotion = 1e-6;  // meters over the whole dwell
}

Eigen::Vector2d project_marker(const CameraModel& camera,
                               const Eigen::Vector3d& world_point) {
  const Eigen::Vector3d pc =
      geom::transform_point(geom::inverse(camera.pose), world_point);
  if (pc.z() <= 0.0) {
    throw BehindCameraError("marker is behind the camera (Z <= 0)");
  }
  return {camera.fx * pc.x() / pc.z() + camera.cx,
          camera.fy * pc.y() / pc.z() + camera.cy};
}

StabilityMetric score_candidate(double dt, const HoldRunner& runner,
                                const LatencySearchConfig& cfg) {
  if (!(cfg.dwell > 0.0)) {
    throw ValidationError("latency search dwell must be positive");
  }
  const HoldTrace trace = runner(dt);
  if (trace.marker_px.size() != trace.platform_translation.size() ||
      trace.marker_px.size() < 2) {
    throw ValidationError("hold trace must pair pixel and platform samples "
                          "and span at least two ticks");
  }
  double marker_sum = 0.0;
  double platform_sum = 0.0;
  for (std::size_t i = 1; i < trace.marker_px.size(); ++i) {
    marker_sum += (trace.marker_px[i] - trace.marker_px[i - 1]).norm();
    platform_sum +=
        (trace.platform_translation[i] - trace.platform_translation[i - 1])
            .norm();
  }
  if (platform_sum < kDegenerateMotion) {
    throw DegenerateMotionError(
        "platform motion too small for a meaningful velocity ratio");
  }
  return StabilityMetric{dt, marker_sum / platform_sum};
}

LatencyEstimate linear_search(const HoldRunner& runner,
                              const LatencySearchConfig& cfg) {
  if (!(cfg.min_latency >= 0.0) || !(cfg.min_latency < cfg.max_latency) ||
      !(cfg.step > 0.0)) {
    throw ValidationError("latency search grid must satisfy 0 <= min < max "
                          "and step > 0");
  }
  LatencyEstimate est;
  bool found = false;
  double best = 0.0;
  std::size_t degenerate = 0;
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double dt = cfg.min_latency + static_cast<double>(k) * cfg.step;
    if (dt > cfg.max_latency + 1e-12) break;
    grid.push_back(dt);
  }
  for (const double dt : grid) {
    StabilityMetric metric;
    try {
      metric = score_candidate(dt, runner, cfg);
    } catch (const DegenerateMotionError&) {
      ++degenerate;
      continue;
    }
    est.curve.push_back(metric);
    if (!found || metric.ratio < best) {  // strict <: ties keep the smaller dt
      found = true;
      best = metric.ratio;
      est.delta_t = dt;
    }
  }
  if (!found) {
    throw AllDegenerateError("every latency candidate was degenerate (" +
                             std::to_string(degenerate) + " of " +
                             std::to_string(grid.size()) + ")");
  }
  return est;
}

void write_curve_csv(const std::filesystem::path& path,
                     const LatencyEstimate& estimate) {
  csv::Writer w(path, "delta_t,ratio");
  for (const auto& m : estimate.curve) {
    w.row({m.candidate, m.ratio});
  }
}

}  // namespace armstab::calib
