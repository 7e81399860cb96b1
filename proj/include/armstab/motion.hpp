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

#ifndef ARMSTAB_MOTION_HPP_
#define ARMSTAB_MOTION_HPP_

#include <cstdint>
#include <vector>

#include "armstab/geometry.hpp"

namespace armstab::sim {

enum class MotionKind {
  kStatic,
  kLeadscrew,      // triangle wave along the axis at constant speed
  kSinusoid,       // a * sin(2*pi*f*t + phase) along the axis
  kFilteredShake,  // low-pass filtered seeded white noise along the axis
  kUavDrift,       // 3-axis Ornstein-Uhlenbeck drift
};

/// Platform translation profile. All kinds are translation-only; rotational
/// platform wobble is out of scope for the simulated rigs.
struct MotionProfile {
  MotionKind kind = MotionKind::kStatic;

  Eigen::Vector3d axis{1.0, 0.0, 0.0};

  // leadscrew
  double speed = 0.12;  // m/s
  double stroke = 0.3;  // m, one-way travel before reversing

  // sinusoid
  double amplitude = 0.05;  // m
  double frequency = 0.5;   // Hz
  double phase = 0.0;       // rad

  // filtered_shake
  double bandwidth = 1.0;  // Hz, 2nd-order low-pass cutoff
  double rms = 0.03;       // m, target standard deviation

  // uav_drift
  double drift_rms = 0.02;        // m per axis
  double correlation_time = 1.0;  // s

  // 0 means: derive from the scenario seed.
  std::uint64_t seed = 0;
};

/// A motion profile prepared for a concrete run: the seeded kinds synthesize
/// their noise track once, covering [0, duration], and interpolate it.
class PlatformMotion {
 public:
  PlatformMotion(const MotionProfile& profile, double duration,
                 std::uint64_t fallback_seed = 1);

  geom::Pose pose_at(double t) const;
  const MotionProfile& profile() const { return profile_; }

 private:
  Eigen::Vector3d closed_form(double t) const;

  MotionProfile profile_;
  double track_rate_ = 200.0;
  std::vector<Eigen::Vector3d> track_;  // seeded kinds only
};

/// One-shot convenience for tests and tools; synthesizes the track up to t
/// for the seeded kinds, so prefer PlatformMotion in loops.
geom::Pose platform_pose(const MotionProfile& profile, double t);

}  // namespace armstab::sim

#endif  // ARMSTAB_MOTION_HPP_
