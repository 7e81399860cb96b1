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

#include "armstab/motion.hpp"

#include <cmath>

#include "armstab/errors.hpp"
#include "armstab/rng.hpp"

namespace armstab::sim {

namespace {

void validate(const MotionProfile& p) {
  bool ok = true;
  switch (p.kind) {
    case MotionKind::kStatic:
      break;
    case MotionKind::kLeadscrew:
      ok = p.speed > 0.0 && p.speed <= 1.0 && p.stroke > 0.0;
      break;
    case MotionKind::kSinusoid:
      ok = p.amplitude >= 0.0 && p.frequency > 0.0 &&
           p.amplitude * 2.0 * M_PI * p.frequency <= 1.0;  // peak velocity
      break;
    case MotionKind::kFilteredShake:
      ok = p.bandwidth > 0.0 && p.rms >= 0.0 &&
           2.0 * M_PI * p.bandwidth * p.rms <= 1.0;
      break;
    case MotionKind::kUavDrift:
      ok = p.drift_rms >= 0.0 && p.correlation_time > 0.0;
      break;
  }
  if (!ok) {
    throw ValidationError("motion profile parameters out of physical bounds");
  }
}

// 2nd-order Butterworth low-pass (bilinear transform) applied in place.
void lowpass(std::vector<double>& x, double cutoff_hz, double sample_rate) {
  const double wc = std::tan(M_PI * cutoff_hz / sample_rate);
  const double k1 = std::sqrt(2.0) * wc;
  const double k2 = wc * wc;
  const double a0 = 1.0 + k1 + k2;
  const double b0 = k2 / a0;
  const double b1 = 2.0 * b0;
  const double b2 = b0;
  const double a1 = 2.0 * (k2 - 1.0) / a0;
  const double a2 = (1.0 - k1 + k2) / a0;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

}  // namespace

PlatformMotion::PlatformMotion(const MotionProfile& profile, double duration,
                               std::uint64_t fallback_seed)
    : profile_(profile) {
  validate(profile_);
  if (profile_.kind != MotionKind::kFilteredShake &&
      profile_.kind != MotionKind::kUavDrift) {
    return;
  }
  const std::uint64_t seed =
      profile_.seed != 0 ? profile_.seed : fallback_seed;
  const double horizon = std::max(duration, 0.0) + 2.0;
  const auto n = static_cast<std::size_t>(std::ceil(horizon * track_rate_)) + 2;
  track_.resize(n, Eigen::Vector3d::Zero());
  Rng rng(seed);

  if (profile_.kind == MotionKind::kFilteredShake) {
    // Filter lead-in is discarded so the track starts in steady state.
    const auto lead =
        static_cast<std::size_t>(std::ceil(4.0 / profile_.bandwidth * track_rate_));
    std::vector<double> noise(n + lead);
    for (double& v : noise) v = rng.normal();
    lowpass(noise, profile_.bandwidth, track_rate_);
    noise.erase(noise.begin(), noise.begin() + static_cast<std::ptrdiff_t>(lead));
    double mean = 0.0;
    for (double v : noise) mean += v;
    mean /= static_cast<double>(noise.size());
    double var = 0.0;
    for (double v : noise) var += (v - mean) * (v - mean);
    var /= static_cast<double>(noise.size());
    const double scale = var > 0.0 ? profile_.rms / std::sqrt(var) : 0.0;
    const Eigen::Vector3d axis = profile_.axis.normalized();
    for (std::size_t i = 0; i < n; ++i) {
      track_[i] = axis * ((noise[i] - mean) * scale);
    }
  } else {
    // Stationary Ornstein-Uhlenbeck per axis.
    const double dt = 1.0 / track_rate_;
    const double decay = std::exp(-dt / profile_.correlation_time);
    const double step_sigma =
        profile_.drift_rms * std::sqrt(1.0 - decay * decay);
    Eigen::Vector3d x(rng.normal(0.0, profile_.drift_rms),
                      rng.normal(0.0, profile_.drift_rms),
                      rng.normal(0.0, profile_.drift_rms));
    // Anchor at zero displacement at t=0, keep the process statistics after.
    const Eigen::Vector3d offset = x;
    for (std::size_t i = 0; i < n; ++i) {
      track_[i] = x - offset;
      for (int a = 0; a < 3; ++a) {
        x[a] = x[a] * decay + rng.normal(0.0, step_sigma);
      }
    }
  }
}

Eigen::Vector3d PlatformMotion::closed_form(double t) const {
  switch (profile_.kind) {
    case MotionKind::kStatic:
      return Eigen::Vector3d::Zero();
    case MotionKind::kLeadscrew: {
      const double cycle = 2.0 * profile_.stroke;
      const double ph = std::fmod(std::max(t, 0.0) * profile_.speed, cycle);
      const double x = ph < profile_.stroke ? ph : cycle - ph;
      return profile_.axis.normalized() * x;
    }
    case MotionKind::kSinusoid:
      return profile_.axis.normalized() *
             (profile_.amplitude *
              std::sin(2.0 * M_PI * profile_.frequency * t + profile_.phase));
    default:
      return Eigen::Vector3d::Zero();
  }
}

geom::Pose PlatformMotion::pose_at(double t) const {
  if (profile_.kind == MotionKind::kFilteredShake ||
      profile_.kind == MotionKind::kUavDrift) {
    const double x = std::max(t, 0.0) * track_rate_;
    const auto i0 = std::min(static_cast<std::size_t>(x), track_.size() - 2);
    const double lambda = std::min(x - static_cast<double>(i0), 1.0);
    return geom::Pose::from_translation((1.0 - lambda) * track_[i0] +
                                        lambda * track_[i0 + 1]);
  }
  return geom::Pose::from_translation(closed_form(t));
}

geom::Pose platform_pose(const MotionProfile& profile, double t) {
  if (t < 0.0) {
    throw ValidationError("platform pose requested for negative time");
  }
  return PlatformMotion(profile, t).pose_at(t);
}

}  // namespace armstab::sim
