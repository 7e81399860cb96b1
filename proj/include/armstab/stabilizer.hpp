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

#ifndef ARMSTAB_STABILIZER_HPP_
#define ARMSTAB_STABILIZER_HPP_

#include <memory>
#include <span>

#include "armstab/action_buffer.hpp"
#include "armstab/geometry.hpp"
#include "armstab/predictor.hpp"

namespace armstab::stab {

/// Everything needed to turn relative platform motion into an action
/// correction for one action.
struct CompensationContext {
  geom::Extrinsics extrinsics;
  double latency = 0.0;         // total system latency (s), estimated online
  double pose_frequency = 200.0;
  double generation_lag = 0.0;  // execution time - generation time of A_tau
};

/// Rigid correction applied to actions in the arm frame.
struct Offset {
  geom::Pose delta;
};

/// Core algebra: given the relative platform pose at the action's generation
/// time and the (predicted) relative pose at its execution time, the
/// correction is extrinsics^-1 * (rel_gen^-1 * rel_exec)^-1 * extrinsics.
/// rel_gen^-1 * rel_exec is the platform motion from generation to execution;
/// the conjugation expresses its inverse in the arm frame.
Offset offset_from_relative(const CompensationContext& ctx,
                            const geom::Pose& rel_gen,
                            const geom::Pose& rel_exec);

/// Window-lookup form: rel_gen comes from `past` at ceil(generation_lag * f)
/// steps back, rel_exec from `predicted` at floor(latency * f) steps forward.
/// Offset 0 on either side is the identity (the base pose itself).
/// Throws IndexOutOfRangeError when a window does not cover its offset.
Offset compute_offset(const CompensationContext& ctx,
                      const pred::RelativePoseSeq& past,
                      const pred::RelativePoseSeq& predicted);

/// Applies the rigid correction to the action position; the gripper channel
/// passes through untouched.
actions::Action compensate(const actions::Action& a, const Offset& off);

/// Where the stabilizer takes the generation-time relative pose from.
enum class GenPoseSource {
  /// The platform pose logged with the observation that produced the action
  /// (blended across contributing chunks by the action buffer).
  kLogged,
  /// Looked up in the current prediction window's past segment at
  /// ceil(generation_lag * f) steps back. Algebraically equivalent for an
  /// exact pose stream, but quantized to the pose grid.
  kWindowLookup,
};

struct StabilizerConfig {
  geom::Extrinsics extrinsics;
  double latency = 0.0;
  double pose_frequency = 200.0;
  int input_frames = 200;   // l0
  int output_frames = 100;  // l1
  GenPoseSource gen_source = GenPoseSource::kLogged;
  bool enabled = true;
};

/// Short-horizon platform motion predictor interface. Implementations:
/// the learned model, the analytic constant-velocity baseline, and the
/// simulator's ground-truth oracle (test/calibration only).
class PosePredictor {
 public:
  virtual ~PosePredictor() = default;
  virtual pred::RelativePoseSeq predict(const pred::RelativePoseSeq& past,
                                        int l1) const = 0;
};

class LearnedPosePredictor : public PosePredictor {
 public:
  explicit LearnedPosePredictor(pred::PredictorModel model)
      : model_(std::move(model)) {}
  pred::RelativePoseSeq predict(const pred::RelativePoseSeq& past,
                                int l1) const override;
  const pred::PredictorModel& model() const { return model_; }

 private:
  pred::PredictorModel model_;
};

class ConstantVelocityPosePredictor : public PosePredictor {
 public:
  pred::RelativePoseSeq predict(const pred::RelativePoseSeq& past,
                                int l1) const override {
    return pred::constant_velocity_baseline(past, l1);
  }
};

/// Result of stabilizing one action, with the intermediate quantities the
/// per-tick trace logs.
struct StabilizedAction {
  actions::Action action;
  Offset offset;
  geom::Pose predicted_exec_pose;  // absolute predicted platform pose
  geom::Pose base_pose;            // platform pose the window is anchored at
  double base_time = 0.0;
};

/// Converts buffered actions into executed actions: interpolate -> build the
/// relative-pose window -> predict -> compute the offset -> compensate.
/// Holds no mutable state; one call per control tick.
class Stabilizer {
 public:
  Stabilizer(const StabilizerConfig& cfg,
             std::shared_ptr<const PosePredictor> predictor);

  const StabilizerConfig& config() const { return cfg_; }

  /// `history` must contain the pose samples available to the stabilizer in
  /// ascending time order; the newest sample anchors the prediction window.
  /// `exec_time` is when the action will take physical effect.
  StabilizedAction stabilize(const actions::BufferSample& sample,
                             std::span<const pred::PoseSample> history,
                             double exec_time) const;

 private:
  StabilizerConfig cfg_;
  std::shared_ptr<const PosePredictor> predictor_;
};

}  // namespace armstab::stab

#endif  // ARMSTAB_STABILIZER_HPP_
