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

#include <cmath>

#include "armstab/errors.hpp"

namespace armstab::stab {

namespace {

// Index snap for latency * frequency products that land on the grid.
constexpr double kIndexSnap = 1e-9;

int floor_index(double x) {
  return static_cast<int>(std::floor(x + kIndexSnap));
}

int ceil_index(double x) {
  return static_cast<int>(std::ceil(x - kIndexSnap));
}

const geom::Pose& past_at(const pred::RelativePoseSeq& past, int steps_back) {
  // past.poses holds offsets -l0..-1, oldest first.
  const auto l0 = static_cast<int>(past.size());
  return past.poses[static_cast<std::size_t>(l0 - steps_back)];
}

const geom::Pose& future_at(const pred::RelativePoseSeq& predicted,
                            int steps_forward) {
  return predicted.poses[static_cast<std::size_t>(steps_forward - 1)];
}

}  // namespace

Offset offset_from_relative(const CompensationContext& ctx,
                            const geom::Pose& rel_gen,
                            const geom::Pose& rel_exec) {
  const geom::Pose motion = geom::compose(geom::inverse(rel_gen), rel_exec);
  const geom::Pose& e = ctx.extrinsics.transform;
  return Offset{geom::compose(geom::inverse(e),
                              geom::compose(geom::inverse(motion), e))};
}

Offset compute_offset(const CompensationContext& ctx,
                      const pred::RelativePoseSeq& past,
                      const pred::RelativePoseSeq& predicted) {
  if (ctx.latency < 0.0 || ctx.generation_lag < 0.0 ||
      ctx.pose_frequency <= 0.0) {
    throw ValidationError("compensation context must have non-negative lags "
                          "and a positive pose frequency");
  }
  const int j_gen = ceil_index(ctx.generation_lag * ctx.pose_frequency);
  const int j_exec = floor_index(ctx.latency * ctx.pose_frequency);
  if (j_gen > static_cast<int>(past.size())) {
    throw IndexOutOfRangeError(
        "past window does not reach " + std::to_string(j_gen) + " steps back");
  }
  if (j_exec > static_cast<int>(predicted.size())) {
    throw IndexOutOfRangeError("predicted window does not reach " +
                               std::to_string(j_exec) + " steps forward");
  }
  const geom::Pose rel_gen =
      j_gen == 0 ? geom::Pose::identity() : past_at(past, j_gen);
  const geom::Pose rel_exec =
      j_exec == 0 ? geom::Pose::identity() : future_at(predicted, j_exec);
  return offset_from_relative(ctx, rel_gen, rel_exec);
}

actions::Action compensate(const actions::Action& a, const Offset& off) {
  actions::Action out;
  out.position = geom::transform_point(off.delta, a.position);
  out.gripper = a.gripper;
  return out;
}

pred::RelativePoseSeq LearnedPosePredictor::predict(
    const pred::RelativePoseSeq& past, int l1) const {
  if (l1 != model_.config().output_frames) {
    throw DimensionMismatchError(
        "requested horizon does not match the trained model");
  }
  return model_.forward(past);
}

Stabilizer::Stabilizer(const StabilizerConfig& cfg,
                       std::shared_ptr<const PosePredictor> predictor)
    : cfg_(cfg), predictor_(std::move(predictor)) {
  if (cfg_.enabled && !predictor_) {
    throw ValidationError("an enabled stabilizer needs a pose predictor");
  }
  if (cfg_.latency < 0.0 || cfg_.pose_frequency <= 0.0) {
    throw ValidationError("stabilizer latency must be >= 0 and pose frequency "
                          "positive");
  }
}

StabilizedAction Stabilizer::stabilize(
    const actions::BufferSample& sample,
    std::span<const pred::PoseSample> history, double exec_time) const {
  StabilizedAction out;
  if (!cfg_.enabled) {
    out.action = sample.action;
    out.offset = Offset{geom::Pose::identity()};
    return out;
  }
  if (history.empty()) {
    throw InsufficientHistoryError("no pose samples available yet");
  }
  // The newest available sample anchors the window.
  const pred::PoseSample& base = history.back();
  const pred::RelativePoseSeq past = pred::build_input(
      history, base.time, cfg_.input_frames, cfg_.pose_frequency);
  const pred::RelativePoseSeq predicted =
      predictor_->predict(past, cfg_.output_frames);

  CompensationContext ctx;
  ctx.extrinsics = cfg_.extrinsics;
  ctx.latency = cfg_.latency;
  ctx.pose_frequency = cfg_.pose_frequency;
  ctx.generation_lag = std::max(0.0, exec_time - sample.gen_time);

  const int j_exec = floor_index(ctx.latency * ctx.pose_frequency);
  if (j_exec > static_cast<int>(predicted.size())) {
    throw IndexOutOfRangeError("configured latency exceeds the prediction "
                               "horizon");
  }
  const geom::Pose rel_exec =
      j_exec == 0 ? geom::Pose::identity() : future_at(predicted, j_exec);

  geom::Pose rel_gen;
  if (cfg_.gen_source == GenPoseSource::kLogged) {
    rel_gen = geom::relative(base.pose, sample.gen_pose);
  } else {
    // The generation lag must be re-anchored at the window base: the base
    // sample itself lags execution by the system latency, so indexing the
    // full generation-to-execution interval would overshoot by that latency.
    const double base_lag = std::max(0.0, base.time - sample.gen_time);
    const int j_gen = ceil_index(base_lag * ctx.pose_frequency);
    if (j_gen > static_cast<int>(past.size())) {
      throw IndexOutOfRangeError("generation lag exceeds the past window");
    }
    rel_gen = j_gen == 0 ? geom::Pose::identity() : past_at(past, j_gen);
  }

  out.offset = offset_from_relative(ctx, rel_gen, rel_exec);
  out.action = compensate(sample.action, out.offset);
  out.predicted_exec_pose = geom::compose(base.pose, rel_exec);
  out.base_pose = base.pose;
  out.base_time = base.time;
  return out;
}

}  // namespace armstab::stab
