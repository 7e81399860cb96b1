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

#ifndef ARMSTAB_SIM_HPP_
#define ARMSTAB_SIM_HPP_

#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "armstab/action_buffer.hpp"
#include "armstab/geometry.hpp"
#include "armstab/latency.hpp"
#include "armstab/motion.hpp"
#include "armstab/predictor.hpp"
#include "armstab/rng.hpp"
#include "armstab/stabilizer.hpp"

namespace armstab::sim {

/// Simulated stand-in for the visual-SLAM pose stream.
struct PoseSensorConfig {
  double frequency = 200.0;  // Hz
  double noise_sigma = 0.0;  // m on translation, rad on rotation, per axis
  double latency = 0.0;      // s from measurement to availability
};

/// Kinematic arm: a commanded base-frame point is reached after a pure delay;
/// commands are clamped to the workspace box.
struct ArmConfig {
  geom::Extrinsics extrinsics;
  double actuation_lag = 0.02;  // s
  Eigen::Vector3d workspace_min{-0.1, -0.45, -0.05};
  Eigen::Vector3d workspace_max{0.7, 0.45, 0.5};
};

/// Synthetic chunk producer standing in for the policy network. Observes the
/// end effector and the task target in the arm base frame at the observation
/// time, then emits actions stepping toward the target at the speed limit.
/// Observing in the base frame *at observation time* is exactly what makes a
/// static-trained policy wrong on a moving base.
struct OraclePolicyConfig {
  int obs_horizon = 2;        // m_o (informational; latest obs drives actions)
  int action_horizon = 8;     // m_a
  double rate = 5.0;          // Hz, action step rate
  double inference_latency = 0.2;  // s until the chunk becomes available
  double speed_limit = 0.5;   // m/s along the line to the target
};

enum class TaskKind { kEndHold, kReach };

/// How actions reach the arm.
enum class ExecutionMode {
  /// Raw chunks executed directly at the policy step rate, newest chunk wins
  /// (the uncorrected baseline).
  kRawChunks,
  /// Action manager pipeline: ensemble merge + interpolation (+ stabilizer
  /// when enabled).
  kManaged,
};

enum class PredictorKind { kOracle, kLearned, kConstantVelocity };

struct ScenarioConfig {
  MotionProfile motion;
  PoseSensorConfig sensor;
  ArmConfig arm;
  OraclePolicyConfig policy;
  actions::EnsembleConfig ensemble;
  stab::StabilizerConfig stabilizer;
  ExecutionMode execution = ExecutionMode::kManaged;
  PredictorKind predictor = PredictorKind::kOracle;
  std::string checkpoint;  // learned predictor weights

  TaskKind task = TaskKind::kEndHold;
  double duration = 30.0;
  double control_rate = 50.0;
  std::uint64_t seed = 0;

  Eigen::Vector3d initial_ee{0.3, 0.0, 0.2};  // arm base frame
  double reach_threshold = 0.04;
  double reach_hold_time = 2.0;
  Eigen::Vector3d reach_target{0.42, 0.08, 0.26};  // world frame

  std::optional<calib::CameraModel> camera;  // auto-placed when unset
  double pixel_noise_sigma = 0.0;            // px, on the tracked marker
};

struct ScenarioReport {
  bool success = false;
  double end_hold_stddev = 0.0;  // scalar marker stddev about its mean (m)
  double mean_target_distance = 0.0;
  Eigen::Vector3d marker_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d target_world = Eigen::Vector3d::Zero();
  double mission_start = 0.0;
  int ticks = 0;
  std::filesystem::path trace_path;

  std::vector<double> tick_times;
  std::vector<Eigen::Vector3d> marker_world;
  std::vector<Eigen::Vector2d> marker_px;
  std::vector<Eigen::Vector3d> platform_translation;
};

/// Ground-truth future poses straight from the motion profile; used to
/// isolate compensation correctness from prediction error and to drive the
/// latency calibration in tests.
class OraclePosePredictor : public stab::PosePredictor {
 public:
  explicit OraclePosePredictor(std::shared_ptr<const PlatformMotion> motion)
      : motion_(std::move(motion)) {}
  pred::RelativePoseSeq predict(const pred::RelativePoseSeq& past,
                                int l1) const override;

 private:
  std::shared_ptr<const PlatformMotion> motion_;
};

/// One policy inference: actions stepping from the observed end effector
/// toward the observed target, clamped to the workspace.
actions::ActionChunk oracle_policy_infer(const OraclePolicyConfig& policy,
                                         const ArmConfig& arm, double obs_time,
                                         const geom::Pose& logged_pose,
                                         const Eigen::Vector3d& ee_base,
                                         const Eigen::Vector3d& target_base);

/// Deterministic virtual-time closed loop. Per-tick event order is fixed:
/// sensor samples, chunk merges, control, actuation, metrics. No wall-clock
/// reads anywhere.
class ScenarioRunner {
 public:
  explicit ScenarioRunner(const ScenarioConfig& cfg);
  ScenarioRunner(const ScenarioConfig& cfg,
                 std::shared_ptr<const stab::PosePredictor> predictor);

  /// Advances one control tick.
  void step();
  bool done() const;
  double now() const { return tick_time(tick_); }

  /// Runs to completion and summarizes; optionally writes the per-tick trace.
  ScenarioReport run(
      const std::optional<std::filesystem::path>& trace_path = std::nullopt);

  const ScenarioConfig& config() const { return cfg_; }
  double mission_start() const { return mission_start_; }
  const PlatformMotion& motion() const { return *motion_; }

 private:
  struct TraceRow {
    double time;
    actions::Action raw;
    Eigen::Vector3d delta_t;
    Eigen::Vector3d delta_r;
    actions::Action comp;
    geom::Pose predicted;
    geom::Pose true_pose;
    Eigen::Vector3d marker;
  };
  struct PendingCommand {
    double due;
    actions::Action action;
  };

  double tick_time(std::int64_t k) const {
    return static_cast<double>(k) / cfg_.control_rate;
  }
  Eigen::Vector3d clamp_workspace(const Eigen::Vector3d& p) const;
  geom::Pose arm_mount_pose(double t) const;  // platform pose * extrinsics
  geom::Pose measured_pose_at(double t) const;
  std::span<const pred::PoseSample> available_history(double t) const;
  void begin_mission(double t);
  void process_sensor(double t);
  void process_policy_and_merge(double t);
  void process_control(double t);
  void process_actuation(double t);
  void record_metrics(double t);

  ScenarioConfig cfg_;
  std::shared_ptr<const PlatformMotion> motion_;
  std::shared_ptr<const stab::PosePredictor> predictor_;
  std::optional<stab::Stabilizer> stabilizer_;
  actions::ActionManager manager_;

  Rng sensor_rng_;
  std::vector<pred::PoseSample> history_;
  mutable std::size_t available_count_ = 0;
  double next_meas_ = 0.0;

  double policy_cadence_ = 0.2;
  double next_obs_ = 0.0;
  std::deque<actions::ActionChunk> pending_chunks_;
  std::optional<actions::ActionChunk> latest_raw_chunk_;

  Eigen::Vector3d ee_base_;
  std::deque<PendingCommand> pending_commands_;

  std::int64_t tick_ = 0;
  std::int64_t total_ticks_ = 0;
  double mission_start_ = 0.0;
  bool mission_begun_ = false;
  Eigen::Vector3d target_world_ = Eigen::Vector3d::Zero();
  calib::CameraModel camera_;

  double hold_accum_ = 0.0;
  bool reach_success_ = false;
  std::vector<TraceRow> trace_;
  std::optional<TraceRow> trace_staging_;
  std::vector<Eigen::Vector2d> marker_px_;
  Rng pixel_rng_{0};
};

/// Runs duration=dwell end-hold copies of `base` at each candidate latency,
/// for calib::linear_search.
calib::HoldRunner make_hold_runner(const ScenarioConfig& base, double dwell);

/// 2-D histogram of marker world positions about their mean, written as
/// (x_bin, y_bin, count) rows; the bin index is floor((v - mean) / bin_size).
struct Heatmap {
  double bin_size = 0.002;
  struct Cell {
    std::int64_t x_bin, y_bin;
    std::int64_t count;
  };
  std::vector<Cell> cells;  // sorted by (x_bin, y_bin)
};
Heatmap make_heatmap(const std::vector<Eigen::Vector3d>& markers,
                     double bin_size);
void write_heatmap_csv(const std::filesystem::path& path, const Heatmap& h);

}  // namespace armstab::sim

#endif  // ARMSTAB_SIM_HPP_
