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

#include "armstab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "armstab/csv.hpp"
#include "armstab/errors.hpp"

namespace armstab::sim {

namespace {

constexpr double kTimeEps = 1e-9;

bool is_integer_multiple(double value, double base) {
  const double q = value / base;
  return std::abs(q - std::round(q)) < 1e-6;
}

calib::CameraModel default_camera(const Eigen::Vector3d& marker_start) {
  // 1.5 m back along -y, optical axis (+Z) pointing along world +y so the
  // marker sits near the image center with positive depth.
  calib::CameraModel cam;
  Eigen::Matrix3d r;
  r.col(0) = Eigen::Vector3d(1.0, 0.0, 0.0);   // camera X -> world x
  r.col(1) = Eigen::Vector3d(0.0, 0.0, -1.0);  // camera Y -> world -z
  r.col(2) = Eigen::Vector3d(0.0, 1.0, 0.0);   // camera Z -> world y
  cam.pose = geom::Pose(marker_start + Eigen::Vector3d(0.0, -1.5, 0.0),
                        Eigen::Quaterniond(r));
  return cam;
}

}  // namespace

pred::RelativePoseSeq OraclePosePredictor::predict(
    const pred::RelativePoseSeq& past, int l1) const {
  const geom::Pose base = motion_->pose_at(past.base_time);
  pred::RelativePoseSeq out;
  out.base_time = past.base_time;
  out.frequency = past.frequency;
  out.poses.reserve(static_cast<std::size_t>(l1));
  const double period = 1.0 / past.frequency;
  for (int j = 1; j <= l1; ++j) {
    out.poses.push_back(geom::relative(
        base, motion_->pose_at(past.base_time + static_cast<double>(j) * period)));
  }
  return out;
}

actions::ActionChunk oracle_policy_infer(const OraclePolicyConfig& policy,
                                         const ArmConfig& arm, double obs_time,
                                         const geom::Pose& logged_pose,
                                         const Eigen::Vector3d& ee_base,
                                         const Eigen::Vector3d& target_base) {
  if (policy.action_horizon < 1 || policy.rate <= 0.0) {
    throw ValidationError("policy horizons and rate must be positive");
  }
  actions::ActionChunk chunk;
  chunk.obs_time = obs_time;
  chunk.inference_duration = policy.inference_latency;
  chunk.step_period = 1.0 / policy.rate;
  chunk.gen_time = obs_time;
  chunk.gen_pose = logged_pose;
  const double step_len = policy.speed_limit * chunk.step_period;
  Eigen::Vector3d pos = ee_base;
  chunk.actions.reserve(static_cast<std::size_t>(policy.action_horizon));
  for (int j = 0; j < policy.action_horizon; ++j) {
    const Eigen::Vector3d d = target_base - pos;
    const double dist = d.norm();
    pos = dist <= step_len ? target_base
                           : Eigen::Vector3d(pos + d * (step_len / dist));
    pos = pos.cwiseMax(arm.workspace_min).cwiseMin(arm.workspace_max);
    chunk.actions.push_back(actions::Action{pos, 0.0});
  }
  return chunk;
}

ScenarioRunner::ScenarioRunner(const ScenarioConfig& cfg)
    : ScenarioRunner(cfg, nullptr) {}

ScenarioRunner::ScenarioRunner(
    const ScenarioConfig& cfg,
    std::shared_ptr<const stab::PosePredictor> predictor)
    : cfg_(cfg),
      manager_(cfg.ensemble),
      sensor_rng_(Rng::derive(cfg.seed, 1)),
      ee_base_(cfg.initial_ee) {
  if (cfg_.control_rate <= 0.0 || cfg_.duration < 0.0) {
    throw ValidationError("control rate must be positive, duration >= 0");
  }
  if (cfg_.sensor.frequency < cfg_.control_rate ||
      !is_integer_multiple(cfg_.sensor.frequency, cfg_.control_rate)) {
    throw ValidationError("pose frequency must be an integer multiple of the "
                          "control rate");
  }
  if (!is_integer_multiple(cfg_.control_rate, cfg_.policy.rate)) {
    throw ValidationError("policy step period must be a multiple of the "
                          "control tick");
  }
  if (std::abs(cfg_.stabilizer.pose_frequency - cfg_.sensor.frequency) > 1e-9) {
    throw ValidationError("stabilizer pose_frequency must match the sensor");
  }

  const double total = [&] {
    const double warmup =
        static_cast<double>(cfg_.stabilizer.input_frames) /
            cfg_.stabilizer.pose_frequency +
        cfg_.sensor.latency + 0.1;
    return std::ceil(warmup * cfg_.control_rate - kTimeEps) / cfg_.control_rate;
  }();
  mission_start_ = total;
  total_ticks_ = static_cast<std::int64_t>(
      std::llround((mission_start_ + cfg_.duration) * cfg_.control_rate));

  motion_ = std::make_shared<PlatformMotion>(
      cfg_.motion, mission_start_ + cfg_.duration, Rng::derive(cfg_.seed, 2));

  const bool needs_predictor = cfg_.execution == ExecutionMode::kManaged &&
                               cfg_.stabilizer.enabled;
  if (needs_predictor) {
    if (predictor) {
      predictor_ = std::move(predictor);
    } else {
      switch (cfg_.predictor) {
        case PredictorKind::kOracle:
          predictor_ = std::make_shared<OraclePosePredictor>(motion_);
          break;
        case PredictorKind::kConstantVelocity:
          predictor_ = std::make_shared<stab::ConstantVelocityPosePredictor>();
          break;
        case PredictorKind::kLearned: {
          if (cfg_.checkpoint.empty()) {
            throw ValidationError("learned predictor requires a checkpoint");
          }
          auto model = pred::PredictorModel::load(cfg_.checkpoint);
          if (model.config().input_frames != cfg_.stabilizer.input_frames ||
              model.config().output_frames != cfg_.stabilizer.output_frames) {
            throw ValidationError(
                "checkpoint window lengths do not match the stabilizer");
          }
          predictor_ =
              std::make_shared<stab::LearnedPosePredictor>(std::move(model));
          break;
        }
      }
    }
    stabilizer_.emplace(cfg_.stabilizer, predictor_);
  }

  pixel_rng_ = Rng(Rng::derive(cfg_.seed, 3));
  const double period = 1.0 / cfg_.policy.rate;
  const int n = std::max(
      1, static_cast<int>(std::ceil(cfg_.policy.inference_latency / period -
                                    1e-9)));
  policy_cadence_ = static_cast<double>(n) * period;
  next_obs_ = mission_start_;

  const Eigen::Vector3d marker_start =
      geom::transform_point(arm_mount_pose(mission_start_), ee_base_);
  target_world_ =
      cfg_.task == TaskKind::kEndHold ? marker_start : cfg_.reach_target;
  camera_ = cfg_.camera ? *cfg_.camera : default_camera(marker_start);
}

Eigen::Vector3d ScenarioRunner::clamp_workspace(const Eigen::Vector3d& p) const {
  return p.cwiseMax(cfg_.arm.workspace_min).cwiseMin(cfg_.arm.workspace_max);
}

geom::Pose ScenarioRunner::arm_mount_pose(double t) const {
  return geom::compose(motion_->pose_at(t), cfg_.arm.extrinsics.transform);
}

geom::Pose ScenarioRunner::measured_pose_at(double t) const {
  const double half = 0.5 / cfg_.sensor.frequency;
  auto it = std::lower_bound(
      history_.begin(), history_.end(), t,
      [](const pred::PoseSample& s, double v) { return s.time < v; });
  if (it == history_.end()) {
    if (history_.empty()) throw InsufficientHistoryError("no pose samples yet");
    --it;
  } else if (it != history_.begin()) {
    auto prev = std::prev(it);
    if (t - prev->time <= it->time - t) it = prev;
  }
  if (std::abs(it->time - t) > half + kTimeEps) {
    throw InsufficientHistoryError("no pose sample near requested time");
  }
  return it->pose;
}

std::span<const pred::PoseSample> ScenarioRunner::available_history(
    double t) const {
  while (available_count_ < history_.size() &&
         history_[available_count_].time + cfg_.sensor.latency <= t + kTimeEps) {
    ++available_count_;
  }
  return {history_.data(), available_count_};
}

void ScenarioRunner::process_sensor(double t) {
  const double period = 1.0 / cfg_.sensor.frequency;
  while (next_meas_ <= t + kTimeEps) {
    geom::Pose pose = motion_->pose_at(next_meas_);
    if (cfg_.sensor.noise_sigma > 0.0) {
      const Eigen::Vector3d nt(sensor_rng_.normal(0.0, cfg_.sensor.noise_sigma),
                               sensor_rng_.normal(0.0, cfg_.sensor.noise_sigma),
                               sensor_rng_.normal(0.0, cfg_.sensor.noise_sigma));
      Eigen::Matrix<double, 6, 1> f;
      f.head<3>() = pose.translation() + nt;
      f.tail<3>() =
          Eigen::Vector3d(sensor_rng_.normal(0.0, cfg_.sensor.noise_sigma),
                          sensor_rng_.normal(0.0, cfg_.sensor.noise_sigma),
                          sensor_rng_.normal(0.0, cfg_.sensor.noise_sigma));
      const geom::Pose noise_rot = pred::decode_feature(
          (Eigen::Matrix<double, 6, 1>() << 0, 0, 0, f.tail<3>()).finished());
      pose = geom::Pose(f.head<3>(),
                        (pose.rotation() * noise_rot.rotation()).normalized());
    }
    history_.push_back(pred::PoseSample{next_meas_, pose});
    next_meas_ += period;
  }
}

void ScenarioRunner::begin_mission(double t) {
  mission_begun_ = true;
  if (cfg_.execution == ExecutionMode::kManaged) {
    // Hold the current position from the first mission tick on: a synthetic
    // chunk whose step grid starts one period early, so the buffer covers t.
    actions::ActionChunk seed;
    seed.obs_time = t - 1.0 / cfg_.policy.rate;
    seed.inference_duration = 0.0;
    seed.step_period = 1.0 / cfg_.policy.rate;
    seed.gen_time = t;
    seed.gen_pose = measured_pose_at(t);
    seed.actions.assign(static_cast<std::size_t>(cfg_.policy.action_horizon),
                        actions::Action{ee_base_, 0.0});
    pending_chunks_.push_front(seed);
  }
}

void ScenarioRunner::process_policy_and_merge(double t) {
  if (t + kTimeEps >= next_obs_) {
    const double g = next_obs_;
    const geom::Pose mount = arm_mount_pose(g);
    const Eigen::Vector3d target_base =
        geom::transform_point(geom::inverse(mount), target_world_);
    pending_chunks_.push_back(oracle_policy_infer(cfg_.policy, cfg_.arm, g,
                                                  measured_pose_at(g), ee_base_,
                                                  target_base));
    next_obs_ += policy_cadence_;
  }
  if (cfg_.execution == ExecutionMode::kManaged) {
    manager_.advance(t);
    while (!pending_chunks_.empty() &&
           pending_chunks_.front().available_time() <= t + kTimeEps) {
      manager_.submit(pending_chunks_.front(),
                      pending_chunks_.front().available_time());
      pending_chunks_.pop_front();
    }
  } else {
    while (!pending_chunks_.empty() &&
           pending_chunks_.front().available_time() <= t + kTimeEps) {
      if (!latest_raw_chunk_ ||
          pending_chunks_.front().obs_time > latest_raw_chunk_->obs_time) {
        latest_raw_chunk_ = pending_chunks_.front();
      }
      pending_chunks_.pop_front();
    }
  }
}

void ScenarioRunner::process_control(double t) {
  const double exec_time = t + cfg_.arm.actuation_lag;
  TraceRow row;
  row.time = t;
  row.delta_t.setZero();
  row.delta_r.setZero();
  row.true_pose = motion_->pose_at(exec_time);
  row.predicted = row.true_pose;
  row.raw = actions::Action{ee_base_, 0.0};
  row.comp = row.raw;

  if (cfg_.execution == ExecutionMode::kManaged) {
    actions::BufferSample sample;
    try {
      sample = manager_.sample(t);
    } catch (const OutOfRangeError&) {
      trace_staging_ = row;
      return;  // buffer does not cover t yet: hold
    }
    row.raw = sample.action;
    if (stabilizer_) {
      const stab::StabilizedAction res =
          stabilizer_->stabilize(sample, available_history(t), exec_time);
      row.comp = res.action;
      row.predicted = res.predicted_exec_pose;
      row.delta_t = res.offset.delta.translation();
      row.delta_r = pred::encode_pose(res.offset.delta).tail<3>();
      pending_commands_.push_back(PendingCommand{exec_time, res.action});
    } else {
      row.comp = sample.action;
      pending_commands_.push_back(PendingCommand{exec_time, sample.action});
    }
  } else if (latest_raw_chunk_) {
    const actions::ActionChunk& c = *latest_raw_chunk_;
    const auto j = static_cast<std::int64_t>(
        std::floor((t - c.obs_time) / c.step_period + kTimeEps));
    if (j >= 1) {
      const auto idx = static_cast<std::size_t>(
          std::min<std::int64_t>(j, static_cast<std::int64_t>(c.actions.size())) - 1);
      row.raw = c.actions[idx];
      row.comp = row.raw;
      pending_commands_.push_back(PendingCommand{exec_time, row.raw});
    }
  }
  trace_staging_ = row;
}

void ScenarioRunner::process_actuation(double t) {
  while (!pending_commands_.empty() &&
         pending_commands_.front().due <= t + kTimeEps) {
    ee_base_ = clamp_workspace(pending_commands_.front().action.position);
    pending_commands_.pop_front();
  }
}

void ScenarioRunner::record_metrics(double t) {
  const Eigen::Vector3d marker =
      geom::transform_point(arm_mount_pose(t), ee_base_);
  TraceRow row = trace_staging_.value_or(TraceRow{
      t, actions::Action{ee_base_, 0.0}, Eigen::Vector3d::Zero(),
      Eigen::Vector3d::Zero(), actions::Action{ee_base_, 0.0},
      motion_->pose_at(t), motion_->pose_at(t), marker});
  row.marker = marker;
  trace_.push_back(row);
  trace_staging_.reset();

  Eigen::Vector2d px = calib::project_marker(camera_, marker);
  if (cfg_.pixel_noise_sigma > 0.0) {
    px.x() += pixel_rng_.normal(0.0, cfg_.pixel_noise_sigma);
    px.y() += pixel_rng_.normal(0.0, cfg_.pixel_noise_sigma);
  }
  marker_px_.push_back(px);

  if (cfg_.task == TaskKind::kReach) {
    const double dist = (marker - target_world_).norm();
    if (dist <= cfg_.reach_threshold) {
      hold_accum_ += 1.0 / cfg_.control_rate;
      if (hold_accum_ + kTimeEps >= cfg_.reach_hold_time) reach_success_ = true;
    } else {
      hold_accum_ = 0.0;
    }
  }
}

void ScenarioRunner::step() {
  const double t = tick_time(tick_);
  process_sensor(t);
  if (t + kTimeEps >= mission_start_) {
    if (!mission_begun_) begin_mission(t);
    process_policy_and_merge(t);
    process_control(t);
    process_actuation(t);
    record_metrics(t);
  } else {
    process_actuation(t);
  }
  ++tick_;
}

bool ScenarioRunner::done() const { return tick_ >= total_ticks_; }

ScenarioReport ScenarioRunner::run(
    const std::optional<std::filesystem::path>& trace_path) {
  while (!done()) step();

  ScenarioReport report;
  report.mission_start = mission_start_;
  report.target_world = target_world_;
  report.ticks = static_cast<int>(trace_.size());
  if (!trace_.empty()) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& r : trace_) mean += r.marker;
    mean /= static_cast<double>(trace_.size());
    double var = 0.0;
    double target_dist = 0.0;
    for (const auto& r : trace_) {
      var += (r.marker - mean).squaredNorm();
      target_dist += (r.marker - target_world_).norm();
    }
    report.marker_mean = mean;
    report.end_hold_stddev =
        std::sqrt(var / static_cast<double>(trace_.size()));
    report.mean_target_distance =
        target_dist / static_cast<double>(trace_.size());
  }
  report.success =
      cfg_.task == TaskKind::kEndHold ? true : reach_success_;
  report.tick_times.reserve(trace_.size());
  report.marker_world.reserve(trace_.size());
  report.platform_translation.reserve(trace_.size());
  for (const auto& r : trace_) {
    report.tick_times.push_back(r.time);
    report.marker_world.push_back(r.marker);
    report.platform_translation.push_back(
        motion_->pose_at(r.time).translation());
  }
  report.marker_px = marker_px_;

  if (trace_path) {
    csv::Writer w(*trace_path,
                  "tick_time,raw_x,raw_y,raw_z,raw_gripper,"
                  "delta_tx,delta_ty,delta_tz,delta_rx,delta_ry,delta_rz,"
                  "comp_x,comp_y,comp_z,comp_gripper,"
                  "pred_tx,pred_ty,pred_tz,pred_qw,pred_qx,pred_qy,pred_qz,"
                  "true_tx,true_ty,true_tz,true_qw,true_qx,true_qy,true_qz,"
                  "marker_x,marker_y,marker_z");
    for (const auto& r : trace_) {
      const auto pred_row = geom::to_row(r.predicted);
      const auto true_row = geom::to_row(r.true_pose);
      w.row({r.time,
             r.raw.position.x(), r.raw.position.y(), r.raw.position.z(),
             r.raw.gripper,
             r.delta_t.x(), r.delta_t.y(), r.delta_t.z(),
             r.delta_r.x(), r.delta_r.y(), r.delta_r.z(),
             r.comp.position.x(), r.comp.position.y(), r.comp.position.z(),
             r.comp.gripper,
             pred_row[0], pred_row[1], pred_row[2], pred_row[3], pred_row[4],
             pred_row[5], pred_row[6],
             true_row[0], true_row[1], true_row[2], true_row[3], true_row[4],
             true_row[5], true_row[6],
             r.marker.x(), r.marker.y(), r.marker.z()});
    }
    report.trace_path = *trace_path;
  }
  return report;
}

calib::HoldRunner make_hold_runner(const ScenarioConfig& base, double dwell) {
  ScenarioConfig cfg = base;
  cfg.task = TaskKind::kEndHold;
  cfg.duration = dwell;
  return [cfg](double candidate_latency) {
    ScenarioConfig run_cfg = cfg;
    run_cfg.stabilizer.latency = candidate_latency;
    ScenarioRunner runner(run_cfg);
    const ScenarioReport report = runner.run();
    calib::HoldTrace trace;
    trace.marker_px = report.marker_px;
    trace.platform_translation = report.platform_translation;
    return trace;
  };
}

Heatmap make_heatmap(const std::vector<Eigen::Vector3d>& markers,
                     double bin_size) {
  if (bin_size <= 0.0) throw ValidationError("heatmap bin size must be > 0");
  Heatmap h;
  h.bin_size = bin_size;
  if (markers.empty()) return h;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& m : markers) mean += m;
  mean /= static_cast<double>(markers.size());
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> bins;
  for (const auto& m : markers) {
    const auto bx = static_cast<std::int64_t>(
        std::floor((m.x() - mean.x()) / bin_size));
    const auto by = static_cast<std::int64_t>(
        std::floor((m.y() - mean.y()) / bin_size));
    ++bins[{bx, by}];
  }
  for (const auto& [key, count] : bins) {
    h.cells.push_back(Heatmap::Cell{key.first, key.second, count});
  }
  return h;
}

void write_heatmap_csv(const std::filesystem::path& path, const Heatmap& h) {
  csv::Writer w(path, "x_bin,y_bin,count");
  for (const auto& c : h.cells) {
    w.raw_row({csv::format_int(c.x_bin), csv::format_int(c.y_bin),
               csv::format_int(c.count)});
  }
}

}  // namespace armstab::sim
