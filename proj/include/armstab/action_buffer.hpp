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

#ifndef ARMSTAB_ACTION_BUFFER_HPP_
#define ARMSTAB_ACTION_BUFFER_HPP_

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <vector>

#include "armstab/geometry.hpp"

namespace armstab::actions {

/// End-effector position setpoint in the arm base frame, plus an optional
/// gripper channel in [0, 1].
struct Action {
  geom::PointBase position = geom::PointBase::Zero();
  double gripper = 0.0;
};

/// One policy inference result: m_a future actions at the policy step period.
/// Action j (1-based) is the setpoint for time obs_time + j * step_period.
///
/// gen_time / gen_pose snapshot the platform state the observation was taken
/// in; the stabilizer compensates relative to them. For ordinary policy
/// output gen_time == obs_time; they may differ for synthetic hold chunks
/// whose step grid is anchored one step early.
struct ActionChunk {
  double obs_time = 0.0;            // t1, anchors the step grid
  double inference_duration = 0.0;  // chunk becomes mergeable at t1 + this
  double step_period = 0.2;
  std::vector<Action> actions;
  double gen_time = 0.0;
  geom::Pose gen_pose;

  double available_time() const { return obs_time + inference_duration; }
};

/// Temporal-ensemble parameters.
struct EnsembleConfig {
  /// Exponential decay of new-chunk weights: action i of a chunk contributes
  /// weight exp(-alpha * i), i = 1..m_a. Newer observations dominate.
  double alpha = 1.0;
  /// Half-width m_s of the alignment search window around the timestamp
  /// match, in steps.
  int search_half_width = 3;
  /// Blend merged steps as a normalized weighted running average. When false,
  /// uses the literal additive update w_old*A + w_new*u, whose weights do not
  /// sum to one and therefore shrink actions on the first merges; kept only
  /// for side-by-side comparison.
  bool normalized_update = true;
  /// Let already-executed (retained) steps participate in the alignment
  /// overlap set.
  bool match_executed_steps = true;
};

struct BufferEntry {
  Action action;
  double weight = 0.0;  // accumulated ensemble weight; 0 = never merged
  geom::Pose gen_pose;  // weight-blended platform pose at generation
  double gen_time = 0.0;
};

/// interpolate() result carrying the blended generation metadata alongside
/// the action, for the stabilizer.
struct BufferSample {
  Action action;
  geom::Pose gen_pose;
  double gen_time = 0.0;
};

/// Time-indexed action buffer with accumulated ensemble weights.
///
/// Step s corresponds to time origin_time + s * step_period. Entries are
/// contiguous; exec_cursor is the next step to execute and never decreases,
/// so previously executed actions can never be rewritten (no backtracking).
/// A window of executed steps is retained behind the cursor so incoming
/// chunks can be aligned against recently executed actions.
class ActionBuffer {
 public:
  ActionBuffer(double origin_time, double step_period);

  double origin_time() const { return origin_time_; }
  double step_period() const { return step_period_; }
  bool empty() const { return entries_.empty(); }
  std::int64_t first_step() const { return first_step_; }
  std::int64_t last_step() const {
    return first_step_ + static_cast<std::int64_t>(entries_.size()) - 1;
  }
  std::int64_t exec_cursor() const { return exec_cursor_; }

  double time_at(std::int64_t step) const {
    return origin_time_ + static_cast<double>(step) * step_period_;
  }
  /// Smallest step with time >= t (snapped to the grid within 1e-9 steps).
  std::int64_t step_at_or_after(double t) const;

  const BufferEntry& entry(std::int64_t step) const;

  /// Similarity alignment: returns the chunk step index t_u whose alignment
  /// against buffer step t2 minimizes the mean action distance over the
  /// overlap, searched over t in [t2 - m_s, t2 + m_s]. Ties prefer the
  /// timestamp alignment (smallest |t - t2|), then the earlier candidate.
  /// Throws EmptyOverlapError when no candidate overlaps the buffer.
  std::int64_t align_chunk(const ActionChunk& chunk, std::int64_t t2,
                           const EnsembleConfig& cfg) const;

  /// Merges chunk actions into steps t2, t2+1, ... where chunk step t_u lines
  /// up with buffer step t2. Overlapping steps blend by ensemble weight; steps
  /// beyond the buffer end are appended verbatim; steps before exec_cursor are
  /// never touched.
  void ensemble_merge(const ActionChunk& chunk, std::int64_t t_u,
                      std::int64_t t2, const EnsembleConfig& cfg);

  /// align + merge with fallback to timestamp alignment when the similarity
  /// search has no overlap. Returns the chunk step used as t_u.
  std::int64_t merge_chunk(const ActionChunk& chunk, double arrival_time,
                           const EnsembleConfig& cfg);

  /// Linear interpolation between the neighboring steps; exact at step times.
  /// Throws OutOfRangeError outside [time(first_step), time(last_step)].
  Action interpolate(double tau) const;
  BufferSample sample(double tau) const;

  /// Moves exec_cursor to the first step not yet executed at `now` and prunes
  /// history beyond the alignment retention window.
  void advance(double now);

  void dump_csv(std::ostream& out) const;
  void dump_csv(const std::filesystem::path& path) const;

 private:
  std::int64_t chunk_first_step(const ActionChunk& chunk) const;
  void extend_to(std::int64_t step);

  double origin_time_;
  double step_period_;
  std::int64_t first_step_ = 0;
  std::int64_t exec_cursor_ = 0;
  std::vector<BufferEntry> entries_;
  std::int64_t max_chunk_len_ = 1;
  int retained_half_width_ = 3;
};

/// Serializes buffer access behind one lock: one context merges chunks while
/// another reads interpolated actions and advances the cursor.
class ActionManager {
 public:
  explicit ActionManager(const EnsembleConfig& cfg) : cfg_(cfg) {}

  /// Creates the buffer from the first chunk (origin = its obs_time).
  void submit(const ActionChunk& chunk, double arrival_time);
  void advance(double now);
  BufferSample sample(double tau) const;
  bool ready() const;
  /// Time of the last buffered step, if any.
  std::optional<double> coverage_end() const;
  const EnsembleConfig& config() const { return cfg_; }
  void dump_csv(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mutex_;
  EnsembleConfig cfg_;
  std::optional<ActionBuffer> buffer_;
};

}  // namespace armstab::actions

#endif  // ARMSTAB_ACTION_BUFFER_HPP_
