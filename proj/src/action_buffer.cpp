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

#include "armstab/action_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "armstab/csv.hpp"
#include "armstab/errors.hpp"

namespace armstab::actions {

namespace {

// Snap for time -> step conversions: times that land on the grid within this
// fraction of a step are treated as exact.
constexpr double kStepSnap = 1e-9;
// Score ties in the alignment argmin below this are resolved by the
// timestamp-preference rule instead of floating-point luck.
constexpr double kScoreTie = 1e-12;

void validate_chunk(const ActionChunk& chunk) {
  if (chunk.actions.empty()) {
    throw ValidationError("action chunk must contain at least one action");
  }
  if (!(chunk.step_period > 0.0)) {
    throw ValidationError("action chunk step_period must be positive");
  }
  if (chunk.inference_duration < 0.0) {
    throw ValidationError("action chunk inference_duration must be >= 0");
  }
  for (const auto& a : chunk.actions) {
    if (!a.position.allFinite() || !std::isfinite(a.gripper) ||
        a.gripper < 0.0 || a.gripper > 1.0) {
      throw ValidationError("action chunk contains a non-finite position or "
                            "gripper outside [0, 1]");
    }
  }
}

}  // namespace

ActionBuffer::ActionBuffer(double origin_time, double step_period)
    : origin_time_(origin_time), step_period_(step_period) {
  if (!(step_period > 0.0)) {
    throw ValidationError("buffer step_period must be positive");
  }
  exec_cursor_ = std::numeric_limits<std::int64_t>::min();
}

std::int64_t ActionBuffer::step_at_or_after(double t) const {
  const double x = (t - origin_time_) / step_period_;
  return static_cast<std::int64_t>(std::ceil(x - kStepSnap));
}

const BufferEntry& ActionBuffer::entry(std::int64_t step) const {
  if (empty() || step < first_step_ || step > last_step()) {
    throw IndexOutOfRangeError("buffer step " + std::to_string(step) +
                               " outside [" + std::to_string(first_step_) +
                               ", " + std::to_string(last_step()) + "]");
  }
  return entries_[static_cast<std::size_t>(step - first_step_)];
}

std::int64_t ActionBuffer::chunk_first_step(const ActionChunk& chunk) const {
  const double x = (chunk.obs_time - origin_time_) / step_period_;
  return static_cast<std::int64_t>(std::llround(x));
}

std::int64_t ActionBuffer::align_chunk(const ActionChunk& chunk,
                                       std::int64_t t2,
                                       const EnsembleConfig& cfg) const {
  validate_chunk(chunk);
  const std::int64_t d0 = chunk_first_step(chunk);
  const auto m_a = static_cast<std::int64_t>(chunk.actions.size());
  const std::int64_t ms = cfg.search_half_width;

  std::int64_t lo = first_step_;
  if (!cfg.match_executed_steps) lo = std::max(lo, exec_cursor_);
  const std::int64_t hi = empty() ? lo - 1 : last_step();

  bool found = false;
  double best_score = 0.0;
  std::int64_t best_t = t2;
  for (std::int64_t t = t2 - ms; t <= t2 + ms; ++t) {
    // Overlap set: k such that chunk step t+k exists and buffer step t2+k
    // holds a merged entry.
    const std::int64_t kmin = std::max(d0 + 1 - t, lo - t2);
    const std::int64_t kmax = std::min(d0 + m_a - t, hi - t2);
    double sum = 0.0;
    std::int64_t count = 0;
    for (std::int64_t k = kmin; k <= kmax; ++k) {
      const BufferEntry& e =
          entries_[static_cast<std::size_t>(t2 + k - first_step_)];
      if (e.weight <= 0.0) continue;  // placeholder, never merged
      const Action& u = chunk.actions[static_cast<std::size_t>(t + k - d0 - 1)];
      sum += (u.position - e.action.position).norm();
      ++count;
    }
    if (count == 0) continue;
    const double score = sum / static_cast<double>(count);
    if (!found || score < best_score - kScoreTie) {
      found = true;
      best_score = score;
      best_t = t;
    } else if (score <= best_score + kScoreTie) {
      const std::int64_t cur_off = std::llabs(t - t2);
      const std::int64_t best_off = std::llabs(best_t - t2);
      if (cur_off < best_off || (cur_off == best_off && t < best_t)) {
        best_score = std::min(best_score, score);
        best_t = t;
      }
    }
  }
  if (!found) {
    throw EmptyOverlapError("no alignment candidate overlaps the buffer");
  }
  return best_t;
}

void ActionBuffer::extend_to(std::int64_t step) {
  // Contiguity: fill any gap with zero-weight placeholders holding the last
  // merged value, so interpolation across them stays defined.
  const Action hold = entries_.empty() ? Action{} : entries_.back().action;
  while (last_step() < step) {
    BufferEntry e;
    e.action = hold;
    e.weight = 0.0;
    entries_.push_back(e);
  }
}

void ActionBuffer::ensemble_merge(const ActionChunk& chunk, std::int64_t t_u,
                                  std::int64_t t2, const EnsembleConfig& cfg) {
  validate_chunk(chunk);
  if (std::abs(chunk.step_period - step_period_) >
      kStepSnap * step_period_) {
    throw ValidationError("chunk step_period does not match the buffer");
  }
  const std::int64_t d0 = chunk_first_step(chunk);
  const auto m_a = static_cast<std::int64_t>(chunk.actions.size());
  max_chunk_len_ = std::max(max_chunk_len_, m_a);
  retained_half_width_ = std::max(retained_half_width_,
                                  std::max(cfg.search_half_width, 1));

  if (entries_.empty()) {
    first_step_ = std::max(t2, d0 + 1 + (t2 - t_u));
    exec_cursor_ = std::max(exec_cursor_, first_step_);
  }

  for (std::int64_t j = 1; j <= m_a; ++j) {
    // Chunk step d0 + j lands on buffer step t2 + (d0 + j - t_u).
    const std::int64_t s = t2 + d0 + j - t_u;
    if (s < t2 || s < exec_cursor_) continue;  // past steps stay frozen
    if (entries_.empty() && s > first_step_) extend_to(s - 1);
    if (!entries_.empty() && s > last_step()) extend_to(s);
    if (entries_.empty()) {
      entries_.push_back(BufferEntry{});
      first_step_ = s;
    }
    BufferEntry& e = entries_[static_cast<std::size_t>(s - first_step_)];
    const Action& u = chunk.actions[static_cast<std::size_t>(j - 1)];
    const double w_new = std::exp(-cfg.alpha * static_cast<double>(j));
    if (e.weight <= 0.0) {
      e.action = u;
      e.gen_pose = chunk.gen_pose;
      e.gen_time = chunk.gen_time;
      e.weight = w_new;
    } else if (cfg.normalized_update) {
      const double wsum = e.weight + w_new;
      e.action.position =
          (e.weight * e.action.position + w_new * u.position) / wsum;
      e.action.gripper = (e.weight * e.action.gripper + w_new * u.gripper) / wsum;
      e.gen_pose = geom::blend(e.gen_pose, e.weight, chunk.gen_pose, w_new);
      e.gen_time = (e.weight * e.gen_time + w_new * chunk.gen_time) / wsum;
      e.weight = wsum;
    } else {
      // Literal additive form; generation metadata stays a normalized blend
      // so it remains a time/pose.
      e.action.position = e.weight * e.action.position + w_new * u.position;
      e.action.gripper = e.weight * e.action.gripper + w_new * u.gripper;
      e.gen_pose = geom::blend(e.gen_pose, e.weight, chunk.gen_pose, w_new);
      e.gen_time = (e.weight * e.gen_time + w_new * chunk.gen_time) /
                   (e.weight + w_new);
      e.weight += w_new;
    }
  }
}

std::int64_t ActionBuffer::merge_chunk(const ActionChunk& chunk,
                                       double arrival_time,
                                       const EnsembleConfig& cfg) {
  const std::int64_t t2 = step_at_or_after(arrival_time);
  std::int64_t t_u = t2;
  if (!entries_.empty()) {
    try {
      t_u = align_chunk(chunk, t2, cfg);
    } catch (const EmptyOverlapError&) {
      t_u = t2;  // fall back to timestamp alignment
    }
  }
  ensemble_merge(chunk, t_u, t2, cfg);
  return t_u;
}

Action ActionBuffer::interpolate(double tau) const { return sample(tau).action; }

BufferSample ActionBuffer::sample(double tau) const {
  if (entries_.empty()) {
    throw OutOfRangeError("action buffer is empty");
  }
  const double x = (tau - origin_time_) / step_period_;
  auto t = static_cast<std::int64_t>(std::floor(x));
  double lambda = x - static_cast<double>(t);
  if (lambda < kStepSnap) {
    lambda = 0.0;
  } else if (lambda > 1.0 - kStepSnap) {
    ++t;
    lambda = 0.0;
  }
  if (t < first_step_ || t > last_step() ||
      (t == last_step() && lambda > 0.0)) {
    throw OutOfRangeError("interpolation time outside the buffered span");
  }
  const BufferEntry& a = entries_[static_cast<std::size_t>(t - first_step_)];
  if (lambda == 0.0) {
    return BufferSample{a.action, a.gen_pose, a.gen_time};
  }
  const BufferEntry& b = entries_[static_cast<std::size_t>(t + 1 - first_step_)];
  BufferSample s;
  s.action.position =
      (1.0 - lambda) * a.action.position + lambda * b.action.position;
  s.action.gripper =
      (1.0 - lambda) * a.action.gripper + lambda * b.action.gripper;
  s.gen_pose = geom::blend(a.gen_pose, 1.0 - lambda, b.gen_pose, lambda);
  s.gen_time = (1.0 - lambda) * a.gen_time + lambda * b.gen_time;
  return s;
}

void ActionBuffer::advance(double now) {
  if (entries_.empty()) return;
  const std::int64_t c =
      std::clamp(step_at_or_after(now), first_step_, last_step() + 1);
  exec_cursor_ = std::max(exec_cursor_, c);
  // Retain executed steps for alignment history, prune beyond the window.
  const std::int64_t keep_from =
      exec_cursor_ - (retained_half_width_ + max_chunk_len_);
  if (keep_from > first_step_) {
    const auto drop = static_cast<std::size_t>(
        std::min(keep_from, last_step()) - first_step_);
    entries_.erase(entries_.begin(),
                   entries_.begin() + static_cast<std::ptrdiff_t>(drop));
    first_step_ += static_cast<std::int64_t>(drop);
  }
}

void ActionBuffer::dump_csv(std::ostream& out) const {
  out << "step_index,time,x,y,z,gripper,weight\n";
  for (std::int64_t s = first_step_; s <= last_step() && !empty(); ++s) {
    const BufferEntry& e = entries_[static_cast<std::size_t>(s - first_step_)];
    out << csv::format_int(s) << ',' << csv::format_double(time_at(s)) << ','
        << csv::format_double(e.action.position.x()) << ','
        << csv::format_double(e.action.position.y()) << ','
        << csv::format_double(e.action.position.z()) << ','
        << csv::format_double(e.action.gripper) << ','
        << csv::format_double(e.weight) << '\n';
  }
}

void ActionBuffer::dump_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open buffer dump: " + path.string());
  dump_csv(out);
}

void ActionManager::submit(const ActionChunk& chunk, double arrival_time) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!buffer_) {
    buffer_.emplace(chunk.obs_time, chunk.step_period);
  }
  buffer_->merge_chunk(chunk, arrival_time, cfg_);
}

void ActionManager::advance(double now) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (buffer_) buffer_->advance(now);
}

BufferSample ActionManager::sample(double tau) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!buffer_) throw OutOfRangeError("no chunk has been merged yet");
  return buffer_->sample(tau);
}

bool ActionManager::ready() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return buffer_ && !buffer_->empty();
}

std::optional<double> ActionManager::coverage_end() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!buffer_ || buffer_->empty()) return std::nullopt;
  return buffer_->time_at(buffer_->last_step());
}

void ActionManager::dump_csv(const std::filesystem::path& path) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!buffer_) throw OutOfRangeError("no chunk has been merged yet");
  buffer_->dump_csv(path);
}

}  // namespace armstab::actions
