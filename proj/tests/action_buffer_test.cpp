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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "armstab/csv.hpp"
#include "armstab/errors.hpp"
#include "testutil.hpp"

using namespace armstab;
using namespace armstab::actions;

namespace {

constexpr double kPeriod = 0.2;

Action at(double x, double y = 0.0, double z = 0.0, double grip = 0.0) {
  return Action{Eigen::Vector3d(x, y, z), grip};
}

// Smooth, clearly non-constant trajectory on the step grid.
Action smooth(std::int64_t step) {
  const double s = static_cast<double>(step);
  return at(0.05 * s, 0.3 * std::sin(0.4 * s), 0.1 * std::cos(0.25 * s));
}

ActionChunk make_chunk(double obs_time, std::vector<Action> actions,
                       double t_inf = 0.0) {
  ActionChunk c;
  c.obs_time = obs_time;
  c.inference_duration = t_inf;
  c.step_period = kPeriod;
  c.gen_time = obs_time;
  c.gen_pose = geom::Pose::identity();
  c.actions = std::move(actions);
  return c;
}

// Buffer pre-filled with the smooth trajectory for steps 1..n via one chunk.
ActionBuffer smooth_buffer(int n) {
  ActionBuffer buf(0.0, kPeriod);
  std::vector<Action> a;
  for (int j = 1; j <= n; ++j) a.push_back(smooth(j));
  buf.merge_chunk(make_chunk(0.0, a), 0.0, EnsembleConfig{});
  return buf;
}

}  // namespace

TEST_CASE("first merge copies the chunk with exponential weights") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  std::vector<Action> a;
  for (int j = 1; j <= 8; ++j) a.push_back(at(0.1 * j, -0.05 * j, 0.01 * j, 0.5));
  const ActionChunk chunk = make_chunk(0.0, a, 0.2);
  buf.merge_chunk(chunk, chunk.available_time(), cfg);

  REQUIRE(buf.first_step() == 1);
  REQUIRE(buf.last_step() == 8);
  for (int j = 1; j <= 8; ++j) {
    const BufferEntry& e = buf.entry(j);
    CHECK((e.action.position - a[j - 1].position).norm() == 0.0);
    CHECK(e.action.gripper == a[j - 1].gripper);
    CHECK(e.weight == doctest::Approx(std::exp(-1.0 * j)).epsilon(1e-12));
  }
}

TEST_CASE("re-merging the same chunk keeps values and doubles weights") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  std::vector<Action> a;
  for (int j = 1; j <= 8; ++j) a.push_back(smooth(j));
  const ActionChunk chunk = make_chunk(0.0, a, 0.2);
  buf.merge_chunk(chunk, chunk.available_time(), cfg);
  buf.merge_chunk(chunk, chunk.available_time(), cfg);
  for (int j = 1; j <= 8; ++j) {
    const BufferEntry& e = buf.entry(j);
    CHECK((e.action.position - smooth(j).position).norm() < 1e-15);
    CHECK(e.weight == doctest::Approx(2.0 * std::exp(-1.0 * j)).epsilon(1e-12));
  }
}

TEST_CASE("normalized blend of one overlapping step") {
  // Buffer holds (0,0,0) at weight e^-1; an incoming (0.1,0,0) at the same
  // step with the same weight must land exactly in the middle.
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  buf.merge_chunk(make_chunk(0.0, {at(0.0)}), 0.0, cfg);
  REQUIRE(buf.entry(1).weight == doctest::Approx(std::exp(-1.0)));

  buf.ensemble_merge(make_chunk(0.0, {at(0.1)}), 1, 1, cfg);
  CHECK(buf.entry(1).action.position.x() == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(buf.entry(1).weight ==
        doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("literal additive update shrinks actions toward zero") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  cfg.normalized_update = false;
  buf.merge_chunk(make_chunk(0.0, {at(1.0)}), 0.0, cfg);
  // First contribution is copied either way.
  CHECK(buf.entry(1).action.position.x() == doctest::Approx(1.0));
  buf.ensemble_merge(make_chunk(0.0, {at(1.0)}), 1, 1, cfg);
  // w_old + w_new < 1, so the literal form contracts the value.
  const double w = std::exp(-1.0);
  CHECK(buf.entry(1).action.position.x() ==
        doctest::Approx(w * 1.0 + w * 1.0).epsilon(1e-12));
  CHECK(buf.entry(1).action.position.x() < 1.0);
}

TEST_CASE("alignment: exact timestamp match") {
  ActionBuffer buf = smooth_buffer(12);
  EnsembleConfig cfg;
  std::vector<Action> a;
  for (int j = 0; j < 6; ++j) a.push_back(smooth(4 + j));
  // Chunk claims obs at step 3, so chunk steps 4.. match buffer steps 4..
  const ActionChunk chunk = make_chunk(3 * kPeriod, a);
  CHECK(buf.align_chunk(chunk, 4, cfg) == 4);
}

TEST_CASE("alignment recovers every shift in the search window") {
  // The chunk's actions are copied from the trajectory s steps behind their
  // nominal grid slots (the policy lagging/leading by s); alignment must
  // report t_u = t2 + s so that u_{t_u+k} lands on buffer step t2+k.
  EnsembleConfig cfg;
  const std::int64_t d0 = 5;  // chunk obs step
  const std::int64_t t2 = 6;
  for (int s = -3; s <= 3; ++s) {
    ActionBuffer buf = smooth_buffer(16);
    std::vector<Action> a;
    for (std::int64_t j = 1; j <= 8; ++j) a.push_back(smooth(d0 + j - s));
    const ActionChunk chunk = make_chunk(static_cast<double>(d0) * kPeriod, a);
    const std::int64_t t_u = buf.align_chunk(chunk, t2, cfg);
    CHECK(t_u == t2 + s);
    // Merging at the recovered alignment keeps the buffer on-trajectory.
    buf.ensemble_merge(chunk, t_u, t2, cfg);
    for (std::int64_t step = t2; step <= buf.last_step(); ++step) {
      CHECK((buf.entry(step).action.position - smooth(step).position).norm() <
            1e-12);
    }
  }
}

TEST_CASE("alignment ties break toward the timestamp") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  std::vector<Action> constant(10, at(0.25, 0.25, 0.25));
  buf.merge_chunk(make_chunk(0.0, constant), 0.0, cfg);
  const ActionChunk chunk =
      make_chunk(2 * kPeriod, {constant.begin(), constant.begin() + 6});
  CHECK(buf.align_chunk(chunk, 5, cfg) == 5);
}

TEST_CASE("alignment with no overlap raises and merge falls back") {
  ActionBuffer buf = smooth_buffer(4);
  buf.advance(12 * kPeriod);  // buffer fully executed, entries pruned
  EnsembleConfig cfg;
  std::vector<Action> a{at(1.0), at(1.1)};
  const ActionChunk chunk = make_chunk(30 * kPeriod, a);
  CHECK_THROWS_AS(buf.align_chunk(chunk, 33, cfg), EmptyOverlapError);
  // merge_chunk falls back to timestamp alignment.
  buf.merge_chunk(chunk, chunk.obs_time, cfg);
  CHECK(buf.entry(31).action.position.x() == doctest::Approx(1.0));
}

TEST_CASE("interpolation endpoints, midpoint, quarter") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  buf.merge_chunk(make_chunk(0.0, {at(0.0), at(0.1)}), 0.0, cfg);

  CHECK(buf.interpolate(1 * kPeriod).position.x() == 0.0);
  CHECK(buf.interpolate(2 * kPeriod).position.x() == doctest::Approx(0.1));
  CHECK(buf.interpolate(1.5 * kPeriod).position.x() ==
        doctest::Approx(0.05).epsilon(1e-12));
  CHECK(buf.interpolate(1.25 * kPeriod).position.x() ==
        doctest::Approx(0.025).epsilon(1e-12));
  CHECK_THROWS_AS(buf.interpolate(0.5 * kPeriod), OutOfRangeError);
  CHECK_THROWS_AS(buf.interpolate(2.5 * kPeriod), OutOfRangeError);
}

TEST_CASE("interpolation is continuous at step boundaries") {
  ActionBuffer buf = smooth_buffer(10);
  for (int s = 2; s <= 9; ++s) {
    const double t = s * kPeriod;
    const auto left = buf.interpolate(t - 1e-7);
    const auto exact = buf.interpolate(t);
    const auto right = buf.interpolate(t + 1e-7);
    CHECK((left.position - exact.position).norm() < 1e-5);
    CHECK((right.position - exact.position).norm() < 1e-5);
  }
}

TEST_CASE("advance cursor arithmetic and clamping") {
  ActionBuffer buf = smooth_buffer(10);
  CHECK(buf.exec_cursor() == 1);

  buf.advance(0.0);  // before the first step
  CHECK(buf.exec_cursor() == 1);

  buf.advance(0.5);  // mid-buffer: ceil(0.5 / 0.2) = 3
  CHECK(buf.exec_cursor() == 3);

  buf.advance(100.0);  // past the end
  CHECK(buf.exec_cursor() == buf.last_step() + 1);
}

TEST_CASE("executed entries are retained for alignment history") {
  ActionBuffer buf = smooth_buffer(16);
  EnsembleConfig cfg;
  buf.advance(8 * kPeriod);
  CHECK(buf.exec_cursor() == 8);
  // History behind the cursor is still there (within the retention window).
  CHECK(buf.first_step() <= 5);
  // A chunk overlapping executed steps can still align against them.
  std::vector<Action> a;
  for (int j = 0; j < 8; ++j) a.push_back(smooth(5 + j));
  const ActionChunk chunk = make_chunk(4 * kPeriod, a);
  CHECK(buf.align_chunk(chunk, 8, cfg) == 8);
}

TEST_CASE("weight ledger sums individual contributions") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  std::map<std::int64_t, double> expected;
  for (int k = 0; k < 6; ++k) {
    std::vector<Action> a;
    for (int j = 1; j <= 8; ++j) a.push_back(smooth(k + j));
    const ActionChunk chunk = make_chunk(k * kPeriod, a, 0.2);
    buf.merge_chunk(chunk, chunk.available_time(), cfg);
    const std::int64_t t2 = buf.step_at_or_after(chunk.available_time());
    for (int j = 1; j <= 8; ++j) {
      const std::int64_t slot = k + j;  // aligned by construction
      if (slot >= t2) expected[slot] += std::exp(-1.0 * j);
    }
  }
  for (const auto& [slot, w] : expected) {
    if (slot < buf.first_step() || slot > buf.last_step()) continue;
    CHECK(buf.entry(slot).weight == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("buffered values stay inside the contributors' envelope") {
  Rng rng(5);
  EnsembleConfig cfg;
  ActionBuffer buf(0.0, kPeriod);
  std::map<std::int64_t, std::pair<double, double>> envelope;  // x channel
  for (int k = 0; k < 20; ++k) {
    std::vector<Action> a;
    const double base = rng.uniform(-1.0, 1.0);
    for (int j = 1; j <= 6; ++j) a.push_back(at(base + 0.01 * j));
    const ActionChunk chunk = make_chunk(k * kPeriod, a, 0.2);
    const std::int64_t t2 = buf.step_at_or_after(chunk.available_time());
    const std::int64_t d0 =
        static_cast<std::int64_t>(std::llround(chunk.obs_time / kPeriod));
    buf.ensemble_merge(chunk, t2, t2, cfg);  // timestamp alignment
    for (int j = 1; j <= 6; ++j) {
      const std::int64_t slot = t2 + (d0 + j) - t2;
      const double x = a[static_cast<std::size_t>(j - 1)].position.x();
      auto it = envelope.find(slot);
      if (it == envelope.end()) {
        envelope[slot] = {x, x};
      } else {
        it->second.first = std::min(it->second.first, x);
        it->second.second = std::max(it->second.second, x);
      }
    }
  }
  for (std::int64_t s = buf.first_step(); s <= buf.last_step(); ++s) {
    const auto it = envelope.find(s);
    if (it == envelope.end()) continue;
    const double x = buf.entry(s).action.position.x();
    CHECK(x >= it->second.first - 1e-12);
    CHECK(x <= it->second.second + 1e-12);
  }
}

TEST_CASE("fuzz: no backtracking under random merge/advance interleavings") {
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng(1000 + trial);
    ActionBuffer buf(0.0, kPeriod);
    EnsembleConfig cfg;
    double now = 0.0;
    std::int64_t prev_cursor = std::numeric_limits<std::int64_t>::min();
    std::map<std::int64_t, Eigen::Vector3d> frozen;
    for (int op = 0; op < 30; ++op) {
      if (rng.uniform() < 0.5) {
        const double obs = now - rng.uniform(0.0, 0.4);
        const auto m_a = 2 + static_cast<int>(rng.uniform_int(0, 6));
        const std::int64_t obs_step =
            static_cast<std::int64_t>(std::llround(obs / kPeriod));
        std::vector<Action> a;
        for (int j = 1; j <= m_a; ++j) a.push_back(smooth(obs_step + j));
        const ActionChunk chunk =
            make_chunk(obs_step * kPeriod, a, rng.uniform(0.0, 0.3));
        buf.merge_chunk(chunk, std::max(chunk.available_time(), now), cfg);
      } else {
        now += rng.uniform(0.0, 0.5);
        buf.advance(now);
      }
      if (buf.empty()) continue;
      CHECK(buf.exec_cursor() >= prev_cursor);
      prev_cursor = buf.exec_cursor();
      // Values strictly behind the cursor never change once frozen.
      for (std::int64_t s = buf.first_step();
           s < std::min(buf.exec_cursor(), buf.last_step() + 1); ++s) {
        const Eigen::Vector3d v = buf.entry(s).action.position;
        const auto it = frozen.find(s);
        if (it == frozen.end()) {
          frozen[s] = v;
        } else {
          CHECK((it->second - v).norm() == 0.0);
        }
      }
    }
  }
}

TEST_CASE("gap between chunks is filled with zero-weight holds") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  buf.merge_chunk(make_chunk(0.0, {at(1.0), at(2.0)}), 0.0, cfg);
  // Next chunk starts far past the buffer end.
  buf.merge_chunk(make_chunk(5 * kPeriod, {at(5.0)}), 5 * kPeriod, cfg);
  CHECK(buf.last_step() == 6);
  CHECK(buf.entry(3).weight == 0.0);
  CHECK(buf.entry(4).weight == 0.0);
  CHECK(buf.entry(3).action.position.x() == doctest::Approx(2.0));  // hold
  CHECK(buf.entry(6).action.position.x() == doctest::Approx(5.0));
}

TEST_CASE("chunk validation") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  ActionChunk empty = make_chunk(0.0, {});
  CHECK_THROWS_AS(buf.merge_chunk(empty, 0.0, cfg), ValidationError);
  ActionChunk bad_grip = make_chunk(0.0, {at(0, 0, 0, 1.5)});
  CHECK_THROWS_AS(buf.merge_chunk(bad_grip, 0.0, cfg), ValidationError);
  ActionChunk wrong_period = make_chunk(0.0, {at(0)});
  wrong_period.step_period = 0.1;
  CHECK_THROWS_AS(buf.ensemble_merge(wrong_period, 0, 0, cfg), ValidationError);
}

TEST_CASE("buffer CSV dump schema") {
  ActionBuffer buf(0.0, kPeriod);
  EnsembleConfig cfg;
  buf.merge_chunk(make_chunk(0.0, {at(0.5, 0.25, 0.125, 1.0)}), 0.0, cfg);
  std::ostringstream out;
  buf.dump_csv(out);
  CHECK(out.str() ==
        "step_index,time,x,y,z,gripper,weight\n"
        "1,0.2,0.5,0.25,0.125,1," +
            csv::format_double(std::exp(-1.0)) + "\n");
}

TEST_CASE("manager serializes merge and sample across threads") {
  ActionManager mgr{EnsembleConfig{}};
  std::vector<Action> a;
  for (int j = 1; j <= 8; ++j) a.push_back(smooth(j));
  mgr.submit(make_chunk(0.0, a), 0.0);

  std::thread producer([&] {
    for (int k = 1; k < 50; ++k) {
      std::vector<Action> b;
      for (int j = 1; j <= 8; ++j) b.push_back(smooth(k + j));
      mgr.submit(make_chunk(k * kPeriod, b), k * kPeriod);
    }
  });
  double last = -1.0;
  for (int i = 0; i < 200; ++i) {
    mgr.advance(i * 0.004);
    try {
      const auto s = mgr.sample(i * 0.004 + kPeriod);
      CHECK(std::isfinite(s.action.position.x()));
      last = s.action.position.x();
    } catch (const OutOfRangeError&) {
    }
  }
  producer.join();
  CHECK(last != -1.0);
}

TEST_CASE("alignment can be told to ignore executed steps") {
  EnsembleConfig cfg;
  cfg.match_executed_steps = false;
  ActionBuffer buf = smooth_buffer(16);
  buf.advance(10 * kPeriod);  // steps < 10 executed
  // a short chunk whose search window only ever reaches executed steps
  std::vector<Action> a;
  for (int j = 0; j < 2; ++j) a.push_back(smooth(5 + j));
  const ActionChunk chunk = make_chunk(4 * kPeriod, a);
  CHECK_THROWS_AS(buf.align_chunk(chunk, 5, cfg), EmptyOverlapError);
  // the default mode aligns against the retained history just fine
  EnsembleConfig on;
  CHECK(buf.align_chunk(chunk, 5, on) == 5);
}
