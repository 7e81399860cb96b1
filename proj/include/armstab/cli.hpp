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

#ifndef ARMSTAB_CLI_HPP_
#define ARMSTAB_CLI_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "armstab/config.hpp"
#include "armstab/latency.hpp"
#include "armstab/sim.hpp"

namespace armstab::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Scale preset: `paper` runs the full-rate configuration (200 Hz poses,
/// 1 s / 0.5 s windows), `desk` a reduced one that keeps test runtimes in
/// seconds. Explicit config keys always win over the preset.
enum class Profile { kPaper, kDesk };
Profile parse_profile(const std::string& name);

struct CommonOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  Profile profile = Profile::kPaper;
  std::string variant;            // ablation / heatmap variant filter
  std::optional<int> trials;      // overrides ablation.trials
  std::ostream* log = nullptr;    // defaults to std::cout
};

/// Builds a simulator scenario from a config file (profile fills defaults).
sim::ScenarioConfig scenario_from_config(const Config& cfg, Profile profile);
calib::LatencySearchConfig search_from_config(const Config& cfg);

/// The five ablation variants, in pipeline order.
enum class Variant {
  kBaseline,        // raw chunks, no manager, no stabilizer
  kManager,         // ensemble + interpolation, no compensation
  kStabilizerDt0,   // compensation with latency fixed to 0
  kStabilizerDt500, // compensation with latency fixed to 0.5 s
  kFull,            // compensation with the estimated latency
};
const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);
void apply_variant(sim::ScenarioConfig& cfg, Variant v, double estimated_dt);

/// Command entry points. They throw ValidationError for bad input (exit 2)
/// and other armstab::Error/std exceptions for runtime failures (exit 1);
/// on success they write their artifacts plus a manifest.json and return 0.
int cmd_train_predictor(const CommonOptions& opts);
int cmd_calibrate(const CommonOptions& opts);
int cmd_run(const CommonOptions& opts);
int cmd_ablation(const CommonOptions& opts);
int cmd_heatmap(const CommonOptions& opts);

}  // namespace armstab::cli

#endif  // ARMSTAB_CLI_HPP_
