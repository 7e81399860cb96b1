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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "armstab/cli.hpp"
#include "armstab/errors.hpp"

namespace {

void add_common(CLI::App* cmd, armstab::cli::CommonOptions& opts,
                std::string& profile) {
  cmd->add_option("--config", opts.config_path, "scenario config file")
      ->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--profile", profile, "scale preset: paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"action stabilization for arm policies on moving platforms"};
  app.require_subcommand(1);

  armstab::cli::CommonOptions opts;
  std::string profile = "paper";
  int trials = -1;

  auto* train = app.add_subcommand(
      "train-predictor", "train the platform-motion predictor");
  add_common(train, opts, profile);

  auto* calibrate = app.add_subcommand(
      "calibrate", "estimate the system latency via the end-hold warm-up");
  add_common(calibrate, opts, profile);

  auto* run = app.add_subcommand("run", "run one scenario and write the trace");
  add_common(run, opts, profile);

  auto* ablation = app.add_subcommand(
      "ablation", "run the pipeline-variant matrix");
  add_common(ablation, opts, profile);
  ablation->add_option("--variant", opts.variant, "run only this variant");
  ablation->add_option("--trials", trials, "trials per variant");

  auto* heatmap = app.add_subcommand(
      "heatmap", "end-hold marker heatmap for one variant");
  add_common(heatmap, opts, profile);
  heatmap->add_option("--variant", opts.variant, "pipeline variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a validation error
  }

  try {
    opts.profile = armstab::cli::parse_profile(profile);
    if (trials >= 0) opts.trials = trials;
    if (train->parsed()) return armstab::cli::cmd_train_predictor(opts);
    if (calibrate->parsed()) return armstab::cli::cmd_calibrate(opts);
    if (run->parsed()) return armstab::cli::cmd_run(opts);
    if (ablation->parsed()) return armstab::cli::cmd_ablation(opts);
    if (heatmap->parsed()) return armstab::cli::cmd_heatmap(opts);
  } catch (const armstab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
