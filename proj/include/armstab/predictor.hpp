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

#ifndef ARMSTAB_PREDICTOR_HPP_
#define ARMSTAB_PREDICTOR_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "armstab/geometry.hpp"

namespace armstab::pred {

/// Per-frame network feature: translation (m) stacked on the quaternion
/// log-map rotation vector (rad).
inline constexpr int kFeatureDim = 6;

/// Fixed-frequency sequence of poses expressed relative to a base pose.
/// For a past window the first element is the oldest frame (offset -l0) and
/// the last is offset -1; the implicit frame at offset 0 is the identity.
/// For a predicted window element i-1 is the frame at offset +i.
struct RelativePoseSeq {
  double base_time = 0.0;
  double frequency = 200.0;
  std::vector<geom::Pose> poses;

  std::size_t size() const { return poses.size(); }
};

/// One timestamped pose sample of the platform stream.
struct PoseSample {
  double time = 0.0;
  geom::Pose pose;
};

/// Quaternion log / exp maps. encode throws RotationTooLargeError near the
/// branch cut (rotation angle >= pi).
Eigen::Matrix<double, 6, 1> encode_pose(const geom::Pose& p);
geom::Pose decode_feature(const Eigen::Matrix<double, 6, 1>& f);

/// Sequence <-> feature-matrix (rows = frames, cols = 6).
Eigen::MatrixXd encode(const RelativePoseSeq& seq);
RelativePoseSeq decode(const Eigen::MatrixXd& features, double base_time,
                       double frequency);

/// Builds the predictor input from a pose history: l0 relative poses
/// relative(p(now), p(now - i/f)), i = l0..1, resampled by nearest sample.
/// Throws InsufficientHistoryError when the window is not covered at rate f.
RelativePoseSeq build_input(std::span<const PoseSample> history, double now,
                            int l0, double frequency);

/// Analytic baseline: extrapolates the mean per-frame twist of the most
/// recent (up to 10) inter-frame deltas, including the step that ends at the
/// base pose. Exact on constant-velocity motion.
RelativePoseSeq constant_velocity_baseline(const RelativePoseSeq& input,
                                           int l1);

enum class HeadMode {
  /// One fully connected map from the final concatenated hidden state to all
  /// l1 output frames at once.
  kFinalState,
  /// A shared 2H -> 6 head applied to the concatenated hidden states of the
  /// last l1 input steps (requires l1 <= l0).
  kPerTimestep,
};

struct ModelConfig {
  int hidden = 64;         // per-branch hidden size H
  int input_frames = 200;  // l0
  int output_frames = 100; // l1
  HeadMode head = HeadMode::kFinalState;
};

/// Parallel LSTM and GRU over the same input; their hidden states are
/// concatenated and a fully connected head emits the future window in one
/// shot. All math is double precision, all loops deterministic.
class PredictorModel {
 public:
  explicit PredictorModel(const ModelConfig& cfg);
  static PredictorModel random_init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  /// Feature-level forward: l0 x 6 -> l1 x 6. Throws DimensionMismatchError.
  Eigen::MatrixXd forward_features(const Eigen::MatrixXd& input) const;

  /// Pose-level forward: relative past window -> relative future window.
  RelativePoseSeq forward(const RelativePoseSeq& input) const;

  struct TensorRef {
    std::string name;
    Eigen::MatrixXd* data;
  };
  struct ConstTensorRef {
    std::string name;
    const Eigen::MatrixXd* data;
  };
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;

  void save(const std::filesystem::path& path) const;
  static PredictorModel load(const std::filesystem::path& path);

 private:
  friend class Trainer;
  friend struct ForwardTrace;

  ModelConfig cfg_;
  // LSTM: gate rows ordered [input; forget; candidate; output], each H rows.
  Eigen::MatrixXd lstm_wx_, lstm_wh_, lstm_b_;
  // GRU: gate rows ordered [reset; update; candidate], each H rows.
  Eigen::MatrixXd gru_wx_, gru_wh_, gru_b_;
  Eigen::MatrixXd fc_w_, fc_b_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  /// Per-epoch multiplicative learning-rate decay (1 = constant).
  double lr_decay = 1.0;
};

/// A training window in feature space: input is l0 x 6, target is l1 x 6.
struct TrainSample {
  Eigen::MatrixXd input;
  Eigen::MatrixXd target;
};

struct EpochStats {
  double train_mse = 0.0;
  double val_mse = 0.0;
  double learning_rate = 0.0;
};

double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Mini-batch training with adaptive per-parameter steps (Adam moments) on
/// the mean squared feature error. Deterministic for a fixed seed.
std::vector<EpochStats> train(PredictorModel& model,
                              const std::vector<TrainSample>& dataset,
                              const TrainConfig& cfg);

/// Analytic gradients vs central finite differences (h = 1e-5) on every
/// parameter; returns the worst relative error. Intended for small models.
double gradient_check(const PredictorModel& model, const Eigen::MatrixXd& input,
                      const Eigen::MatrixXd& target);

/// Slices a fixed-rate pose stream into (past, future) training windows.
std::vector<TrainSample> make_windows(std::span<const PoseSample> stream,
                                      int l0, int l1, int stride);

/// Pose-stream CSV (time,tx,ty,tz,qw,qx,qy,qz) used for training data.
std::vector<PoseSample> read_pose_csv(const std::filesystem::path& path);
void write_pose_csv(const std::filesystem::path& path,
                    std::span<const PoseSample> stream);

}  // namespace armstab::pred

#endif  // ARMSTAB_PREDICTOR_HPP_
