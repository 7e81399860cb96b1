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

#include "armstab/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "armstab/csv.hpp"
#include "armstab/errors.hpp"
#include "armstab/rng.hpp"

namespace armstab::pred {

namespace {

constexpr double kBranchCutMargin = 1e-6;

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

}  // namespace

Eigen::Matrix<double, 6, 1> encode_pose(const geom::Pose& p) {
  Eigen::Quaterniond q = p.rotation();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v = q.vec();
  const double n = v.norm();
  const double angle = 2.0 * std::atan2(n, q.w());
  if (angle >= M_PI - kBranchCutMargin) {
    throw RotationTooLargeError("relative rotation too close to pi for the "
                                "log map");
  }
  double k;
  if (n < 1e-8) {
    // theta/n = 2/w - 2 n^2 / (3 w^3) for small n
    k = 2.0 / q.w() - 2.0 * n * n / (3.0 * q.w() * q.w() * q.w());
  } else {
    k = angle / n;
  }
  Eigen::Matrix<double, 6, 1> f;
  f.head<3>() = p.translation();
  f.tail<3>() = k * v;
  return f;
}

geom::Pose decode_feature(const Eigen::Matrix<double, 6, 1>& f) {
  const Eigen::Vector3d rv = f.tail<3>();
  const double theta = rv.norm();
  double w, k;
  if (theta < 1e-8) {
    w = std::cos(0.5 * theta);
    k = 0.5 - theta * theta / 48.0;  // sin(theta/2)/theta
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  const Eigen::Vector3d v = k * rv;
  return geom::Pose(f.head<3>(), Eigen::Quaterniond(w, v.x(), v.y(), v.z()));
}

Eigen::MatrixXd encode(const RelativePoseSeq& seq) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(seq.size()), kFeatureDim);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) = encode_pose(seq.poses[static_cast<std::size_t>(i)]).transpose();
  }
  return out;
}

RelativePoseSeq decode(const Eigen::MatrixXd& features, double base_time,
                       double frequency) {
  if (features.cols() != kFeatureDim) {
    throw DimensionMismatchError("feature matrix must have 6 columns");
  }
  RelativePoseSeq seq;
  seq.base_time = base_time;
  seq.frequency = frequency;
  seq.poses.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    seq.poses.push_back(decode_feature(features.row(i).transpose()));
  }
  return seq;
}

RelativePoseSeq build_input(std::span<const PoseSample> history, double now,
                            int l0, double frequency) {
  if (l0 < 1 || frequency <= 0.0) {
    throw ValidationError("build_input: l0 and frequency must be positive");
  }
  const double period = 1.0 / frequency;
  const double tol = 0.5 * period + 1e-9;

  auto nearest = [&](double t) -> const PoseSample& {
    if (history.empty()) {
      throw InsufficientHistoryError("pose history is empty");
    }
    auto it = std::lower_bound(
        history.begin(), history.end(), t,
        [](const PoseSample& s, double v) { return s.time < v; });
    if (it == history.end()) {
      --it;
    } else if (it != history.begin()) {
      auto prev = std::prev(it);
      if (t - prev->time <= it->time - t) it = prev;
    }
    if (std::abs(it->time - t) > tol) {
      throw InsufficientHistoryError(
          "pose history does not cover t=" + std::to_string(t) +
          " at the requested rate");
    }
    return *it;
  };

  const PoseSample& base = nearest(now);
  RelativePoseSeq seq;
  seq.base_time = base.time;
  seq.frequency = frequency;
  seq.poses.reserve(static_cast<std::size_t>(l0));
  for (int i = l0; i >= 1; --i) {
    const PoseSample& s = nearest(base.time - static_cast<double>(i) * period);
    seq.poses.push_back(geom::relative(base.pose, s.pose));
  }
  return seq;
}

RelativePoseSeq constant_velocity_baseline(const RelativePoseSeq& input,
                                           int l1) {
  const auto len = static_cast<int>(input.size());
  if (len < 2) {
    throw InsufficientHistoryError(
        "constant-velocity baseline needs at least 2 input frames");
  }
  // Consecutive deltas over [poses..., identity]; the final delta is the step
  // that ends at the base pose.
  const int count = std::min(10, len);
  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  for (int m = len - count + 1; m <= len; ++m) {
    const geom::Pose& prev = input.poses[static_cast<std::size_t>(m - 1)];
    const geom::Pose next =
        m == len ? geom::Pose::identity() : input.poses[static_cast<std::size_t>(m)];
    mean += encode_pose(geom::relative(prev, next));
  }
  mean /= static_cast<double>(count);
  const geom::Pose step = decode_feature(mean);

  RelativePoseSeq out;
  out.base_time = input.base_time;
  out.frequency = input.frequency;
  out.poses.reserve(static_cast<std::size_t>(l1));
  geom::Pose p = geom::Pose::identity();
  for (int j = 0; j < l1; ++j) {
    p = geom::compose(p, step);
    out.poses.push_back(p);
  }
  return out;
}

PredictorModel::PredictorModel(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.hidden < 1 || cfg.input_frames < 1 || cfg.output_frames < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  if (cfg.head == HeadMode::kPerTimestep &&
      cfg.output_frames > cfg.input_frames) {
    throw DimensionMismatchError(
        "per-timestep head requires output_frames <= input_frames");
  }
  const int h = cfg.hidden;
  lstm_wx_ = Eigen::MatrixXd::Zero(4 * h, kFeatureDim);
  lstm_wh_ = Eigen::MatrixXd::Zero(4 * h, h);
  lstm_b_ = Eigen::MatrixXd::Zero(4 * h, 1);
  gru_wx_ = Eigen::MatrixXd::Zero(3 * h, kFeatureDim);
  gru_wh_ = Eigen::MatrixXd::Zero(3 * h, h);
  gru_b_ = Eigen::MatrixXd::Zero(3 * h, 1);
  const int out_rows = cfg.head == HeadMode::kFinalState
                           ? kFeatureDim * cfg.output_frames
                           : kFeatureDim;
  fc_w_ = Eigen::MatrixXd::Zero(out_rows, 2 * h);
  fc_b_ = Eigen::MatrixXd::Zero(out_rows, 1);
}

PredictorModel PredictorModel::random_init(const ModelConfig& cfg,
                                           std::uint64_t seed) {
  PredictorModel model(cfg);
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  const double s_fc = 1.0 / std::sqrt(static_cast<double>(2 * cfg.hidden));
  auto fill = [&](Eigen::MatrixXd& m, double scale) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        m(r, c) = rng.uniform(-scale, scale);
      }
    }
  };
  fill(model.lstm_wx_, s);
  fill(model.lstm_wh_, s);
  fill(model.gru_wx_, s);
  fill(model.gru_wh_, s);
  fill(model.fc_w_, s_fc);
  // Forget-gate bias starts open so early training keeps long-range state.
  model.lstm_b_.block(cfg.hidden, 0, cfg.hidden, 1).setConstant(1.0);
  return model;
}

std::vector<PredictorModel::TensorRef> PredictorModel::tensors() {
  return {{"lstm.wx", &lstm_wx_}, {"lstm.wh", &lstm_wh_}, {"lstm.b", &lstm_b_},
          {"gru.wx", &gru_wx_},   {"gru.wh", &gru_wh_},   {"gru.b", &gru_b_},
          {"fc.w", &fc_w_},       {"fc.b", &fc_b_}};
}

std::vector<PredictorModel::ConstTensorRef> PredictorModel::tensors() const {
  return {{"lstm.wx", &lstm_wx_}, {"lstm.wh", &lstm_wh_}, {"lstm.b", &lstm_b_},
          {"gru.wx", &gru_wx_},   {"gru.wh", &gru_wh_},   {"gru.b", &gru_b_},
          {"fc.w", &fc_w_},       {"fc.b", &fc_b_}};
}

/// Per-step activations kept for backpropagation through time.
struct ForwardTrace {
  // columns = time steps
  Eigen::MatrixXd x;                      // 6 x T
  Eigen::MatrixXd li, lf, lg, lo, lc, ltc, lh;  // LSTM gates/states, H x T
  Eigen::MatrixXd gr, gz, gn, ga, gh;           // GRU gates/states, H x T
  Eigen::VectorXd y;                      // flattened output, 6*l1

  static ForwardTrace run(const PredictorModel& m, const Eigen::MatrixXd& input);
};

ForwardTrace ForwardTrace::run(const PredictorModel& m,
                               const Eigen::MatrixXd& input) {
  const auto& cfg = m.cfg_;
  if (input.rows() != cfg.input_frames || input.cols() != kFeatureDim) {
    throw DimensionMismatchError(
        "predictor input must be l0 x 6, got " + std::to_string(input.rows()) +
        " x " + std::to_string(input.cols()));
  }
  const int h = cfg.hidden;
  const int T = cfg.input_frames;
  ForwardTrace t;
  t.x = input.transpose();
  t.li.resize(h, T); t.lf.resize(h, T); t.lg.resize(h, T); t.lo.resize(h, T);
  t.lc.resize(h, T); t.ltc.resize(h, T); t.lh.resize(h, T);
  t.gr.resize(h, T); t.gz.resize(h, T); t.gn.resize(h, T); t.ga.resize(h, T);
  t.gh.resize(h, T);

  Eigen::VectorXd lh_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd lc_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd gh_prev = Eigen::VectorXd::Zero(h);
  for (int k = 0; k < T; ++k) {
    const Eigen::VectorXd xk = t.x.col(k);
    // LSTM
    Eigen::VectorXd pre = m.lstm_wx_ * xk + m.lstm_wh_ * lh_prev + m.lstm_b_;
    t.li.col(k) = sigmoid(pre.segment(0, h).array());
    t.lf.col(k) = sigmoid(pre.segment(h, h).array());
    t.lg.col(k) = pre.segment(2 * h, h).array().tanh();
    t.lo.col(k) = sigmoid(pre.segment(3 * h, h).array());
    t.lc.col(k) = t.lf.col(k).cwiseProduct(lc_prev) +
                  t.li.col(k).cwiseProduct(t.lg.col(k));
    t.ltc.col(k) = t.lc.col(k).array().tanh();
    t.lh.col(k) = t.lo.col(k).cwiseProduct(t.ltc.col(k));
    lc_prev = t.lc.col(k);
    lh_prev = t.lh.col(k);
    // GRU
    Eigen::VectorXd gpre = m.gru_wx_ * xk + m.gru_b_;
    gpre.segment(0, h) += m.gru_wh_.middleRows(0, h) * gh_prev;
    gpre.segment(h, h) += m.gru_wh_.middleRows(h, h) * gh_prev;
    t.gr.col(k) = sigmoid(gpre.segment(0, h).array());
    t.gz.col(k) = sigmoid(gpre.segment(h, h).array());
    t.ga.col(k) = t.gr.col(k).cwiseProduct(gh_prev);
    t.gn.col(k) = (gpre.segment(2 * h, h) +
                   m.gru_wh_.middleRows(2 * h, h) * t.ga.col(k))
                      .array()
                      .tanh();
    t.gh.col(k) = (Eigen::VectorXd::Ones(h) - t.gz.col(k)).cwiseProduct(t.gn.col(k)) +
                  t.gz.col(k).cwiseProduct(gh_prev);
    gh_prev = t.gh.col(k);
  }

  const int l1 = cfg.output_frames;
  t.y.resize(kFeatureDim * l1);
  if (cfg.head == HeadMode::kFinalState) {
    Eigen::VectorXd hcat(2 * h);
    hcat << t.lh.col(T - 1), t.gh.col(T - 1);
    t.y = m.fc_w_ * hcat + m.fc_b_;
  } else {
    for (int j = 0; j < l1; ++j) {
      const int step = T - l1 + j;
      Eigen::VectorXd hcat(2 * h);
      hcat << t.lh.col(step), t.gh.col(step);
      t.y.segment(kFeatureDim * j, kFeatureDim) = m.fc_w_ * hcat + m.fc_b_;
    }
  }
  return t;
}

Eigen::MatrixXd PredictorModel::forward_features(
    const Eigen::MatrixXd& input) const {
  const ForwardTrace t = ForwardTrace::run(*this, input);
  Eigen::MatrixXd out(cfg_.output_frames, kFeatureDim);
  for (int j = 0; j < cfg_.output_frames; ++j) {
    out.row(j) = t.y.segment(kFeatureDim * j, kFeatureDim).transpose();
  }
  return out;
}

RelativePoseSeq PredictorModel::forward(const RelativePoseSeq& input) const {
  if (static_cast<int>(input.size()) != cfg_.input_frames) {
    throw DimensionMismatchError("predictor input length must equal l0");
  }
  const Eigen::MatrixXd features = encode(input);
  const Eigen::MatrixXd out = forward_features(features);
  const double horizon_base = input.base_time;
  return decode(out, horizon_base, input.frequency);
}

double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatchError("mse: shape mismatch");
  }
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

/// Backpropagation through time; exposes gradients in tensors() order.
class Trainer {
 public:
  static std::vector<Eigen::MatrixXd> zero_grads(const PredictorModel& m) {
    std::vector<Eigen::MatrixXd> g;
    for (const auto& t : m.tensors()) {
      g.push_back(Eigen::MatrixXd::Zero(t.data->rows(), t.data->cols()));
    }
    return g;
  }

  // Accumulates dL/dtheta for one (input, target) pair into `grads`;
  // returns the sample loss.
  static double accumulate(const PredictorModel& m, const Eigen::MatrixXd& input,
                           const Eigen::MatrixXd& target,
                           std::vector<Eigen::MatrixXd>& grads) {
    const auto& cfg = m.cfg_;
    if (target.rows() != cfg.output_frames || target.cols() != kFeatureDim) {
      throw DimensionMismatchError("training target must be l1 x 6");
    }
    const ForwardTrace t = ForwardTrace::run(m, input);
    const int h = cfg.hidden;
    const int T = cfg.input_frames;
    const int l1 = cfg.output_frames;
    const int n = kFeatureDim * l1;

    Eigen::VectorXd tgt(n);
    for (int j = 0; j < l1; ++j) {
      tgt.segment(kFeatureDim * j, kFeatureDim) = target.row(j).transpose();
    }
    const Eigen::VectorXd err = t.y - tgt;
    const double loss = err.squaredNorm() / static_cast<double>(n);
    const Eigen::VectorXd dy = 2.0 * err / static_cast<double>(n);

    Eigen::MatrixXd& d_lstm_wx = grads[0];
    Eigen::MatrixXd& d_lstm_wh = grads[1];
    Eigen::MatrixXd& d_lstm_b = grads[2];
    Eigen::MatrixXd& d_gru_wx = grads[3];
    Eigen::MatrixXd& d_gru_wh = grads[4];
    Eigen::MatrixXd& d_gru_b = grads[5];
    Eigen::MatrixXd& d_fc_w = grads[6];
    Eigen::MatrixXd& d_fc_b = grads[7];

    // Head: per-step extra gradient injected into each branch's hidden state.
    Eigen::MatrixXd dlh_inject = Eigen::MatrixXd::Zero(h, T);
    Eigen::MatrixXd dgh_inject = Eigen::MatrixXd::Zero(h, T);
    if (cfg.head == HeadMode::kFinalState) {
      Eigen::VectorXd hcat(2 * h);
      hcat << t.lh.col(T - 1), t.gh.col(T - 1);
      d_fc_w += dy * hcat.transpose();
      d_fc_b += dy;
      const Eigen::VectorXd dhcat = m.fc_w_.transpose() * dy;
      dlh_inject.col(T - 1) += dhcat.segment(0, h);
      dgh_inject.col(T - 1) += dhcat.segment(h, h);
    } else {
      for (int j = 0; j < l1; ++j) {
        const int step = T - l1 + j;
        Eigen::VectorXd hcat(2 * h);
        hcat << t.lh.col(step), t.gh.col(step);
        const Eigen::VectorXd dyj = dy.segment(kFeatureDim * j, kFeatureDim);
        d_fc_w += dyj * hcat.transpose();
        d_fc_b += dyj;
        const Eigen::VectorXd dhcat = m.fc_w_.transpose() * dyj;
        dlh_inject.col(step) += dhcat.segment(0, h);
        dgh_inject.col(step) += dhcat.segment(h, h);
      }
    }

    // LSTM BPTT
    {
      Eigen::VectorXd dh = Eigen::VectorXd::Zero(h);
      Eigen::VectorXd dc = Eigen::VectorXd::Zero(h);
      Eigen::VectorXd dpre(4 * h);
      for (int k = T - 1; k >= 0; --k) {
        dh += dlh_inject.col(k);
        const Eigen::VectorXd c_prev =
            k > 0 ? Eigen::VectorXd(t.lc.col(k - 1)) : Eigen::VectorXd::Zero(h);
        const Eigen::VectorXd h_prev =
            k > 0 ? Eigen::VectorXd(t.lh.col(k - 1)) : Eigen::VectorXd::Zero(h);
        const auto i = t.li.col(k).array();
        const auto f = t.lf.col(k).array();
        const auto g = t.lg.col(k).array();
        const auto o = t.lo.col(k).array();
        const auto tc = t.ltc.col(k).array();
        const Eigen::ArrayXd do_ = dh.array() * tc;
        dc.array() += dh.array() * o * (1.0 - tc * tc);
        const Eigen::ArrayXd di = dc.array() * g;
        const Eigen::ArrayXd dg = dc.array() * i;
        const Eigen::ArrayXd df = dc.array() * c_prev.array();
        dpre.segment(0, h) = di * i * (1.0 - i);
        dpre.segment(h, h) = df * f * (1.0 - f);
        dpre.segment(2 * h, h) = dg * (1.0 - g * g);
        dpre.segment(3 * h, h) = do_ * o * (1.0 - o);
        d_lstm_wx += dpre * t.x.col(k).transpose();
        d_lstm_wh += dpre * h_prev.transpose();
        d_lstm_b += dpre;
        dh = m.lstm_wh_.transpose() * dpre;
        dc = (dc.array() * f).matrix();
      }
    }

    // GRU BPTT
    {
      Eigen::VectorXd dh = Eigen::VectorXd::Zero(h);
      for (int k = T - 1; k >= 0; --k) {
        dh += dgh_inject.col(k);
        const Eigen::VectorXd h_prev =
            k > 0 ? Eigen::VectorXd(t.gh.col(k - 1)) : Eigen::VectorXd::Zero(h);
        const auto r = t.gr.col(k).array();
        const auto z = t.gz.col(k).array();
        const auto n_ = t.gn.col(k).array();
        const Eigen::ArrayXd dz = dh.array() * (h_prev.array() - n_);
        const Eigen::ArrayXd dn = dh.array() * (1.0 - z);
        Eigen::VectorXd dh_prev = (dh.array() * z).matrix();
        const Eigen::VectorXd dpre_n = (dn * (1.0 - n_ * n_)).matrix();
        d_gru_wx.middleRows(2 * h, h) += dpre_n * t.x.col(k).transpose();
        d_gru_wh.middleRows(2 * h, h) += dpre_n * t.ga.col(k).transpose();
        d_gru_b.middleRows(2 * h, h) += dpre_n;
        const Eigen::VectorXd da =
            m.gru_wh_.middleRows(2 * h, h).transpose() * dpre_n;
        const Eigen::ArrayXd dr = da.array() * h_prev.array();
        dh_prev.array() += da.array() * r;
        const Eigen::VectorXd dpre_r = (dr * r * (1.0 - r)).matrix();
        const Eigen::VectorXd dpre_z = (dz * z * (1.0 - z)).matrix();
        d_gru_wx.middleRows(0, h) += dpre_r * t.x.col(k).transpose();
        d_gru_wx.middleRows(h, h) += dpre_z * t.x.col(k).transpose();
        d_gru_wh.middleRows(0, h) += dpre_r * h_prev.transpose();
        d_gru_wh.middleRows(h, h) += dpre_z * h_prev.transpose();
        d_gru_b.middleRows(0, h) += dpre_r;
        d_gru_b.middleRows(h, h) += dpre_z;
        dh_prev += m.gru_wh_.middleRows(0, h).transpose() * dpre_r;
        dh_prev += m.gru_wh_.middleRows(h, h).transpose() * dpre_z;
        dh = dh_prev;
      }
    }
    return loss;
  }
};

namespace {

struct Adam {
  std::vector<Eigen::MatrixXd> m, v;
  std::int64_t step_count = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit Adam(const std::vector<Eigen::MatrixXd>& shapes) {
    for (const auto& s : shapes) {
      m.push_back(Eigen::MatrixXd::Zero(s.rows(), s.cols()));
      v.push_back(Eigen::MatrixXd::Zero(s.rows(), s.cols()));
    }
  }

  void step(std::vector<PredictorModel::TensorRef>& params,
            const std::vector<Eigen::MatrixXd>& grads, double lr) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] +
             (1.0 - beta2) * grads[i].cwiseProduct(grads[i]);
      const Eigen::ArrayXXd mhat = m[i].array() / bc1;
      const Eigen::ArrayXXd vhat = v[i].array() / bc2;
      params[i].data->array() -= lr * mhat / (vhat.sqrt() + eps);
    }
  }
};

}  // namespace

std::vector<EpochStats> train(PredictorModel& model,
                              const std::vector<TrainSample>& dataset,
                              const TrainConfig& cfg) {
  if (dataset.empty()) {
    throw ValidationError("training dataset is empty");
  }
  if (cfg.learning_rate <= 0.0 || cfg.batch_size < 1 ||
      cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0) {
    throw ValidationError("invalid training configuration");
  }
  std::vector<EpochStats> history;
  if (cfg.epochs <= 0) return history;

  Rng rng(cfg.seed);
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(
      cfg.validation_fraction * static_cast<double>(dataset.size()));
  std::vector<std::size_t> val_idx(idx.end() - static_cast<std::ptrdiff_t>(n_val),
                                   idx.end());
  std::vector<std::size_t> train_idx(idx.begin(),
                                     idx.end() - static_cast<std::ptrdiff_t>(n_val));
  if (train_idx.empty()) {
    train_idx = idx;
    val_idx.clear();
  }

  auto params = model.tensors();
  Adam adam(Trainer::zero_grads(model));
  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t pos = 0;
    while (pos < train_idx.size()) {
      const std::size_t end =
          std::min(pos + static_cast<std::size_t>(cfg.batch_size),
                   train_idx.size());
      auto grads = Trainer::zero_grads(model);
      for (std::size_t i = pos; i < end; ++i) {
        const TrainSample& s = dataset[train_idx[i]];
        loss_sum += Trainer::accumulate(model, s.input, s.target, grads);
      }
      const double inv = 1.0 / static_cast<double>(end - pos);
      for (auto& g : grads) g *= inv;
      adam.step(params, grads, lr);
      pos = end;
    }
    EpochStats st;
    st.train_mse = loss_sum / static_cast<double>(train_idx.size());
    if (!val_idx.empty()) {
      double v = 0.0;
      for (const auto i : val_idx) {
        v += mse(model.forward_features(dataset[i].input), dataset[i].target);
      }
      st.val_mse = v / static_cast<double>(val_idx.size());
    } else {
      st.val_mse = st.train_mse;
    }
    st.learning_rate = lr;
    history.push_back(st);
    lr *= cfg.lr_decay;
  }
  return history;
}

double gradient_check(const PredictorModel& model, const Eigen::MatrixXd& input,
                      const Eigen::MatrixXd& target) {
  PredictorModel work = model;
  auto analytic = Trainer::zero_grads(work);
  Trainer::accumulate(work, input, target, analytic);

  const double h = 1e-5;
  double worst = 0.0;
  auto params = work.tensors();
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    Eigen::MatrixXd& theta = *params[ti].data;
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      for (Eigen::Index r = 0; r < theta.rows(); ++r) {
        const double saved = theta(r, c);
        theta(r, c) = saved + h;
        const double lp = mse(work.forward_features(input), target);
        theta(r, c) = saved - h;
        const double lm = mse(work.forward_features(input), target);
        theta(r, c) = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double ga = analytic[ti](r, c);
        const double rel = std::abs(ga - numeric) /
                           std::max(std::abs(ga) + std::abs(numeric), 1e-6);
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

void PredictorModel::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "armstab-predictor";
  j["version"] = 1;
  j["hidden"] = cfg_.hidden;
  j["input_frames"] = cfg_.input_frames;
  j["output_frames"] = cfg_.output_frames;
  j["head"] = cfg_.head == HeadMode::kFinalState ? "final_state" : "per_timestep";
  nlohmann::json tensors_json = nlohmann::json::object();
  for (const auto& t : tensors()) {
    nlohmann::json tj;
    tj["rows"] = t.data->rows();
    tj["cols"] = t.data->cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.data->size()));
    for (Eigen::Index r = 0; r < t.data->rows(); ++r) {
      for (Eigen::Index c = 0; c < t.data->cols(); ++c) {
        data.push_back((*t.data)(r, c));
      }
    }
    tj["data"] = data;
    tensors_json[t.name] = tj;
  }
  j["tensors"] = tensors_json;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << j.dump(1) << '\n';
}

PredictorModel PredictorModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (j.at("format") != "armstab-predictor" || j.at("version") != 1) {
      throw ValidationError("unsupported checkpoint format/version");
    }
    ModelConfig cfg;
    cfg.hidden = j.at("hidden").get<int>();
    cfg.input_frames = j.at("input_frames").get<int>();
    cfg.output_frames = j.at("output_frames").get<int>();
    const std::string head = j.at("head").get<std::string>();
    if (head == "final_state") {
      cfg.head = HeadMode::kFinalState;
    } else if (head == "per_timestep") {
      cfg.head = HeadMode::kPerTimestep;
    } else {
      throw ValidationError("unknown head mode: " + head);
    }
    PredictorModel model(cfg);
    for (auto& t : model.tensors()) {
      const auto& tj = j.at("tensors").at(t.name);
      const auto rows = tj.at("rows").get<Eigen::Index>();
      const auto cols = tj.at("cols").get<Eigen::Index>();
      if (rows != t.data->rows() || cols != t.data->cols()) {
        throw ValidationError("checkpoint tensor '" + t.name +
                              "' has the wrong shape");
      }
      const auto data = tj.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw ValidationError("checkpoint tensor '" + t.name +
                              "' has the wrong element count");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          (*t.data)(r, c) = data[k++];
        }
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed checkpoint: " + std::string(e.what()));
  }
}

std::vector<TrainSample> make_windows(std::span<const PoseSample> stream,
                                      int l0, int l1, int stride) {
  if (stride < 1) throw ValidationError("window stride must be >= 1");
  const auto n = static_cast<std::int64_t>(stream.size());
  std::vector<TrainSample> out;
  if (n < l0 + l1 + 1) return out;
  for (std::int64_t c = l0; c + l1 < n; c += stride) {
    const geom::Pose& base = stream[static_cast<std::size_t>(c)].pose;
    RelativePoseSeq past, future;
    past.poses.reserve(static_cast<std::size_t>(l0));
    future.poses.reserve(static_cast<std::size_t>(l1));
    for (std::int64_t i = l0; i >= 1; --i) {
      past.poses.push_back(
          geom::relative(base, stream[static_cast<std::size_t>(c - i)].pose));
    }
    for (std::int64_t j = 1; j <= l1; ++j) {
      future.poses.push_back(
          geom::relative(base, stream[static_cast<std::size_t>(c + j)].pose));
    }
    out.push_back(TrainSample{encode(past), encode(future)});
  }
  return out;
}

std::vector<PoseSample> read_pose_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path);
  const std::vector<std::string> expect = {"time", "tx", "ty", "tz",
                                           "qw", "qx", "qy", "qz"};
  if (table.header != expect) {
    throw ValidationError(path.string() +
                          ": expected header time,tx,ty,tz,qw,qx,qy,qz");
  }
  std::vector<PoseSample> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    PoseSample s;
    s.time = r[0];
    s.pose = geom::from_row({r[1], r[2], r[3], r[4], r[5], r[6], r[7]});
    out.push_back(s);
  }
  return out;
}

void write_pose_csv(const std::filesystem::path& path,
                    std::span<const PoseSample> stream) {
  csv::Writer w(path, "time,tx,ty,tz,qw,qx,qy,qz");
  for (const auto& s : stream) {
    const auto row = geom::to_row(s.pose);
    w.row({s.time, row[0], row[1], row[2], row[3], row[4], row[5], row[6]});
  }
}

}  // namespace armstab::pred
