// Copyright 2026 InertiaKit Authors
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
//
// Dead-reckoning improvement metric.
//
// For each usable segment the IMU is re-integrated twice, once at zero bias
// and once at the bias under test, and compared to the pose-derived nominal
// position delta:
//   d_alpha(b) = || alpha_nominal - alpha_integrated(b) ||
// The headline number is the relative reduction of the mean position-delta
// error, (before - after) / before, where "before" is the zero-bias run.
// Both means are taken over exactly the same segment set, which is
// restricted to segments every compared source can serve.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inertia/gtbias.hpp"
#include "inertia/models.hpp"

namespace inertia {

// Per-index bias under test; std::nullopt excludes the segment from the
// common evaluation set (e.g. not enough model context).
using BiasProvider = std::function<std::optional<Vec6>(int index)>;

inline BiasProvider zero_bias_provider() {
  return [](int) { return std::optional<Vec6>(Vec6::Zero()); };
}

// Serves the solved per-segment biases of valid records.
inline BiasProvider record_bias_provider(std::span<const BiasRecord> records) {
  std::vector<std::optional<Vec6>> table(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].valid) continue;
    Vec6 b;
    b.segment<3>(0) = records[i].b_a;
    b.segment<3>(3) = records[i].b_w;
    table[i] = b;
  }
  return [table](int index) -> std::optional<Vec6> {
    if (index < 0 || static_cast<std::size_t>(index) >= table.size()) {
      return std::nullopt;
    }
    return table[static_cast<std::size_t>(index)];
  };
}

// Predicts segment k from the teacher-forced context window
// [k - L + 1, k]: pooled IMU windows plus the previous ground-truth bias
// chain. Both models run on the identical context; a window containing any
// invalid step disqualifies the segment.
inline std::vector<std::optional<Vec6>> predict_bias_sequence(
    const BiasModel& accel_model, const FeatureCodec& accel_codec,
    const BiasModel& gyro_model, const FeatureCodec& gyro_codec,
    std::span<const StepFeature> steps) {
  const auto& ca = accel_model.config();
  const auto& cg = gyro_model.config();
  if (ca.target != "accel" || cg.target != "gyro") {
    throw ConfigError("predict: model pair must be (accel, gyro)");
  }
  if (ca.window_w != cg.window_w || ca.history_len != cg.history_len) {
    throw ConfigError(
        "predict: model pair disagrees on window size or history length");
  }
  const int L = ca.history_len;
  const int w6 = ca.window_w * 6;
  std::vector<std::optional<Vec6>> out(steps.size());

  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (static_cast<int>(k) < L - 1) continue;
    bool usable = true;
    for (int j = 0; j < L; ++j) {
      const auto& st = steps[k - static_cast<std::size_t>(L - 1 - j)];
      if (!st.valid || st.window.size() != w6) {
        usable = false;
        break;
      }
    }
    if (!usable) continue;

    Eigen::MatrixXd features(L, w6);
    Eigen::MatrixXd prev_bias(L, 6);
    for (int j = 0; j < L; ++j) {
      const auto& st = steps[k - static_cast<std::size_t>(L - 1 - j)];
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
          wrow = st.window;
      features.row(j) = Eigen::Map<const Eigen::RowVectorXd>(wrow.data(), w6);
      prev_bias.row(j) = st.prev_bias.transpose();
    }
    const Eigen::MatrixXd ya = accel_model.forward_eager(
        accel_codec.encode_inputs(features, prev_bias));
    const Eigen::MatrixXd yg = gyro_model.forward_eager(
        gyro_codec.encode_inputs(features, prev_bias));
    Vec6 b;
    b.segment<3>(0) = accel_codec.decode_output(ya.row(L - 1));
    b.segment<3>(3) = gyro_codec.decode_output(yg.row(L - 1));
    out[k] = b;
  }
  return out;
}

inline BiasProvider model_bias_provider(
    std::vector<std::optional<Vec6>> predictions) {
  return [table = std::move(predictions)](int index) -> std::optional<Vec6> {
    if (index < 0 || static_cast<std::size_t>(index) >= table.size()) {
      return std::nullopt;
    }
    return table[static_cast<std::size_t>(index)];
  };
}

struct SegmentMetric {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double before = 0.0;  // zero-bias position-delta error [m]
  double after = 0.0;   // error at the bias under test [m]
};

struct EvalResult {
  int n_segments = 0;  // size of the common evaluated set
  double mean_before = 0.0;
  double mean_after = 0.0;
  std::optional<double> reduction;  // empty when mean_before ~ 0
  std::vector<SegmentMetric> segments;
};

struct EvalOptions {
  DeriveOptions derive;  // must match the settings the records came from
  // Exclude segments below this index so different bias sources are compared
  // on an identical set (e.g. the model needs history_len - 1 of context).
  int min_index = 0;
};

inline std::optional<double> error_reduction(double before, double after) {
  if (!(before > 1e-12)) return std::nullopt;
  return (before - after) / before;
}

// Re-integrates every eligible segment at zero bias and at the provided
// bias. Segment boundaries and nominal deltas are reconstructed exactly as
// in the derivation pipeline from the records' own timestamps.
inline EvalResult evaluate_bias_sequence(std::span<const ImuSample> imu,
                                         std::span<const PoseSample> poses_h,
                                         std::span<const BiasRecord> records,
                                         const BiasProvider& provider,
                                         const EvalOptions& opts = {}) {
  if (imu.size() < 3 || poses_h.size() < 3) {
    throw DataError("evaluate: streams too short");
  }
  const Quat q_ih = rot_to_quat(opts.derive.calib_r);
  std::vector<PoseSample> poses(poses_h.begin(), poses_h.end());
  for (auto& ps : poses) {
    ps.q = normalized_canonical(ps.q * quat_conjugate(q_ih));
  }
  const auto vels = estimate_velocities(poses, opts.derive.velocity);

  auto pose_at = [&](double t) -> std::optional<std::size_t> {
    auto it = std::lower_bound(
        poses.begin(), poses.end(), t - 1e-7,
        [](const PoseSample& s, double v) { return s.t < v; });
    if (it == poses.end() || std::abs(it->t - t) > 1e-7) return std::nullopt;
    return static_cast<std::size_t>(it - poses.begin());
  };

  const double imu_dt =
      (imu.back().t - imu.front().t) / static_cast<double>(imu.size() - 1);
  IntegrationOptions integ;
  integ.quadrature = opts.derive.quadrature;
  integ.increment = opts.derive.increment;
  integ.expected_duration = opts.derive.segment_s;
  integ.duration_tolerance = 0.1;

  EvalResult res;
  for (const auto& rec : records) {
    if (!rec.valid || rec.index < opts.min_index) continue;
    const auto bias = provider(rec.index);
    if (!bias) continue;

    const auto i0 = pose_at(rec.t_start);
    const auto i1 = pose_at(rec.t_end);
    if (!i0 || !i1) {
      throw DataError("evaluate: record boundaries do not match the poses");
    }
    if (!vels[*i0].valid || !vels[*i1].valid) continue;

    auto gathered =
        detail::gather_segment_imu(imu, rec.t_start, rec.t_end, imu_dt);
    if (!gathered.ok()) continue;

    const NominalDelta nom = nominal_deltas(poses[*i0], poses[*i1],
                                            vels[*i0].v, vels[*i1].v,
                                            opts.derive.g_w);
    BiasEstimate zero;
    BiasEstimate tested;
    tested.b_a = bias->segment<3>(0);
    tested.b_w = bias->segment<3>(3);
    const auto hat0 = preintegrate_segment(gathered.samples, zero, integ);
    const auto hatb = preintegrate_segment(gathered.samples, tested, integ);

    SegmentMetric m;
    m.index = rec.index;
    m.t_start = rec.t_start;
    m.t_end = rec.t_end;
    m.before = (nom.alpha - hat0.alpha).norm();
    m.after = (nom.alpha - hatb.alpha).norm();
    res.segments.push_back(m);
    res.mean_before += m.before;
    res.mean_after += m.after;
  }
  res.n_segments = static_cast<int>(res.segments.size());
  if (res.n_segments == 0) {
    throw DataError("evaluate: no segments in the common evaluation set");
  }
  res.mean_before /= res.n_segments;
  res.mean_after /= res.n_segments;
  res.reduction = error_reduction(res.mean_before, res.mean_after);
  return res;
}

}  // namespace inertia
