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
// Per-segment ground-truth bias derivation.
//
// For each short segment the mocap poses give nominal motion deltas in the
// segment-start body frame; pre-integration of the raw IMU gives the same
// deltas as the sensor saw them, plus bias Jacobians. The gap between the
// two, pushed through the Jacobians, yields a 9x6 linear least-squares
// problem whose solution is the segment's accelerometer/gyro bias.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "inertia/calib.hpp"
#include "inertia/errors.hpp"
#include "inertia/geom.hpp"
#include "inertia/log.hpp"
#include "inertia/preint.hpp"

namespace inertia {

struct VelocityOptions {
  double cutoff_hz = 10.0;  // smoothing passband edge
  int half_taps = 16;       // smoother length = 2*half_taps + 1
  double max_jitter = 0.05; // allowed relative deviation from uniform spacing
  double gap_factor = 3.0;  // dt > gap_factor * nominal splits the stream
};

struct VelocitySample {
  double t = 0.0;
  Vec3 v = Vec3::Zero();
  bool valid = false;
};

namespace detail {

// Zero-phase smoothing kernel for velocities obtained by +/-1-sample central
// differences at sample period h. The passband applies the inverse of the
// differentiator's sinc attenuation (gain w*h / sin(w*h) up to cutoff_hz,
// raised-cosine rolloff beyond), so band-limited velocity content below the
// cutoff is reconstructed with unit gain instead of the ~3-4% droop a plain
// smoother would leave at gait frequencies. Frequency-sampled design,
// Hann-windowed, DC gain renormalized to exactly 1.
inline std::vector<double> velocity_smoother(double h, double cutoff_hz,
                                             int half_taps) {
  const double nyq = 0.5 / h;
  const double f_stop = std::min(2.0 * cutoff_hz, 0.98 * nyq);
  const double f_pass = std::min(cutoff_hz, 0.9 * f_stop);
  const int grid = 4096;

  auto target = [&](double w) {  // w in [0, pi], digital frequency
    const double f = w / (2.0 * M_PI * h);
    auto comp = [&](double ff) {
      const double x = 2.0 * M_PI * ff * h;
      return (x < 1e-9) ? 1.0 : x / std::sin(x);
    };
    if (f <= f_pass) return comp(f);
    if (f >= f_stop) return 0.0;
    const double u = (f - f_pass) / (f_stop - f_pass);
    return comp(f_pass) * 0.5 * (1.0 + std::cos(M_PI * u));
  };

  std::vector<double> g(half_taps + 1, 0.0);
  for (int k = 0; k <= half_taps; ++k) {
    // (1/pi) * integral_0^pi target(w) cos(k w) dw, trapezoid rule.
    double acc = 0.0;
    for (int m = 0; m <= grid; ++m) {
      const double w = M_PI * static_cast<double>(m) / grid;
      const double val = target(w) * std::cos(k * w);
      acc += (m == 0 || m == grid) ? 0.5 * val : val;
    }
    g[k] = acc / grid;
  }
  std::vector<double> taps(2 * half_taps + 1, 0.0);
  double sum = 0.0;
  for (int k = -half_taps; k <= half_taps; ++k) {
    const double hann =
        0.5 * (1.0 + std::cos(M_PI * k / static_cast<double>(half_taps + 1)));
    const double v = g[std::abs(k)] * hann;
    taps[k + half_taps] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;  // exact unit DC gain
  return taps;
}

}  // namespace detail

// World-frame velocities from mocap positions: central differences, then the
// zero-phase sinc-compensated smoother above. Endpoints use one-sided
// stencils; runs separated by timing gaps are processed independently and
// samples inside too-short runs are flagged invalid.
inline std::vector<VelocitySample> estimate_velocities(
    std::span<const PoseSample> poses, const VelocityOptions& opts = {}) {
  if (poses.size() < 3) {
    throw DataError("estimate_velocities: needs at least 3 poses");
  }
  std::vector<double> dts;
  dts.reserve(poses.size() - 1);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const double dt = poses[i].t - poses[i - 1].t;
    if (!(dt > 0.0)) {
      throw DataError("estimate_velocities: pose timestamps not increasing");
    }
    dts.push_back(dt);
  }
  std::vector<double> sorted = dts;
  std::sort(sorted.begin(), sorted.end());
  const double h = sorted[sorted.size() / 2];

  // Split into uniform runs at gaps; enforce jitter bound within runs.
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [lo, hi)
  std::size_t lo = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (dts[i] > opts.gap_factor * h) {
      runs.emplace_back(lo, i + 1);
      lo = i + 1;
    } else if (std::abs(dts[i] / h - 1.0) > opts.max_jitter) {
      throw DataError(
          "estimate_velocities: pose spacing jitter exceeds tolerance");
    }
  }
  runs.emplace_back(lo, poses.size());

  std::vector<VelocitySample> out(poses.size());
  const auto taps = detail::velocity_smoother(h, opts.cutoff_hz, opts.half_taps);
  const int half = opts.half_taps;

  for (const auto& [rlo, rhi] : runs) {
    const std::size_t n = rhi - rlo;
    for (std::size_t i = rlo; i < rhi; ++i) out[i].t = poses[i].t;
    if (n < 3) continue;  // cannot differentiate; stays invalid

    std::vector<Vec3> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g = rlo + i;
      if (i == 0) {
        raw[i] = (poses[g + 1].p - poses[g].p) / (poses[g + 1].t - poses[g].t);
      } else if (i == n - 1) {
        raw[i] = (poses[g].p - poses[g - 1].p) / (poses[g].t - poses[g - 1].t);
      } else {
        raw[i] = (poses[g + 1].p - poses[g - 1].p) /
                 (poses[g + 1].t - poses[g - 1].t);
      }
    }

    const bool smooth = n >= static_cast<std::size_t>(2 * half + 1);
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 v;
      if (!smooth) {
        v = raw[i];
      } else {
        v = Vec3::Zero();
        for (int k = -half; k <= half; ++k) {
          // Odd reflection about the run ends preserves linear trends.
          long j = static_cast<long>(i) + k;
          Vec3 sample;
          if (j < 0) {
            sample = 2.0 * raw[0] - raw[static_cast<std::size_t>(-j)];
          } else if (j >= static_cast<long>(n)) {
            const long r = 2 * static_cast<long>(n - 1) - j;
            sample = 2.0 * raw[n - 1] - raw[static_cast<std::size_t>(r)];
          } else {
            sample = raw[static_cast<std::size_t>(j)];
          }
          v += taps[static_cast<std::size_t>(k + half)] * sample;
        }
      }
      out[rlo + i].v = v;
      out[rlo + i].valid = true;
    }
  }
  return out;
}

struct NominalDelta {
  Vec3 alpha = Vec3::Zero();
  Vec3 beta = Vec3::Zero();
  Quat gamma = Quat::Identity();
  double dt = 0.0;
};

// Motion deltas between two posed/velocitied boundary states, expressed in
// the segment-start body frame with gravity re-added, directly comparable to
// pre-integrated IMU deltas:
//   alpha = R_wk^T (p_k1 - p_k - v_k dt + 0.5 g dt^2)
//   beta  = R_wk^T (v_k1 - v_k + g dt)
//   gamma = q_k^-1 * q_k1
inline NominalDelta nominal_deltas(const PoseSample& pose_k,
                                   const PoseSample& pose_k1, const Vec3& v_k,
                                   const Vec3& v_k1,
                                   const Vec3& g_w = Vec3(0, 0, 9.81)) {
  const double dt = pose_k1.t - pose_k.t;
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw DataError("nominal_deltas: non-positive boundary spacing");
  }
  const Mat3 rt = pose_k.q.toRotationMatrix().transpose();
  NominalDelta nd;
  nd.dt = dt;
  nd.alpha = rt * (pose_k1.p - pose_k.p - v_k * dt + 0.5 * g_w * dt * dt);
  nd.beta = rt * (v_k1 - v_k + g_w * dt);
  nd.gamma = normalized_canonical(quat_conjugate(pose_k.q) * pose_k1.q);
  return nd;
}

struct BiasSolveOptions {
  double cond_threshold = 1e8;
};

struct BiasSolveResult {
  Vec3 b_a = Vec3::Zero();
  Vec3 b_w = Vec3::Zero();
  Vec3 delta_ba = Vec3::Zero();  // correction relative to the prior
  Vec3 delta_bw = Vec3::Zero();
  double residual_before = 0.0;  // 9-vector norms
  double residual_after = 0.0;
  double cond = 0.0;
  bool valid = false;
  std::string reason;
};

// Solves the stacked 9x6 least-squares for the bias correction that maps the
// pre-integrated deltas onto the nominal ones:
//   [J_alpha_ba  J_alpha_bw] [d_ba]   [alpha_nom - alpha_hat]
//   [J_beta_ba   J_beta_bw ] [d_bw] = [beta_nom  - beta_hat ]
//   [    0       J_gamma_bw]          [2 vec(gamma_hat^-1 gamma_nom)]
// Returned biases are absolute (prior + correction).
inline BiasSolveResult solve_segment_bias(const NominalDelta& nominal,
                                          const PreintegratedDelta& hat,
                                          const BiasSolveOptions& opts = {}) {
  Eigen::Matrix<double, 9, 6> h = Eigen::Matrix<double, 9, 6>::Zero();
  h.block<3, 3>(0, 0) = hat.j_alpha_ba();
  h.block<3, 3>(0, 3) = hat.j_alpha_bw();
  h.block<3, 3>(3, 0) = hat.j_beta_ba();
  h.block<3, 3>(3, 3) = hat.j_beta_bw();
  h.block<3, 3>(6, 3) = hat.j_gamma_bw();

  Eigen::Matrix<double, 9, 1> r;
  r.segment<3>(0) = nominal.alpha - hat.alpha;
  r.segment<3>(3) = nominal.beta - hat.beta;
  const Quat q_rel =
      normalized_canonical(quat_conjugate(hat.gamma) * nominal.gamma);
  r.segment<3>(6) = 2.0 * q_rel.vec();

  BiasSolveResult out;
  out.residual_before = r.norm();
  if (!r.allFinite() || !h.allFinite()) {
    out.reason = "non-finite residual or Jacobian";
    return out;
  }

  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 6>> svd(
      h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(5) <= 0.0) {
    out.reason = "rank-deficient bias Jacobian";
    return out;
  }
  out.cond = sv(0) / sv(5);
  if (out.cond > opts.cond_threshold) {
    std::ostringstream os;
    os << "ill-conditioned bias solve (cond " << out.cond << ")";
    out.reason = os.str();
    return out;
  }
  const Eigen::Matrix<double, 6, 1> db = svd.solve(r);
  out.delta_ba = db.segment<3>(0);
  out.delta_bw = db.segment<3>(3);
  out.b_a = hat.bias.b_a + out.delta_ba;
  out.b_w = hat.bias.b_w + out.delta_bw;
  out.residual_after = (h * db - r).norm();
  out.valid = true;
  return out;
}

struct BiasRecord {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  Vec3 b_a = Vec3::Zero();
  Vec3 b_w = Vec3::Zero();
  double residual_before = 0.0;
  double residual_after = 0.0;
  double cond = 0.0;
  bool valid = false;
  std::string reason;  // empty when valid
};

namespace detail {

struct SegmentGather {
  std::vector<ImuSample> samples;
  std::string fail_reason;  // empty on success
  bool ok() const { return fail_reason.empty(); }
};

// Collects the IMU samples covering [t_start, t_end]. Boundaries that fall
// between samples within one period are patched with a zero-order hold;
// anything wider than two periods is reported as a gap.
inline SegmentGather gather_segment_imu(std::span<const ImuSample> imu,
                                        double t_start, double t_end,
                                        double imu_dt) {
  SegmentGather out;
  // Last sample at or before t_start (within jitter tolerance).
  auto it = std::upper_bound(
      imu.begin(), imu.end(), t_start + 1e-9,
      [](double v, const ImuSample& s) { return v < s.t; });
  std::size_t lo = (it == imu.begin())
                       ? 0
                       : static_cast<std::size_t>(it - imu.begin()) - 1;
  std::size_t hi = lo;
  while (hi + 1 < imu.size() && imu[hi + 1].t <= t_end + 1e-9) ++hi;

  out.samples.reserve(hi - lo + 3);
  if (imu[lo].t < t_start - 1e-9) {
    if (t_start - imu[lo].t > 2.0 * imu_dt) {
      out.fail_reason = "imu gap at segment start";
      return out;
    }
    ImuSample s = imu[lo];
    s.t = t_start;
    out.samples.push_back(s);
    for (std::size_t i = lo + 1; i <= hi; ++i) out.samples.push_back(imu[i]);
  } else {
    for (std::size_t i = lo; i <= hi; ++i) out.samples.push_back(imu[i]);
  }
  if (!out.samples.empty() && out.samples.back().t < t_end - 1e-9) {
    if (t_end - out.samples.back().t > 2.0 * imu_dt) {
      out.fail_reason = "imu gap at segment end";
      return out;
    }
    ImuSample s = out.samples.back();
    s.t = t_end;
    out.samples.push_back(s);
  }
  if (out.samples.size() < 8) {
    out.fail_reason = "too few imu samples in segment";
    return out;
  }
  for (std::size_t i = 1; i < out.samples.size(); ++i) {
    if (out.samples[i].t - out.samples[i - 1].t > 2.0 * imu_dt) {
      out.fail_reason = "imu gap inside segment";
      return out;
    }
  }
  return out;
}

}  // namespace detail

struct DeriveOptions {
  double segment_s = 0.5;
  Mat3 calib_r = Mat3::Identity();  // v_I = calib_r * v_H; identity = aligned
  Vec3 g_w = Vec3(0.0, 0.0, 9.81);
  bool chain_prior = true;  // warm-start each segment at the previous solution
  Quadrature quadrature = Quadrature::Midpoint;
  IncrementStyle increment = IncrementStyle::Auto;
  VelocityOptions velocity;
  BiasSolveOptions solve;
  double min_valid_fraction = 0.5;
};

struct DeriveReport {
  int n_segments = 0;
  int n_valid = 0;
  std::map<std::string, int> drop_reasons;
};

struct DeriveResult {
  std::vector<BiasRecord> records;
  DeriveReport report;
};

// Full derivation pipeline for one recording: applies the mount calibration
// to the pose stream, estimates boundary velocities, cuts the common overlap
// into segments snapped to pose timestamps, pre-integrates each at the prior
// bias, and solves per-segment corrections. Invalid segments are kept as
// flagged records so indices stay aligned with time.
inline DeriveResult derive_bias_sequence(std::span<const ImuSample> imu,
                                         std::span<const PoseSample> poses_h,
                                         const DeriveOptions& opts = {}) {
  if (imu.size() < 3 || poses_h.size() < 3) {
    throw DataError("derive_bias_sequence: streams too short");
  }
  // Rotate pose orientations into the IMU frame; positions are shared.
  const Quat q_ih = rot_to_quat(opts.calib_r);
  std::vector<PoseSample> poses(poses_h.begin(), poses_h.end());
  for (auto& ps : poses) {
    ps.q = normalized_canonical(ps.q * quat_conjugate(q_ih));
  }

  const auto vels = estimate_velocities(poses, opts.velocity);

  const double t0 = std::max(imu.front().t, poses.front().t);
  const double t1 = std::min(imu.back().t, poses.back().t);
  if (t1 - t0 < 2.0 * opts.segment_s) {
    throw DataError("derive_bias_sequence: streams share less than two segments");
  }

  // Segment boundaries: nearest pose sample to each ideal boundary time.
  auto nearest_pose = [&](double t) -> std::size_t {
    auto it = std::lower_bound(
        poses.begin(), poses.end(), t,
        [](const PoseSample& s, double v) { return s.t < v; });
    if (it == poses.end()) return poses.size() - 1;
    std::size_t i = static_cast<std::size_t>(it - poses.begin());
    if (i > 0 && (t - poses[i - 1].t) < (poses[i].t - t)) return i - 1;
    return i;
  };
  std::vector<std::size_t> bounds;
  const int n_seg_max =
      static_cast<int>(std::floor((t1 - t0) / opts.segment_s + 1e-9));
  for (int k = 0; k <= n_seg_max; ++k) {
    const std::size_t idx = nearest_pose(t0 + k * opts.segment_s);
    if (poses[idx].t > t1 + 1e-9) break;
    if (!bounds.empty() && idx <= bounds.back()) continue;
    bounds.push_back(idx);
  }
  if (bounds.size() < 2) {
    throw DataError("derive_bias_sequence: no complete segments in overlap");
  }

  const double imu_dt =
      (imu.back().t - imu.front().t) / static_cast<double>(imu.size() - 1);

  IntegrationOptions integ;
  integ.quadrature = opts.quadrature;
  integ.increment = opts.increment;
  integ.expected_duration = opts.segment_s;
  integ.duration_tolerance = 0.1;

  DeriveResult res;
  BiasEstimate prior;  // zero-initialized

  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const PoseSample& pk = poses[bounds[k]];
    const PoseSample& pk1 = poses[bounds[k + 1]];
    BiasRecord rec;
    rec.index = static_cast<int>(k);
    rec.t_start = pk.t;
    rec.t_end = pk1.t;

    auto invalidate = [&](const std::string& why) {
      rec.valid = false;
      rec.reason = why;
      res.report.drop_reasons[why] += 1;
    };

    if (std::abs((pk1.t - pk.t) - opts.segment_s) > 0.1 * opts.segment_s) {
      invalidate("segment span outside tolerance");
      res.records.push_back(rec);
      continue;
    }
    if (!vels[bounds[k]].valid || !vels[bounds[k + 1]].valid) {
      invalidate("pose gap at segment boundary");
      res.records.push_back(rec);
      continue;
    }

    // IMU samples covering [pk.t, pk1.t]; boundary alignment enforced to one
    // sample period, with zero-order-hold patches for sub-period misalignment.
    auto gathered = detail::gather_segment_imu(imu, pk.t, pk1.t, imu_dt);
    if (!gathered.ok()) {
      invalidate(gathered.fail_reason);
      res.records.push_back(rec);
      continue;
    }
    const std::vector<ImuSample>& seg = gathered.samples;

    const BiasEstimate b0 = opts.chain_prior ? prior : BiasEstimate{};
    PreintegratedDelta hat;
    try {
      hat = preintegrate_segment(seg, b0, integ);
    } catch (const Error& e) {
      invalidate(std::string("preintegration failed: ") + e.what());
      res.records.push_back(rec);
      continue;
    }
    const NominalDelta nom = nominal_deltas(pk, pk1, vels[bounds[k]].v,
                                            vels[bounds[k + 1]].v, opts.g_w);
    const BiasSolveResult sol = solve_segment_bias(nom, hat, opts.solve);
    rec.residual_before = sol.residual_before;
    rec.residual_after = sol.residual_after;
    rec.cond = sol.cond;
    if (!sol.valid) {
      invalidate(sol.reason);
      res.records.push_back(rec);
      continue;
    }
    rec.b_a = sol.b_a;
    rec.b_w = sol.b_w;
    rec.valid = true;
    res.records.push_back(rec);
    if (opts.chain_prior) prior = BiasEstimate{sol.b_a, sol.b_w};
    res.report.n_valid += 1;
  }
  res.report.n_segments = static_cast<int>(res.records.size());

  if (res.report.n_segments == 0 ||
      static_cast<double>(res.report.n_valid) / res.report.n_segments <
          opts.min_valid_fraction) {
    std::ostringstream os;
    os << "derive_bias_sequence: only " << res.report.n_valid << " of "
       << res.report.n_segments << " segments solvable";
    throw DataError(os.str());
  }
  return res;
}

}  // namespace inertia
