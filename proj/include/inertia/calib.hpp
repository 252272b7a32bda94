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
// Rotational mount calibration between the mocap-tracked helmet frame H and
// the IMU sensor frame I.
//
// The solved rotation R maps helmet-frame coordinates of a vector to
// IMU-frame coordinates: v_I = R v_H. Matched observations come from
// relative-rotation axes: for any motion, the body-frame angular velocity
// (and hence any relative-rotation axis computed consistently on both sides)
// satisfies axis_I = R axis_H exactly, so consecutive non-parallel axes are
// orthonormalized into matched triads and fed to an orthogonal-Procrustes
// solve. Raw relative-rotation *matrices* of the two frames are related by
// conjugation (B = R A R^T), which a left-multiplication fit cannot invert;
// axis triads avoid that trap.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "inertia/errors.hpp"
#include "inertia/geom.hpp"
#include "inertia/log.hpp"
#include "inertia/preint.hpp"

namespace inertia {

// One matched observation: b ~ rotation * a.
struct RotationPair {
  Mat3 a = Mat3::Identity();
  Mat3 b = Mat3::Identity();
};

struct CalibrationResult {
  Mat3 rotation = Mat3::Identity();
  Vec3 singular_values = Vec3::Zero();  // of the cross-covariance sum
  double mean_pair_residual = 0.0;      // mean |b - R a|_F / |a|_F
  int n_pairs = 0;
};

// Orthogonal Procrustes fit of B_i ~ R A_i over matched 3x3 frames:
// maximizes sum_i tr(R^T B_i A_i^T) via the SVD of M = sum_i B_i A_i^T,
// R = U diag(1, 1, det(U V^T)) V^T. The determinant correction keeps R a
// proper rotation when noise pushes the unconstrained optimum toward a
// reflection.
inline CalibrationResult procrustes_rotation(std::span<const RotationPair> pairs) {
  if (pairs.size() < 2) {
    throw DataError("procrustes_rotation: needs at least 2 matched pairs");
  }
  Mat3 m = Mat3::Zero();
  for (const auto& p : pairs) {
    if (!p.a.allFinite() || !p.b.allFinite()) {
      throw NumericalError("procrustes_rotation: non-finite pair");
    }
    m += p.b * p.a.transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(2) < 1e-9 * sv(0)) {
    throw DataError(
        "procrustes_rotation: degenerate pair set (rank-deficient "
        "cross-covariance); rotational excitation is insufficient");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  const double d = (u * v.transpose()).determinant();
  Mat3 s = Mat3::Identity();
  s(2, 2) = (d < 0.0) ? -1.0 : 1.0;
  CalibrationResult out;
  out.rotation = u * s * v.transpose();
  out.singular_values = sv;
  out.n_pairs = static_cast<int>(pairs.size());
  double acc = 0.0;
  for (const auto& p : pairs) {
    acc += (p.b - out.rotation * p.a).norm() / std::max(p.a.norm(), 1e-12);
  }
  out.mean_pair_residual = acc / static_cast<double>(pairs.size());
  return out;
}

struct PairBuildOptions {
  double window_s = 1.0;        // relative-rotation window length
  double stride_s = 0.5;        // window start spacing
  double min_angle_rad = 0.15;  // minimum rotation magnitude per window
  // Minimum angle between consecutive axes (after folding antiparallel
  // directions) for a triad to be well-conditioned.
  double min_axis_separation_rad = 0.25;
  int min_pairs = 3;
};

struct ExcitationReport {
  int n_windows = 0;
  int n_moving_windows = 0;  // windows that passed the min-angle gate
  int n_pairs = 0;
  double max_axis_spread_rad = 0.0;  // largest angle between accepted axes
};

namespace detail {

// Angle between undirected axes (u and -u are the same axis).
inline double axis_separation(const Vec3& u, const Vec3& v) {
  const double c = std::abs(u.normalized().dot(v.normalized()));
  return std::acos(std::min(1.0, c));
}

}  // namespace detail

struct PoseSample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();  // q_WB, body-to-world
};

// Builds matched rotation-axis triads from a helmet pose stream and the raw
// gyro stream. Per window: the helmet side takes the relative-rotation axis
// from mocap, the IMU side integrates the gyro (zero bias; bias is small
// against the required excitation). Consecutive well-separated axis pairs are
// Gram-Schmidt-orthonormalized into matched frames. Throws a data error when
// the motion cannot constrain all three axes (static stream, single-axis
// motion).
inline std::vector<RotationPair> build_calibration_pairs(
    std::span<const PoseSample> helmet_poses,
    std::span<const ImuSample> imu, const PairBuildOptions& opts,
    ExcitationReport* report = nullptr) {
  if (helmet_poses.size() < 3 || imu.size() < 3) {
    throw DataError("build_calibration_pairs: streams too short");
  }
  ExcitationReport rep;

  // Helmet-side pose lookup by nearest timestamp (poses are dense).
  auto pose_at = [&](double t) -> const PoseSample& {
    auto it = std::lower_bound(
        helmet_poses.begin(), helmet_poses.end(), t,
        [](const PoseSample& s, double v) { return s.t < v; });
    if (it == helmet_poses.end()) return helmet_poses.back();
    if (it != helmet_poses.begin() &&
        (t - std::prev(it)->t) < (it->t - t)) {
      return *std::prev(it);
    }
    return *it;
  };

  const double t0 = std::max(helmet_poses.front().t, imu.front().t);
  const double t1 = std::min(helmet_poses.back().t, imu.back().t);
  if (t1 - t0 < 2.0 * opts.window_s) {
    throw DataError("build_calibration_pairs: overlap shorter than two windows");
  }

  struct AxisObs {
    Vec3 helmet;
    Vec3 imu;
  };
  std::vector<AxisObs> axes;

  IntegrationOptions gyro_opts;
  gyro_opts.quadrature = Quadrature::Midpoint;
  gyro_opts.increment = IncrementStyle::ExactExp;
  gyro_opts.expected_duration = 0.0;

  std::size_t imu_lo = 0;
  for (double ws = t0; ws + opts.window_s <= t1 + 1e-9; ws += opts.stride_s) {
    const double we = ws + opts.window_s;
    rep.n_windows += 1;

    const PoseSample& pa = pose_at(ws);
    const PoseSample& pb = pose_at(we);
    const Quat rel_h = normalized_canonical(quat_conjugate(pa.q) * pb.q);
    const Vec3 log_h = quat_log_vec(rel_h);
    const double ang_h = log_h.norm();
    if (ang_h < opts.min_angle_rad) continue;

    // Matching IMU-side rotation over the same wall-clock window.
    while (imu_lo + 1 < imu.size() && imu[imu_lo + 1].t <= pa.t) ++imu_lo;
    std::size_t hi = imu_lo;
    while (hi + 1 < imu.size() && imu[hi + 1].t <= pb.t + 1e-9) ++hi;
    if (hi <= imu_lo + 1) continue;
    Preintegrator integ(BiasEstimate{}, gyro_opts);
    for (std::size_t i = imu_lo; i < hi; ++i) integ.step(imu[i], imu[i + 1]);
    const Vec3 log_i = quat_log_vec(integ.delta().gamma);
    if (log_i.norm() < 0.5 * opts.min_angle_rad) continue;

    rep.n_moving_windows += 1;
    axes.push_back({log_h / ang_h, log_i.normalized()});
  }

  std::vector<RotationPair> pairs;
  for (std::size_t i = 0; i + 1 < axes.size(); ++i) {
    const Vec3& u1 = axes[i].helmet;
    const Vec3& u2 = axes[i + 1].helmet;
    const double sep = detail::axis_separation(u1, u2);
    rep.max_axis_spread_rad = std::max(rep.max_axis_spread_rad, sep);
    if (sep < opts.min_axis_separation_rad) continue;

    auto triad = [](const Vec3& x1, const Vec3& x2) {
      Mat3 t;
      const Vec3 e1 = x1.normalized();
      const Vec3 e2 = (x2 - e1.dot(x2) * e1).normalized();
      const Vec3 e3 = e1.cross(e2);
      t.col(0) = e1;
      t.col(1) = e2;
      t.col(2) = e3;
      return t;
    };
    RotationPair p;
    p.a = triad(u1, u2);
    p.b = triad(axes[i].imu, axes[i + 1].imu);
    pairs.push_back(p);
  }

  rep.n_pairs = static_cast<int>(pairs.size());
  if (report != nullptr) *report = rep;
  if (static_cast<int>(pairs.size()) < opts.min_pairs) {
    std::ostringstream os;
    os << "build_calibration_pairs: degenerate motion, only " << pairs.size()
       << " well-conditioned axis pairs (need >= " << opts.min_pairs
       << "); rotate the head about at least two distinct axes";
    throw DataError(os.str());
  }
  return pairs;
}

// Convenience: pairs + solve in one call.
inline CalibrationResult calibrate_mount(std::span<const PoseSample> helmet_poses,
                                         std::span<const ImuSample> imu,
                                         const PairBuildOptions& opts = {},
                                         ExcitationReport* report = nullptr) {
  const auto pairs = build_calibration_pairs(helmet_poses, imu, opts, report);
  return procrustes_rotation(pairs);
}

}  // namespace inertia
