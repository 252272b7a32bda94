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
// IMU pre-integration over short segments.
//
// Given accelerometer/gyro samples and a bias linearization point, this
// accumulates gravity-free body-frame deltas relative to the segment-start
// frame b_k:
//   alpha : position delta [m]
//   beta  : velocity delta [m/s]
//   gamma : rotation delta (q at segment start -> current), unit quaternion
// together with the 15x15 error-state Jacobian in the order
//   [d_alpha, d_beta, d_theta, d_b_a, d_b_w]
// whose bias columns linearize the deltas around the integration bias.
//
// The Jacobian recursion multiplies the exact per-interval derivative of the
// discrete update (not a continuous-time approximation), so its bias blocks
// match finite differences of the integrator itself to first order in the
// bias perturbation.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "inertia/errors.hpp"
#include "inertia/geom.hpp"
#include "inertia/log.hpp"

namespace inertia {

struct ImuSample {
  double t = 0.0;  // seconds
  Vec3 accel = Vec3::Zero();  // specific force, body frame [m/s^2]
  Vec3 gyro = Vec3::Zero();   // angular rate, body frame [rad/s]
};

struct BiasEstimate {
  Vec3 b_a = Vec3::Zero();  // accelerometer bias [m/s^2]
  Vec3 b_w = Vec3::Zero();  // gyroscope bias [rad/s]
};

// Sigmas for accel/gyro are per-sample standard deviations at the stream
// rate; bias walk sigmas are per-sqrt-second densities.
struct NoiseModel {
  double sigma_a = 0.0;
  double sigma_w = 0.0;
  double walk_sigma_ba = 0.0;
  double walk_sigma_bw = 0.0;
};

enum class Quadrature {
  LeftSample,  // interval uses the left endpoint's measurement
  Midpoint,    // interval averages both endpoints (rotation-aware for accel)
};

struct IntegrationOptions {
  Quadrature quadrature = Quadrature::LeftSample;
  IncrementStyle increment = IncrementStyle::FirstOrder;
  // Expected segment span in seconds (relative tolerance below); 0 disables
  // the check for callers integrating arbitrary spans.
  double expected_duration = 0.5;
  double duration_tolerance = 0.1;
  bool propagate_covariance = false;
  NoiseModel noise;
};

using Mat15 = Eigen::Matrix<double, 15, 15>;

// Error-state block offsets.
inline constexpr int kIdxAlpha = 0;
inline constexpr int kIdxBeta = 3;
inline constexpr int kIdxTheta = 6;
inline constexpr int kIdxBa = 9;
inline constexpr int kIdxBw = 12;

struct PreintegratedDelta {
  Vec3 alpha = Vec3::Zero();
  Vec3 beta = Vec3::Zero();
  Quat gamma = Quat::Identity();
  Mat15 jacobian = Mat15::Identity();
  Mat15 covariance = Mat15::Zero();
  double dt_total = 0.0;
  int n_intervals = 0;
  BiasEstimate bias;  // linearization point the deltas were integrated at

  Mat3 j_alpha_ba() const { return jacobian.block<3, 3>(kIdxAlpha, kIdxBa); }
  Mat3 j_alpha_bw() const { return jacobian.block<3, 3>(kIdxAlpha, kIdxBw); }
  Mat3 j_beta_ba() const { return jacobian.block<3, 3>(kIdxBeta, kIdxBa); }
  Mat3 j_beta_bw() const { return jacobian.block<3, 3>(kIdxBeta, kIdxBw); }
  Mat3 j_gamma_bw() const { return jacobian.block<3, 3>(kIdxTheta, kIdxBw); }
};

namespace detail {

// Rotation-vector derivative of the quaternion increment map for one
// interval, by increment style. phi = (gyro - b_w) * dt.
inline Mat3 increment_jacobian(const Vec3& phi, IncrementStyle style) {
  IncrementStyle chosen = style;
  if (style == IncrementStyle::Auto) {
    chosen = (phi.norm() <= 1e-4) ? IncrementStyle::FirstOrder
                                  : IncrementStyle::ExactExp;
  }
  if (chosen == IncrementStyle::FirstOrder) {
    return first_order_increment_jacobian(phi);
  }
  return so3_right_jacobian(phi);
}

}  // namespace detail

// Incremental pre-integrator. Feed consecutive sample pairs; each call
// integrates the interval [start.t, end.t].
class Preintegrator {
 public:
  Preintegrator(const BiasEstimate& bias, const IntegrationOptions& opts)
      : opts_(opts) {
    delta_.bias = bias;
  }

  void step(const ImuSample& start, const ImuSample& end) {
    const double dt = end.t - start.t;
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw DataError("preintegration: non-increasing sample timestamps");
    }
    if (!is_finite(start.accel) || !is_finite(start.gyro) ||
        !is_finite(end.accel) || !is_finite(end.gyro)) {
      throw DataError("preintegration: non-finite IMU sample");
    }
    if (opts_.quadrature == Quadrature::LeftSample) {
      step_impl(start.accel, start.gyro, start.accel, start.gyro, dt, false);
    } else {
      step_impl(start.accel, start.gyro, end.accel, end.gyro, dt, true);
    }
    delta_.dt_total += dt;
    delta_.n_intervals += 1;
  }

  const PreintegratedDelta& delta() const { return delta_; }

 private:
  void step_impl(const Vec3& a0, const Vec3& w0, const Vec3& a1,
                 const Vec3& w1, double dt, bool midpoint) {
    const Vec3 u0 = a0 - delta_.bias.b_a;
    const Vec3 u1 = a1 - delta_.bias.b_a;
    const Vec3 w_eff = midpoint ? Vec3(0.5 * (w0 + w1)) : w0;
    const Vec3 phi = (w_eff - delta_.bias.b_w) * dt;

    const Mat3 r0 = delta_.gamma.toRotationMatrix();
    const Quat inc = quat_from_small_angle(phi, opts_.increment);
    const Quat gamma_new = canonicalized((delta_.gamma * inc).normalized());
    const Mat3 r1 = gamma_new.toRotationMatrix();
    const Mat3 g_inc = detail::increment_jacobian(phi, opts_.increment);
    const Mat3 inc_rt = inc.toRotationMatrix().transpose();

    // Exact per-interval derivative of the discrete update below.
    Mat15 a = Mat15::Identity();
    a.block<3, 3>(kIdxTheta, kIdxTheta) = inc_rt;
    a.block<3, 3>(kIdxTheta, kIdxBw) = -g_inc * dt;

    Vec3 accum;           // world-of-b_k frame specific-force estimate
    Mat3 d_accum_dtheta;  // sensitivity to the pre-step attitude error
    Mat3 d_accum_dba;
    Mat3 d_accum_dbw;
    if (midpoint) {
      accum = 0.5 * (r0 * u0 + r1 * u1);
      const Mat3 r1u1x = r1 * skew(u1);
      d_accum_dtheta = -0.5 * (r0 * skew(u0) + r1u1x * inc_rt);
      d_accum_dba = -0.5 * (r0 + r1);
      d_accum_dbw = -r1u1x * a.block<3, 3>(kIdxTheta, kIdxBw) * 0.5;
    } else {
      accum = r0 * u0;
      d_accum_dtheta = -r0 * skew(u0);
      d_accum_dba = -r0;
      d_accum_dbw = Mat3::Zero();
    }

    a.block<3, 3>(kIdxAlpha, kIdxBeta) = Mat3::Identity() * dt;
    a.block<3, 3>(kIdxAlpha, kIdxTheta) = 0.5 * dt * dt * d_accum_dtheta;
    a.block<3, 3>(kIdxAlpha, kIdxBa) = 0.5 * dt * dt * d_accum_dba;
    a.block<3, 3>(kIdxAlpha, kIdxBw) = 0.5 * dt * dt * d_accum_dbw;
    a.block<3, 3>(kIdxBeta, kIdxTheta) = dt * d_accum_dtheta;
    a.block<3, 3>(kIdxBeta, kIdxBa) = dt * d_accum_dba;
    a.block<3, 3>(kIdxBeta, kIdxBw) = dt * d_accum_dbw;

    delta_.jacobian = (a * delta_.jacobian).eval();

    if (opts_.propagate_covariance) {
      // First-order noise injection: accel noise into alpha/beta, gyro noise
      // into theta, bias random walks into their own blocks.
      Mat15 q = Mat15::Zero();
      const double sa2 = opts_.noise.sigma_a * opts_.noise.sigma_a;
      const double sw2 = opts_.noise.sigma_w * opts_.noise.sigma_w;
      const Mat3 rn = midpoint ? Mat3(0.5 * (r0 + r1)) : r0;
      const Mat3 raa = rn * rn.transpose() * sa2;
      q.block<3, 3>(kIdxAlpha, kIdxAlpha) = 0.25 * dt * dt * dt * dt * raa;
      q.block<3, 3>(kIdxAlpha, kIdxBeta) = 0.5 * dt * dt * dt * raa;
      q.block<3, 3>(kIdxBeta, kIdxAlpha) = 0.5 * dt * dt * dt * raa;
      q.block<3, 3>(kIdxBeta, kIdxBeta) = dt * dt * raa;
      q.block<3, 3>(kIdxTheta, kIdxTheta) =
          g_inc * g_inc.transpose() * sw2 * dt * dt;
      q.block<3, 3>(kIdxBa, kIdxBa) =
          Mat3::Identity() * opts_.noise.walk_sigma_ba *
          opts_.noise.walk_sigma_ba * dt;
      q.block<3, 3>(kIdxBw, kIdxBw) =
          Mat3::Identity() * opts_.noise.walk_sigma_bw *
          opts_.noise.walk_sigma_bw * dt;
      delta_.covariance =
          (a * delta_.covariance * a.transpose() + q).eval();
    }

    delta_.alpha += delta_.beta * dt + 0.5 * accum * dt * dt;
    delta_.beta += accum * dt;
    delta_.gamma = gamma_new;
  }

  IntegrationOptions opts_;
  PreintegratedDelta delta_;
};

// One left-sample Jacobian propagation step applied to `state`: returns the
// updated 15x15 for the interval [sample.t, sample.t + dt] integrated at
// `bias`. The incremental class above uses the same transition internally.
inline Mat15 propagate_jacobian(const PreintegratedDelta& state,
                                const ImuSample& sample,
                                const BiasEstimate& bias, double dt,
                                IncrementStyle style = IncrementStyle::FirstOrder) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw DataError("propagate_jacobian: dt must be positive and finite");
  }
  const Vec3 u = sample.accel - bias.b_a;
  const Vec3 phi = (sample.gyro - bias.b_w) * dt;
  const Mat3 r0 = state.gamma.toRotationMatrix();
  const Quat inc = quat_from_small_angle(phi, style);
  const Mat3 g_inc = detail::increment_jacobian(phi, style);

  Mat15 a = Mat15::Identity();
  a.block<3, 3>(kIdxAlpha, kIdxBeta) = Mat3::Identity() * dt;
  a.block<3, 3>(kIdxAlpha, kIdxTheta) = -0.5 * dt * dt * r0 * skew(u);
  a.block<3, 3>(kIdxAlpha, kIdxBa) = -0.5 * dt * dt * r0;
  a.block<3, 3>(kIdxBeta, kIdxTheta) = -dt * r0 * skew(u);
  a.block<3, 3>(kIdxBeta, kIdxBa) = -dt * r0;
  a.block<3, 3>(kIdxTheta, kIdxTheta) = inc.toRotationMatrix().transpose();
  a.block<3, 3>(kIdxTheta, kIdxBw) = -g_inc * dt;
  return a * state.jacobian;
}

// Integrates one segment of consecutive samples. Timestamps must be strictly
// increasing; the span must match opts.expected_duration within the relative
// tolerance (unless expected_duration == 0).
inline PreintegratedDelta preintegrate_segment(
    std::span<const ImuSample> samples, const BiasEstimate& bias,
    const IntegrationOptions& opts = {}) {
  if (samples.size() < 2) {
    throw DataError("preintegrate_segment: needs at least 2 samples");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw DataError("preintegrate_segment: timestamps not strictly increasing");
    }
  }
  const double span = samples.back().t - samples.front().t;
  if (opts.expected_duration > 0.0) {
    const double rel = std::abs(span - opts.expected_duration) /
                       opts.expected_duration;
    if (rel > opts.duration_tolerance) {
      std::ostringstream os;
      os << "preintegrate_segment: span " << span << " s outside "
         << opts.expected_duration << " s +/- "
         << opts.duration_tolerance * 100.0 << "%";
      throw DataError(os.str());
    }
  }
  Preintegrator integ(bias, opts);
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    integ.step(samples[i], samples[i + 1]);
  }
  return integ.delta();
}

struct CorrectedDelta {
  Vec3 alpha = Vec3::Zero();
  Vec3 beta = Vec3::Zero();
  Quat gamma = Quat::Identity();
};

// First-order re-linearization of the deltas at a perturbed bias
// (b_a + d_ba, b_w + d_bw) without re-integrating. gamma picks up the
// quaternion increment built from half the rotation-vector correction.
// Corrections beyond warn_threshold (SI units) leave the trust region of the
// linearization and are logged.
inline CorrectedDelta apply_bias_correction(const PreintegratedDelta& d,
                                            const Vec3& d_ba, const Vec3& d_bw,
                                            double warn_threshold = 0.1) {
  if (!is_finite(d_ba) || !is_finite(d_bw)) {
    throw NumericalError("apply_bias_correction: non-finite bias correction");
  }
  if (d_ba.norm() > warn_threshold || d_bw.norm() > warn_threshold) {
    std::ostringstream os;
    os << "apply_bias_correction: large correction |d_ba|=" << d_ba.norm()
       << " |d_bw|=" << d_bw.norm() << " exceeds trust threshold "
       << warn_threshold;
    log::warn(os.str());
  }
  CorrectedDelta out;
  out.alpha = d.alpha + d.j_alpha_ba() * d_ba + d.j_alpha_bw() * d_bw;
  out.beta = d.beta + d.j_beta_ba() * d_ba + d.j_beta_bw() * d_bw;
  out.gamma = quat_mul(d.gamma,
                       quat_from_small_angle(d.j_gamma_bw() * d_bw));
  return out;
}

}  // namespace inertia
