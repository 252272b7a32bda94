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
// Synthetic head-motion oracle.
//
// Generates analytically differentiable head trajectories (gait-driven bob,
// yaw sway, optional pitch/roll sway, stair climb), then synthesizes IMU and
// mocap streams from them. Because position, velocity, specific force, and
// body rates all come from closed-form derivatives of the same trajectory,
// every downstream estimate can be checked against exact ground truth.
//
// Frames: world W is z-up with gravity vector g_w = (0, 0, +9.81) appearing
// in the accelerometer model f = R_WB^T (p_ddot + g_w) (a static sensor
// reads +9.81 on its up axis). H is the mocap-tracked helmet frame, I the
// IMU sensor frame; a constant mount rotation R_HI (I axes in H coordinates)
// separates them, and poses.csv stores q_WH while imu.csv is in I axes.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "inertia/calib.hpp"
#include "inertia/errors.hpp"
#include "inertia/geom.hpp"
#include "inertia/preint.hpp"
#include "inertia/rng.hpp"

namespace inertia {

struct MotionProfile {
  double speed = 1.4;       // forward speed [m/s]
  double stride_hz = 1.8;   // gait frequency [Hz]
  double bob_amp = 0.03;    // vertical bob amplitude [m], at 2x stride
  double yaw_amp = 0.20;    // heading sway amplitude [rad], at stride rate
  double pitch_amp = 0.0;   // optional pitch sway [rad]
  double roll_amp = 0.0;    // optional roll sway [rad]
  double stair_rise = 0.0;  // climb per stride [m]; > 4*pi*bob_amp keeps
                            // z strictly increasing
  double height = 1.7;      // initial head height [m]
};

// Named presets used by the config layer and tests.
inline MotionProfile walk_profile() {
  MotionProfile p;
  p.speed = 1.4;
  p.stride_hz = 1.8;
  p.bob_amp = 0.03;
  p.yaw_amp = 0.20;
  return p;
}

inline MotionProfile run_profile() {
  MotionProfile p;
  p.speed = 3.0;
  p.stride_hz = 2.6;
  p.bob_amp = 0.05;
  p.yaw_amp = 0.12;
  return p;
}

inline MotionProfile stairs_profile() {
  MotionProfile p;
  p.speed = 0.6;
  p.stride_hz = 1.5;
  p.bob_amp = 0.01;
  p.yaw_amp = 0.10;
  p.stair_rise = 0.17;
  return p;
}

struct TrueState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a_world = Vec3::Zero();   // coordinate acceleration p_ddot
  Quat q = Quat::Identity();     // q_WH
  Vec3 omega_body = Vec3::Zero();  // angular rate in H axes
};

namespace detail {

struct AngleFactor {
  Vec3 axis;
  double amp;
  double freq_hz;
  double phase;

  double angle(double t) const {
    return amp * std::sin(2.0 * M_PI * freq_hz * t + phase);
  }
  double rate(double t) const {
    return amp * 2.0 * M_PI * freq_hz * std::cos(2.0 * M_PI * freq_hz * t + phase);
  }
  Quat q(double t) const {
    const double half = 0.5 * angle(t);
    const Vec3 v = std::sin(half) * axis;
    return Quat(std::cos(half), v.x(), v.y(), v.z());
  }
  // Raw time derivative of q (not unit; plain quaternion algebra).
  Quat dq(double t) const {
    const double half = 0.5 * angle(t);
    const double c = 0.5 * rate(t);
    const Vec3 v = c * std::cos(half) * axis;
    return Quat(-c * std::sin(half), v.x(), v.y(), v.z());
  }
};

inline Quat qmul_raw(const Quat& a, const Quat& b) { return a * b; }

inline Quat qadd(const Quat& a, const Quat& b) {
  return Quat(a.w() + b.w(), a.x() + b.x(), a.y() + b.y(), a.z() + b.z());
}

}  // namespace detail

// Exact trajectory state at time t: closed-form position/velocity/
// acceleration, and body rates from the analytic quaternion derivative
// omega = 2 vec(q^-1 dq/dt).
inline TrueState sample_true_state(const MotionProfile& mp, double t) {
  TrueState s;
  const double f = mp.stride_hz;
  const double wb = 2.0 * M_PI * (2.0 * f);  // bob angular frequency
  const double climb_rate = mp.stair_rise * f;

  s.p = Vec3(mp.speed * t, 0.0,
             mp.height + mp.bob_amp * std::sin(wb * t) + climb_rate * t);
  s.v = Vec3(mp.speed, 0.0, mp.bob_amp * wb * std::cos(wb * t) + climb_rate);
  s.a_world = Vec3(0.0, 0.0, -mp.bob_amp * wb * wb * std::sin(wb * t));

  const detail::AngleFactor yaw{Vec3::UnitZ(), mp.yaw_amp, f, 0.0};
  const detail::AngleFactor pitch{Vec3::UnitY(), mp.pitch_amp, 0.7 * f, 1.3};
  const detail::AngleFactor roll{Vec3::UnitX(), mp.roll_amp, 1.3 * f, 0.7};

  const Quat q1 = yaw.q(t), q2 = pitch.q(t), q3 = roll.q(t);
  const Quat q = q1 * q2 * q3;
  const Quat dq = detail::qadd(
      detail::qadd((yaw.dq(t) * q2) * q3, (q1 * pitch.dq(t)) * q3),
      (q1 * q2) * roll.dq(t));
  const Quat qi = quat_conjugate(q);
  const Quat w = qi * dq;  // (0, omega/2) up to numerical dust in w()
  s.q = normalized_canonical(q);
  s.omega_body = 2.0 * w.vec();
  return s;
}

struct BiasSpec {
  std::string mode = "constant";  // "constant" | "random_walk"
  Vec3 b_a0 = Vec3::Zero();
  Vec3 b_w0 = Vec3::Zero();
  double walk_sigma_ba = 0.0;  // [m/s^2 / sqrt(s)]
  double walk_sigma_bw = 0.0;  // [rad/s / sqrt(s)]
};

struct RecordingSpec {
  std::string name = "rec";
  std::string participant = "A";
  std::string activity = "walk";     // tag only; profile carries the physics
  std::string imu_source = "sim";    // tag for cross-sensor splits
  MotionProfile profile;
  double duration_s = 60.0;
  double imu_rate_hz = 200.0;
  double pose_rate_hz = 50.0;
  BiasSpec bias;
  NoiseModel noise;                  // white-noise sigmas, per sample
  double mocap_sigma_p = 0.0;        // optional mocap position jitter [m]
  double mocap_sigma_q = 0.0;        // optional mocap attitude jitter [rad]
  Quat mount_q_hi = Quat::Identity();  // q of R_HI; identity = aligned
  Vec3 g_w = Vec3(0.0, 0.0, 9.81);
  std::uint64_t seed = 0;
};

struct BiasSample {
  double t = 0.0;
  Vec3 b_a = Vec3::Zero();
  Vec3 b_w = Vec3::Zero();
};

struct Recording {
  RecordingSpec spec;
  std::vector<ImuSample> imu;         // IMU axes (frame I)
  std::vector<PoseSample> poses;      // q_WH, helmet frame
  std::vector<BiasSample> true_bias;  // at IMU rate, IMU axes
  std::vector<PoseSample> true_vel;   // p field holds velocity; q unused
};

// Synthesizes one recording. All randomness flows from spec.seed through
// tagged child streams, so identical specs give identical streams.
inline Recording simulate_recording(const RecordingSpec& spec) {
  if (spec.duration_s <= 0.0 || spec.imu_rate_hz <= 0.0 ||
      spec.pose_rate_hz <= 0.0) {
    throw ConfigError("simulate_recording: rates and duration must be positive");
  }
  if (spec.bias.mode != "constant" && spec.bias.mode != "random_walk") {
    throw ConfigError("simulate_recording: unknown bias mode '" +
                      spec.bias.mode + "'");
  }
  Recording rec;
  rec.spec = spec;

  const Rng root(spec.seed);
  Rng rng_imu = root.derive("imu-noise");
  Rng rng_walk = root.derive("bias-walk");
  Rng rng_mocap = root.derive("mocap-noise");

  const double dt = 1.0 / spec.imu_rate_hz;
  const auto n_imu = static_cast<std::size_t>(
      std::llround(spec.duration_s * spec.imu_rate_hz)) + 1;
  const Mat3 r_hi = spec.mount_q_hi.toRotationMatrix();
  const Mat3 r_ih = r_hi.transpose();

  // Bias trajectory at IMU rate.
  rec.true_bias.resize(n_imu);
  Vec3 ba = spec.bias.b_a0;
  Vec3 bw = spec.bias.b_w0;
  const double step_a = spec.bias.walk_sigma_ba * std::sqrt(dt);
  const double step_w = spec.bias.walk_sigma_bw * std::sqrt(dt);
  for (std::size_t i = 0; i < n_imu; ++i) {
    rec.true_bias[i] = {static_cast<double>(i) * dt, ba, bw};
    if (spec.bias.mode == "random_walk") {
      ba += Vec3(rng_walk.gaussian(), rng_walk.gaussian(), rng_walk.gaussian()) * step_a;
      bw += Vec3(rng_walk.gaussian(), rng_walk.gaussian(), rng_walk.gaussian()) * step_w;
    }
  }

  rec.imu.resize(n_imu);
  for (std::size_t i = 0; i < n_imu; ++i) {
    const double t = static_cast<double>(i) * dt;
    const TrueState ts = sample_true_state(spec.profile, t);
    const Mat3 r_wh = ts.q.toRotationMatrix();
    const Vec3 f_h = r_wh.transpose() * (ts.a_world + spec.g_w);
    Vec3 accel = r_ih * f_h + rec.true_bias[i].b_a;
    Vec3 gyro = r_ih * ts.omega_body + rec.true_bias[i].b_w;
    if (spec.noise.sigma_a > 0.0) {
      accel += Vec3(rng_imu.gaussian(), rng_imu.gaussian(), rng_imu.gaussian()) *
               spec.noise.sigma_a;
    }
    if (spec.noise.sigma_w > 0.0) {
      gyro += Vec3(rng_imu.gaussian(), rng_imu.gaussian(), rng_imu.gaussian()) *
              spec.noise.sigma_w;
    }
    rec.imu[i] = {t, accel, gyro};
  }

  const double pdt = 1.0 / spec.pose_rate_hz;
  const auto n_pose = static_cast<std::size_t>(
      std::llround(spec.duration_s * spec.pose_rate_hz)) + 1;
  rec.poses.resize(n_pose);
  rec.true_vel.resize(n_pose);
  for (std::size_t i = 0; i < n_pose; ++i) {
    const double t = static_cast<double>(i) * pdt;
    const TrueState ts = sample_true_state(spec.profile, t);
    Vec3 p = ts.p;
    Quat q = ts.q;
    if (spec.mocap_sigma_p > 0.0) {
      p += Vec3(rng_mocap.gaussian(), rng_mocap.gaussian(), rng_mocap.gaussian()) *
           spec.mocap_sigma_p;
    }
    if (spec.mocap_sigma_q > 0.0) {
      const Vec3 th = Vec3(rng_mocap.gaussian(), rng_mocap.gaussian(),
                           rng_mocap.gaussian()) * spec.mocap_sigma_q;
      q = normalized_canonical(q * quat_from_small_angle(th));
    }
    rec.poses[i] = {t, p, normalized_canonical(q)};
    rec.true_vel[i] = {t, ts.v, Quat::Identity()};
  }
  return rec;
}

}  // namespace inertia
