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

#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "inertia/calib.hpp"
#include "inertia/geom.hpp"
#include "inertia/rng.hpp"
#include "inertia/simkit.hpp"

using namespace inertia;

namespace {

Quat random_unit_quat(Rng& rng) {
  Quat q(rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian());
  q.normalize();
  return canonicalized(q);
}

Mat3 small_rotation(Rng& rng, double sigma_rad) {
  const Vec3 th(rng.gaussian(0.0, sigma_rad), rng.gaussian(0.0, sigma_rad),
                rng.gaussian(0.0, sigma_rad));
  return quat_from_small_angle(th).toRotationMatrix();
}

}  // namespace

TEST_CASE("orthogonal fit recovers exact rotations from clean pairs",
          "[calib]") {
  Rng rng(301);
  for (int trial = 0; trial < 50; ++trial) {
    Rng r = rng.derive("clean", static_cast<std::uint64_t>(trial));
    const Mat3 target = random_unit_quat(r).toRotationMatrix();
    std::vector<RotationPair> pairs(10);
    for (auto& p : pairs) {
      p.a = random_unit_quat(r).toRotationMatrix();
      p.b = target * p.a;
    }
    const auto res = procrustes_rotation(pairs);
    REQUIRE(geodesic_angle(rot_to_quat(res.rotation), rot_to_quat(target)) <
            1e-8);
    REQUIRE(res.rotation.determinant() > 0.0);
    REQUIRE(res.n_pairs == 10);
  }
}

TEST_CASE("orthogonal fit averages out pairwise observation noise", "[calib]") {
  Rng rng(302);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng r = rng.derive("noisy", static_cast<std::uint64_t>(trial));
    const Mat3 target = random_unit_quat(r).toRotationMatrix();
    std::vector<RotationPair> pairs(100);
    for (auto& p : pairs) {
      p.a = random_unit_quat(r).toRotationMatrix();
      p.b = small_rotation(r, deg_to_rad(0.5)) * target * p.a;
    }
    const auto res = procrustes_rotation(pairs);
    const double err =
        geodesic_angle(rot_to_quat(res.rotation), rot_to_quat(target));
    worst = std::max(worst, err);
  }
  REQUIRE(worst < deg_to_rad(0.3));
}

TEST_CASE("orthogonal fit refuses rank-deficient pair sets", "[calib]") {
  // Every observation constrains the same single direction; two axes of the
  // rotation stay free.
  Mat3 flat = Mat3::Zero();
  flat.col(0) = Vec3::UnitX();
  std::vector<RotationPair> pairs(5, RotationPair{flat, flat});
  REQUIRE_THROWS_AS(procrustes_rotation(pairs), DataError);

  std::vector<RotationPair> single(1);
  REQUIRE_THROWS_AS(procrustes_rotation(single), DataError);
}

TEST_CASE("orthogonal fit stays proper under reflection-inducing noise",
          "[calib]") {
  // Weakly-observed third axis whose observations all carry a sign flip: the
  // unconstrained optimum of the fit is a reflection, and the determinant
  // correction must pull the answer back onto SO(3).
  std::vector<RotationPair> pairs;
  for (int i = 0; i < 6; ++i) {
    Mat3 a = Mat3::Zero();
    a.col(0) = Vec3(std::cos(0.5 * i), std::sin(0.5 * i), 0.0);
    a.col(1) = Vec3(-std::sin(0.5 * i), std::cos(0.5 * i), 0.0);
    a.col(2) = 0.05 * Vec3::UnitZ();
    Mat3 b = a;
    b.col(2) = -b.col(2);
    pairs.push_back({a, b});
  }
  const auto res = procrustes_rotation(pairs);
  REQUIRE_THAT(res.rotation.determinant(), Catch::Matchers::WithinAbs(1.0, 1e-9));
  REQUIRE((res.rotation * res.rotation.transpose() - Mat3::Identity()).norm() <
          1e-9);
  // The well-observed plane wins: the fit lands on the identity.
  REQUIRE(geodesic_angle(rot_to_quat(res.rotation), Quat::Identity()) < 1e-9);
}

TEST_CASE("mount rotation is recovered from a synthetic misaligned recording",
          "[calib]") {
  RecordingSpec spec;
  spec.name = "calib-clean";
  spec.duration_s = 30.0;
  spec.seed = 7001;
  spec.profile = walk_profile();
  spec.profile.yaw_amp = 0.30;
  spec.profile.pitch_amp = 0.25;
  spec.profile.roll_amp = 0.20;
  const Vec3 mount_vec(0.18, -0.12, 0.25);
  spec.mount_q_hi = quat_from_small_angle(mount_vec, IncrementStyle::ExactExp);
  const Recording rec = simulate_recording(spec);

  // Expected solve: v_I = R_IH v_H with R_IH the transpose of the mount DCM.
  const Mat3 expect = spec.mount_q_hi.toRotationMatrix().transpose();

  ExcitationReport rep;
  const auto res = calibrate_mount(rec.poses, rec.imu, {}, &rep);
  REQUIRE(rep.n_pairs >= 3);
  REQUIRE(geodesic_angle(rot_to_quat(res.rotation), rot_to_quat(expect)) <
          deg_to_rad(0.05));
}

TEST_CASE("mount recovery tolerates sensor noise and bias", "[calib]") {
  RecordingSpec spec;
  spec.name = "calib-noisy";
  spec.duration_s = 60.0;
  spec.seed = 7002;
  spec.profile = walk_profile();
  spec.profile.yaw_amp = 0.30;
  spec.profile.pitch_amp = 0.25;
  spec.profile.roll_amp = 0.20;
  spec.noise.sigma_a = 0.02;
  spec.noise.sigma_w = 0.002;
  spec.bias.b_a0 = Vec3(0.05, -0.03, 0.02);
  spec.bias.b_w0 = Vec3(0.01, 0.005, -0.008);
  spec.mocap_sigma_q = deg_to_rad(0.05);
  spec.mount_q_hi =
      quat_from_small_angle(Vec3(-0.2, 0.15, 0.1), IncrementStyle::ExactExp);
  const Recording rec = simulate_recording(spec);

  const Mat3 expect = spec.mount_q_hi.toRotationMatrix().transpose();
  const auto res = calibrate_mount(rec.poses, rec.imu);
  REQUIRE(geodesic_angle(rot_to_quat(res.rotation), rot_to_quat(expect)) <
          deg_to_rad(1.0));
}

TEST_CASE("degenerate motion is reported as a data failure", "[calib]") {
  SECTION("static stream") {
    RecordingSpec spec;
    spec.duration_s = 20.0;
    spec.seed = 7003;
    spec.profile.speed = 0.0;
    spec.profile.bob_amp = 0.0;
    spec.profile.yaw_amp = 0.0;
    REQUIRE_THROWS_AS(
        [&] {
          const Recording rec = simulate_recording(spec);
          return calibrate_mount(rec.poses, rec.imu);
        }(),
        DataError);
  }
  SECTION("single-axis yaw sweep") {
    RecordingSpec spec;
    spec.duration_s = 20.0;
    spec.seed = 7004;
    spec.profile = walk_profile();
    spec.profile.yaw_amp = 0.4;  // yaw only: all rotation axes near z
    REQUIRE_THROWS_AS(
        [&] {
          const Recording rec = simulate_recording(spec);
          return calibrate_mount(rec.poses, rec.imu);
        }(),
        DataError);
  }
}
