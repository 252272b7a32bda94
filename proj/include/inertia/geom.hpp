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
// Quaternion and SO(3) helpers.
//
// Conventions, used consistently everywhere in this library:
//  * Hamilton quaternions, scalar-first notation q = (w, x, y, z).
//  * q_WB rotates body-frame vectors into the world frame:
//      v_w = R(q_WB) v_b,  R(q_WB) = quat_to_rot(q_WB).
//  * Canonical sign: w >= 0 after every normalization, so round trips and
//    serialized output are deterministic.
//  * Rotation vectors ("small angles") are body-frame, right-multiplied:
//      q_perturbed = q * quat_from_small_angle(theta).

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "inertia/errors.hpp"

namespace inertia {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline bool is_finite(const Vec3& v) { return v.allFinite(); }
inline bool is_finite(const Quat& q) { return q.coeffs().allFinite(); }

// Flips sign so w >= 0. Both signs encode the same rotation; the canonical
// representative keeps serialization and tests deterministic.
inline Quat canonicalized(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

inline Quat normalized_canonical(const Quat& q) {
  Quat n = q.normalized();
  return canonicalized(n);
}

// Hamilton product a * b. Inputs must be finite and unit within 1e-6.
inline Quat quat_mul(const Quat& a, const Quat& b) {
  if (!is_finite(a) || !is_finite(b)) {
    throw NumericalError("quat_mul: non-finite quaternion input");
  }
  if (std::abs(a.norm() - 1.0) > 1e-6 || std::abs(b.norm() - 1.0) > 1e-6) {
    throw NumericalError("quat_mul: input quaternion is not unit-norm");
  }
  return normalized_canonical(a * b);
}

inline Quat quat_conjugate(const Quat& q) {
  return Quat(q.w(), -q.x(), -q.y(), -q.z());
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

enum class IncrementStyle {
  FirstOrder,  // normalize([1, theta/2])
  ExactExp,    // [cos(|theta|/2), sin(|theta|/2) * theta_hat]
  Auto,        // FirstOrder below 1e-4 rad, ExactExp above
};

// Quaternion for a rotation-vector increment theta (radians, axis*angle).
// The first-order form agrees with the exponential map to O(|theta|^3).
inline Quat quat_from_small_angle(const Vec3& theta,
                                  IncrementStyle style = IncrementStyle::Auto) {
  if (!is_finite(theta)) {
    throw NumericalError("quat_from_small_angle: non-finite rotation vector");
  }
  const double angle = theta.norm();
  IncrementStyle chosen = style;
  if (style == IncrementStyle::Auto) {
    chosen = (angle <= 1e-4) ? IncrementStyle::FirstOrder
                             : IncrementStyle::ExactExp;
  }
  if (chosen == IncrementStyle::FirstOrder) {
    Quat q(1.0, 0.5 * theta.x(), 0.5 * theta.y(), 0.5 * theta.z());
    return normalized_canonical(q);
  }
  // Exact exponential map; sin(a/2)/a via series below 1e-4 to avoid 0/0.
  const double half = 0.5 * angle;
  double s_over_a;  // sin(angle/2) / angle
  if (angle < 1e-4) {
    s_over_a = 0.5 - angle * angle / 48.0;
  } else {
    s_over_a = std::sin(half) / angle;
  }
  Quat q(std::cos(half), s_over_a * theta.x(), s_over_a * theta.y(),
         s_over_a * theta.z());
  return normalized_canonical(q);
}

// Rotation vector of q (inverse of quat_from_small_angle's exact form).
// Returns theta with |theta| in [0, pi].
inline Vec3 quat_log_vec(const Quat& q_in) {
  Quat q = normalized_canonical(q_in);
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec();  // angle/2 ~ vn, theta ~ 2*vec
  const double angle = 2.0 * std::atan2(vn, q.w());
  return (angle / vn) * q.vec();
}

inline Mat3 quat_to_rot(const Quat& q) {
  if (!is_finite(q)) {
    throw NumericalError("quat_to_rot: non-finite quaternion");
  }
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw NumericalError("quat_to_rot: quaternion is not unit-norm");
  }
  return q.toRotationMatrix();
}

// Validates orthonormality (within 1e-6) and a positive determinant, then
// extracts the canonical-sign quaternion.
inline Quat rot_to_quat(const Mat3& r) {
  if (!r.allFinite()) {
    throw NumericalError("rot_to_quat: non-finite matrix");
  }
  if ((r * r.transpose() - Mat3::Identity()).norm() > 1e-6) {
    throw NumericalError("rot_to_quat: matrix is not orthonormal");
  }
  if (r.determinant() < 0.0) {
    throw NumericalError("rot_to_quat: matrix is a reflection");
  }
  return normalized_canonical(Quat(r));
}

// Geodesic angle (radians) between two rotations; robust near 0 and pi.
inline double geodesic_angle(const Quat& a, const Quat& b) {
  Quat d = (quat_conjugate(a) * b).normalized();
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

inline double geodesic_angle(const Mat3& a, const Mat3& b) {
  return geodesic_angle(rot_to_quat(a), rot_to_quat(b));
}

// SO(3) right Jacobian J_r(phi): d/d(dphi) log(exp(phi)^-1 exp(phi + dphi)).
// Series below 1e-5 rad.
inline Mat3 so3_right_jacobian(const Vec3& phi) {
  const double a = phi.norm();
  const Mat3 px = skew(phi);
  if (a < 1e-5) {
    return Mat3::Identity() - 0.5 * px + (1.0 / 6.0) * px * px;
  }
  const double a2 = a * a;
  const double c1 = (1.0 - std::cos(a)) / a2;
  const double c2 = (a - std::sin(a)) / (a2 * a);
  return Mat3::Identity() - c1 * px + c2 * px * px;
}

// Derivative of the normalized first-order increment map:
// for q(phi) = normalize([1, phi/2]), the body-frame rotation-vector change
// of q under d(phi) is G(phi) d(phi) with
//   G(phi) = (I - 0.5 [phi]_x) / (1 + |phi|^2 / 4).
inline Mat3 first_order_increment_jacobian(const Vec3& phi) {
  const double n2 = 1.0 / (1.0 + 0.25 * phi.squaredNorm());
  return n2 * (Mat3::Identity() - 0.5 * skew(phi));
}

inline double deg_to_rad(double d) { return d * M_PI / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / M_PI; }

}  // namespace inertia
