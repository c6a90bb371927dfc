#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "semloc/types.hpp"

namespace semloc {

template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Vec6 = Eigen::Matrix<S, 6, 1>;

/// Skew-symmetric matrix of v, so that hat(v) * w == v.cross(w).
template <typename S>
Mat3<S> hat(const Vec3<S>& v) {
  Mat3<S> m;
  m << S(0), -v.z(), v.y(), v.z(), S(0), -v.x(), -v.y(), v.x(), S(0);
  return m;
}

/// SO(3) exponential map, rotation vector -> rotation matrix.
template <typename S>
Mat3<S> exp_so3(const Vec3<S>& w) {
  const S theta2 = w.squaredNorm();
  const S theta = std::sqrt(theta2);
  const Mat3<S> W = hat(w);
  S a, b;
  if (theta < S(1e-8)) {
    a = S(1) - theta2 / S(6);
    b = S(0.5) - theta2 / S(24);
  } else {
    a = std::sin(theta) / theta;
    b = (S(1) - std::cos(theta)) / theta2;
  }
  return Mat3<S>::Identity() + a * W + b * W * W;
}

/// SO(3) logarithm, rotation matrix -> rotation vector. Uses the quaternion
/// route, which stays stable near 0 and pi.
template <typename S>
Vec3<S> log_so3(const Mat3<S>& rot) {
  Eigen::Quaternion<S> q(rot);
  q.normalize();
  if (q.w() < S(0)) q.coeffs() = -q.coeffs();
  const S vec_norm = q.vec().norm();
  const S angle = S(2) * std::atan2(vec_norm, q.w());
  if (vec_norm < S(1e-12)) return S(2) * q.vec();
  return (angle / vec_norm) * q.vec();
}

/// Inverse of the right Jacobian of SO(3). Satisfies
/// Log(Exp(theta) Exp(delta)) ~= theta + Jr_inv(theta) delta for small delta.
template <typename S>
Mat3<S> right_jacobian_inv_so3(const Vec3<S>& w) {
  const S theta2 = w.squaredNorm();
  const S theta = std::sqrt(theta2);
  const Mat3<S> W = hat(w);
  S c;
  if (theta < S(1e-5)) {
    c = S(1) / S(12) + theta2 / S(720);
  } else {
    c = S(1) / theta2 - (S(1) + std::cos(theta)) / (S(2) * theta * std::sin(theta));
  }
  return Mat3<S>::Identity() + S(0.5) * W + c * W * W;
}

/// Rigid body transform, unit quaternion plus translation.
template <typename S>
struct Pose {
  Eigen::Quaternion<S> rotation = Eigen::Quaternion<S>::Identity();
  Vec3<S> translation = Vec3<S>::Zero();

  Pose() = default;
  Pose(const Eigen::Quaternion<S>& q, const Vec3<S>& t) : rotation(q.normalized()), translation(t) {}
  Pose(const Mat3<S>& rot, const Vec3<S>& t) : rotation(rot), translation(t) { rotation.normalize(); }

  static Pose Identity() { return Pose(); }

  Mat3<S> matrix() const { return rotation.toRotationMatrix(); }

  Vec3<S> operator*(const Vec3<S>& p) const { return rotation * p + translation; }

  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, rotation * other.translation + translation);
  }

  Pose inverse() const {
    const Eigen::Quaternion<S> qi = rotation.conjugate();
    return Pose(qi, qi * (-translation));
  }

  /// Right-increment retraction: rotation <- R Exp(phi), translation <- t + R tau,
  /// with delta = [tau; phi].
  Pose retract(const Vec6<S>& delta) const {
    Pose out;
    out.rotation = (rotation * Eigen::Quaternion<S>(exp_so3<S>(delta.template tail<3>()))).normalized();
    out.translation = translation + rotation * delta.template head<3>();
    return out;
  }

  bool is_approx(const Pose& other, S tol) const {
    const S rot_err = rotation.angularDistance(other.rotation);
    return rot_err <= tol && (translation - other.translation).norm() <= tol;
  }
};

using Posed = Pose<double>;

}  // namespace semloc
