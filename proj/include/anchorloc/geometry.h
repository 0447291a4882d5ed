#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "anchorloc/error.h"

namespace anchorloc {

template <typename T>
using Vector2 = Eigen::Matrix<T, 2, 1>;
template <typename T>
using Vector3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Matrix3 = Eigen::Matrix<T, 3, 3>;

// Below this angle (radians) exp/log switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-7;

template <typename T>
Matrix3<T> CrossMatrix(const Vector3<T>& v) {
  Matrix3<T> m;
  m << T(0), -v.z(), v.y(),  //
      v.z(), T(0), -v.x(),   //
      -v.y(), v.x(), T(0);
  return m;
}

// Unit quaternion rotation kept in the w >= 0 hemisphere so that equal
// rotations have equal coefficients.
template <typename T>
class Rotation3 {
 public:
  Rotation3() : q_(Eigen::Quaternion<T>::Identity()) {}

  explicit Rotation3(const Eigen::Quaternion<T>& q) : q_(q) { Canonicalize(); }

  Rotation3(T w, T x, T y, T z) : q_(w, x, y, z) { Canonicalize(); }

  static Rotation3 Identity() { return Rotation3(); }

  // Keeps coefficients that are unit within 1e-12 as given (up to the sign
  // flip), so that serialized rotations load bit-exactly.
  static Rotation3 FromStoredCoefficients(T w, T x, T y, T z) {
    Rotation3 r;
    r.q_ = Eigen::Quaternion<T>(w, x, y, z);
    using std::abs;
    if (abs(r.q_.norm() - T(1)) > T(1e-12)) r.q_.normalize();
    if (r.q_.w() < T(0)) r.q_.coeffs() = -r.q_.coeffs();
    return r;
  }

  static Rotation3 FromMatrix(const Matrix3<T>& m) {
    return Rotation3(Eigen::Quaternion<T>(m));
  }

  static Rotation3 FromAngleAxis(T angle, const Vector3<T>& axis) {
    return Rotation3(
        Eigen::Quaternion<T>(Eigen::AngleAxis<T>(angle, axis.normalized())));
  }

  const Eigen::Quaternion<T>& quaternion() const { return q_; }
  T w() const { return q_.w(); }
  T x() const { return q_.x(); }
  T y() const { return q_.y(); }
  T z() const { return q_.z(); }

  Matrix3<T> matrix() const { return q_.toRotationMatrix(); }

  Rotation3 inverse() const { return Rotation3(q_.conjugate()); }

  Rotation3 operator*(const Rotation3& other) const {
    return Rotation3(q_ * other.q_);
  }

  Vector3<T> operator*(const Vector3<T>& v) const { return q_ * v; }

  template <typename U>
  Rotation3<U> cast() const {
    return Rotation3<U>(q_.template cast<U>());
  }

 private:
  void Canonicalize() {
    q_.normalize();
    if (q_.w() < T(0)) q_.coeffs() = -q_.coeffs();
  }

  Eigen::Quaternion<T> q_;
};

// World-to-camera rigid transform: x_cam = R * x_world + t.
template <typename T>
struct Pose {
  Rotation3<T> rotation;
  Vector3<T> translation = Vector3<T>::Zero();

  Pose() = default;
  Pose(const Rotation3<T>& r, const Vector3<T>& t)
      : rotation(r), translation(t) {}

  static Pose FromCenter(const Rotation3<T>& r, const Vector3<T>& center) {
    return Pose(r, -(r * center));
  }

  Vector3<T> Transform(const Vector3<T>& x) const {
    return rotation * x + translation;
  }

  Pose inverse() const {
    const Rotation3<T> r_inv = rotation.inverse();
    return Pose(r_inv, -(r_inv * translation));
  }

  // (this * other)(x) = this(other(x)).
  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation,
                rotation * other.translation + translation);
  }
};

template <typename T>
struct CameraIntrinsics {
  T fx = T(1);
  T fy = T(1);
  T cx = T(0);
  T cy = T(0);

  CameraIntrinsics() = default;
  CameraIntrinsics(T fx_in, T fy_in, T cx_in, T cy_in)
      : fx(fx_in), fy(fy_in), cx(cx_in), cy(cy_in) {
    if (!(fx > T(0)) || !(fy > T(0))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "focal lengths must be positive");
    }
  }

  Vector2<T> Normalize(const Vector2<T>& pixel) const {
    return Vector2<T>((pixel.x() - cx) / fx, (pixel.y() - cy) / fy);
  }

  Vector2<T> Denormalize(const Vector2<T>& p) const {
    return Vector2<T>(fx * p.x() + cx, fy * p.y() + cy);
  }

  T MaxFocal() const { return std::max(fx, fy); }

  bool operator==(const CameraIntrinsics&) const = default;
};

template <typename T>
Rotation3<T> ExpSO3(const Vector3<T>& omega) {
  const T theta = omega.norm();
  const T half = theta / T(2);
  // sin(theta / 2) / theta.
  T scale;
  if (theta < T(kSmallAngle)) {
    scale = T(0.5) - theta * theta / T(48);
  } else {
    scale = std::sin(half) / theta;
  }
  return Rotation3<T>(std::cos(half), scale * omega.x(), scale * omega.y(),
                      scale * omega.z());
}

template <typename T>
Vector3<T> LogSO3(const Rotation3<T>& r) {
  const Eigen::Quaternion<T>& q = r.quaternion();
  const Vector3<T> v = q.vec();
  const T n = v.norm();
  const T w = q.w();
  // theta / n with theta = 2 atan2(n, w); w >= 0 by canonicalization.
  T scale;
  if (n < T(kSmallAngle)) {
    scale = T(2) / w * (T(1) - n * n / (T(3) * w * w));
  } else {
    scale = T(2) * std::atan2(n, w) / n;
  }
  return scale * v;
}

// Relative pose that maps camera-1 coordinates to camera-2 coordinates:
// R = R2 R1^T, t = t2 - R2 R1^T t1.
template <typename T>
Pose<T> RelativePose(const Pose<T>& p1, const Pose<T>& p2) {
  const Rotation3<T> r = p2.rotation * p1.rotation.inverse();
  return Pose<T>(r, p2.translation - (r * p1.translation));
}

template <typename T>
Vector3<T> CameraCenter(const Pose<T>& p) {
  return -(p.rotation.inverse() * p.translation);
}

// Orthonormal basis of the plane orthogonal to t.
template <typename T>
Eigen::Matrix<T, 3, 2> TangentBasis(const Vector3<T>& t) {
  const Vector3<T> n = t.normalized();
  // Pick the axis least aligned with n.
  Vector3<T> a = Vector3<T>::UnitX();
  if (std::abs(n.x()) > std::abs(n.y())) a = Vector3<T>::UnitY();
  if (std::abs(n.dot(a)) > std::abs(n.z())) a = Vector3<T>::UnitZ();
  Eigen::Matrix<T, 3, 2> b;
  b.col(0) = n.cross(a).normalized();
  b.col(1) = n.cross(b.col(0));
  return b;
}

// Angle of ra * rb^T, in [0, pi].
template <typename T>
T GeodesicAngle(const Rotation3<T>& ra, const Rotation3<T>& rb) {
  const Eigen::Quaternion<T> d =
      ra.quaternion() * rb.quaternion().conjugate();
  return T(2) * std::atan2(d.vec().norm(), std::abs(d.w()));
}

template <typename T>
T DirectionAngle(const Vector3<T>& u, const Vector3<T>& v) {
  if (u.norm() < T(1e-12) || v.norm() < T(1e-12)) {
    throw Error(ErrorCode::kZeroVector, "direction has zero length");
  }
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

using Rotation3d = Rotation3<double>;
using Posed = Pose<double>;
using CameraIntrinsicsd = CameraIntrinsics<double>;

}  // namespace anchorloc
