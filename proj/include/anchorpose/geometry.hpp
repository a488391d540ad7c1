#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anchorpose/errors.hpp"

namespace anchorpose {

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * kPi<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / kPi<Scalar>;
}

/// Wraps an angle in degrees to [-180, 180).
template <typename Scalar>
Scalar wrap_deg(Scalar deg) {
  Scalar wrapped = std::fmod(deg + Scalar(180), Scalar(360));
  if (wrapped < Scalar(0)) wrapped += Scalar(360);
  if (wrapped >= Scalar(360)) wrapped = Scalar(0);
  return wrapped - Scalar(180);
}

// ============================================================================
// Rotation
// ============================================================================

/**
 * Unit quaternion with a canonical sign: w >= 0, and when w == 0 the first
 * nonzero vector component is positive. q and -q describe the same rotation,
 * so every constructor lands on the same representative.
 *
 * Renormalization only happens when the squared norm is off by more than a few
 * ulps, which makes construction idempotent bit-for-bit (a serialized rotation
 * reads back identically).
 */
template <typename Scalar>
class Rotation {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Rotation() : q_(Quaternion::Identity()) {}
  explicit Rotation(const Quaternion& q) : q_(canonicalize(q)) {}
  Rotation(Scalar w, Scalar x, Scalar y, Scalar z)
      : q_(canonicalize(Quaternion(w, x, y, z))) {}

  static Rotation Identity() { return Rotation(); }

  static Rotation FromMatrix(const Matrix3& m) { return Rotation(Quaternion(m)); }

  static Rotation FromAngleAxis(Scalar angle_rad, const Vector3& axis) {
    return Rotation(Quaternion(Eigen::AngleAxis<Scalar>(angle_rad, axis.normalized())));
  }

  static Rotation AboutX(Scalar angle_rad) { return FromAngleAxis(angle_rad, Vector3::UnitX()); }
  static Rotation AboutY(Scalar angle_rad) { return FromAngleAxis(angle_rad, Vector3::UnitY()); }
  static Rotation AboutZ(Scalar angle_rad) { return FromAngleAxis(angle_rad, Vector3::UnitZ()); }

  const Quaternion& quaternion() const { return q_; }
  Scalar w() const { return q_.w(); }
  Scalar x() const { return q_.x(); }
  Scalar y() const { return q_.y(); }
  Scalar z() const { return q_.z(); }

  Matrix3 matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }
  Vector3 operator*(const Vector3& v) const { return q_ * v; }

  /// Rotation angle in radians, in [0, pi].
  Scalar angle() const {
    return Scalar(2) * std::atan2(q_.vec().norm(), std::abs(q_.w()));
  }

  /// Unit rotation axis; UnitX for the identity.
  Vector3 axis() const {
    const Scalar n = q_.vec().norm();
    if (n == Scalar(0)) return Vector3::UnitX();
    return q_.vec() / n;
  }

  template <typename Other>
  Rotation<Other> cast() const {
    return Rotation<Other>(q_.template cast<Other>());
  }

  bool operator==(const Rotation& other) const { return q_.coeffs() == other.q_.coeffs(); }

 private:
  static Quaternion canonicalize(Quaternion q) {
    const Scalar n2 = q.squaredNorm();
    if (!std::isfinite(n2) || n2 == Scalar(0)) {
      throw Error(ErrorCode::kDomainError, "quaternion must be finite and nonzero");
    }
    if (std::abs(n2 - Scalar(1)) > Scalar(8) * std::numeric_limits<Scalar>::epsilon()) {
      q.coeffs() /= std::sqrt(n2);
    }
    bool flip = q.w() < Scalar(0);
    if (q.w() == Scalar(0)) {
      for (int i = 0; i < 3; ++i) {
        if (q.vec()[i] != Scalar(0)) {
          flip = q.vec()[i] < Scalar(0);
          break;
        }
      }
    }
    if (flip) q.coeffs() = -q.coeffs();
    q.coeffs().array() += Scalar(0);  // drop negative zeros
    return q;
  }

  Quaternion q_;
};

using Rotationd = Rotation<double>;

// ============================================================================
// Euler angles
// ============================================================================

/**
 * Yaw/pitch/roll in degrees under the intrinsic Y-X-Z convention
 *
 *   R = R_y(yaw) * R_x(pitch) * R_z(roll)
 *
 * in a right-handed camera frame (x right, y down, z forward). This is the only
 * place the convention is defined; every per-axis metric goes through it.
 */
template <typename Scalar>
struct EulerAngles {
  Scalar yaw = Scalar(0);
  Scalar pitch = Scalar(0);
  Scalar roll = Scalar(0);
  // Set when |pitch| >= 89 deg: yaw and roll are poorly separated there.
  bool gimbal_lock = false;
};

using EulerAnglesd = EulerAngles<double>;

template <typename Scalar>
inline constexpr Scalar kGimbalLockPitchDeg = Scalar(89);

template <typename Scalar>
Rotation<Scalar> rotation_from_euler(const EulerAngles<Scalar>& e) {
  return Rotation<Scalar>::AboutY(deg_to_rad(e.yaw)) *
         Rotation<Scalar>::AboutX(deg_to_rad(e.pitch)) *
         Rotation<Scalar>::AboutZ(deg_to_rad(e.roll));
}

template <typename Scalar>
Rotation<Scalar> rotation_from_euler(Scalar yaw_deg, Scalar pitch_deg, Scalar roll_deg) {
  return rotation_from_euler(EulerAngles<Scalar>{yaw_deg, pitch_deg, roll_deg, false});
}

template <typename Scalar>
EulerAngles<Scalar> euler_from_rotation(const Rotation<Scalar>& r) {
  // R = [ ca cc + sa sb sc   -ca sc + sa sb cc   sa cb ]
  //     [ cb sc              cb cc               -sb   ]
  //     [ -sa cc + ca sb sc   sa sc + ca sb cc   ca cb ]
  const auto m = r.matrix();
  const Scalar cos_pitch = std::hypot(m(1, 0), m(1, 1));
  EulerAngles<Scalar> e;
  e.pitch = rad_to_deg(std::atan2(-m(1, 2), cos_pitch));
  if (cos_pitch > Scalar(1e-9)) {
    e.yaw = rad_to_deg(std::atan2(m(0, 2), m(2, 2)));
    e.roll = rad_to_deg(std::atan2(m(1, 0), m(1, 1)));
  } else {
    // Degenerate branch: roll absorbed into yaw.
    e.yaw = rad_to_deg(std::atan2(-m(2, 0), m(0, 0)));
    e.roll = Scalar(0);
  }
  e.yaw += Scalar(0);
  e.roll += Scalar(0);
  e.gimbal_lock = std::abs(e.pitch) >= kGimbalLockPitchDeg<Scalar>;
  return e;
}

// ============================================================================
// Rigid transforms
// ============================================================================

/// Rigid transform x -> R x + t, translation in millimeters, tagged with the
/// coordinate frame it is expressed in.
template <typename Scalar>
struct SE3Pose {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Rotation<Scalar> rotation;
  Vector3 translation = Vector3::Zero();
  std::string frame_tag;

  static SE3Pose Identity(std::string frame_tag = {}) {
    return SE3Pose{Rotation<Scalar>::Identity(), Vector3::Zero(), std::move(frame_tag)};
  }

  Vector3 operator*(const Vector3& p) const { return rotation * p + translation; }
};

using SE3Posed = SE3Pose<double>;

/// a * b: applies b first, then a. The result carries a's frame tag.
template <typename Scalar>
SE3Pose<Scalar> compose(const SE3Pose<Scalar>& a, const SE3Pose<Scalar>& b) {
  return SE3Pose<Scalar>{a.rotation * b.rotation, a.rotation * b.translation + a.translation,
                         a.frame_tag};
}

template <typename Scalar>
SE3Pose<Scalar> inverse(const SE3Pose<Scalar>& p) {
  const Rotation<Scalar> r_inv = p.rotation.inverse();
  return SE3Pose<Scalar>{r_inv, -(r_inv * p.translation), p.frame_tag};
}

namespace detail {
template <typename Scalar>
void require_same_frame(const SE3Pose<Scalar>& a, const SE3Pose<Scalar>& b) {
  if (a.frame_tag != b.frame_tag) {
    throw Error(ErrorCode::kFrameMismatch,
                "frame '" + a.frame_tag + "' vs '" + b.frame_tag + "'");
  }
}
}  // namespace detail

/// T_{q<-a} = T_q * T_a^{-1}.
template <typename Scalar>
SE3Pose<Scalar> relative(const SE3Pose<Scalar>& query, const SE3Pose<Scalar>& anchor) {
  detail::require_same_frame(query, anchor);
  return compose(query, inverse(anchor));
}

/// T_q = T_{q<-a} * T_a, expressed in the anchor's frame.
template <typename Scalar>
SE3Pose<Scalar> apply_anchor(const SE3Pose<Scalar>& rel, const SE3Pose<Scalar>& anchor) {
  SE3Pose<Scalar> out = compose(rel, anchor);
  out.frame_tag = anchor.frame_tag;
  return out;
}

/// Left-normalizes a pose group so the first pose becomes the identity:
/// out_i = T_1^{-1} T_i. Preserves T_i^{-1} T_j for every pair.
template <typename Scalar>
std::vector<SE3Pose<Scalar>> normalize_to_anchor(std::span<const SE3Pose<Scalar>> poses) {
  if (poses.empty()) throw Error(ErrorCode::kEmptyInput, "normalize_to_anchor needs at least one pose");
  for (const auto& p : poses) detail::require_same_frame(poses.front(), p);
  const SE3Pose<Scalar> anchor_inv = inverse(poses.front());
  std::vector<SE3Pose<Scalar>> out;
  out.reserve(poses.size());
  out.push_back(SE3Pose<Scalar>::Identity(poses.front().frame_tag));
  for (std::size_t i = 1; i < poses.size(); ++i) out.push_back(compose(anchor_inv, poses[i]));
  return out;
}

template <typename Scalar>
std::vector<SE3Pose<Scalar>> normalize_to_anchor(const std::vector<SE3Pose<Scalar>>& poses) {
  return normalize_to_anchor(std::span<const SE3Pose<Scalar>>(poses));
}

/// Geodesic angle between two rotations in radians, in [0, pi].
///
/// Equal to arccos((tr(Ra^T Rb) - 1) / 2) but evaluated from the relative
/// quaternion with atan2, which stays accurate near 0 and pi where the arccos
/// form loses about half the significant digits.
template <typename Scalar>
Scalar geodesic_rad(const Rotation<Scalar>& a, const Rotation<Scalar>& b) {
  const Eigen::Quaternion<Scalar> d = a.quaternion().conjugate() * b.quaternion();
  const Scalar angle = Scalar(2) * std::atan2(d.vec().norm(), std::abs(d.w()));
  return std::clamp(angle, Scalar(0), kPi<Scalar>);
}

template <typename Scalar>
Scalar geodesic_deg(const Rotation<Scalar>& a, const Rotation<Scalar>& b) {
  return std::clamp(rad_to_deg(geodesic_rad(a, b)), Scalar(0), Scalar(180));
}

/// Trace form of the geodesic distance, with the cosine clamped to [-1, 1].
/// Kept as the reference definition; geodesic_deg is the accurate route.
template <typename Scalar>
Scalar geodesic_deg_trace(const Rotation<Scalar>& a, const Rotation<Scalar>& b) {
  const Scalar c = ((a.matrix().transpose() * b.matrix()).trace() - Scalar(1)) / Scalar(2);
  return rad_to_deg(std::acos(std::clamp(c, Scalar(-1), Scalar(1))));
}

template <typename Scalar>
Scalar translation_distance(const SE3Pose<Scalar>& a, const SE3Pose<Scalar>& b) {
  return (a.translation - b.translation).norm();
}

}  // namespace anchorpose
