#ifndef TMPC_LIE_HPP
#define TMPC_LIE_HPP

#include <Eigen/Core>

namespace tmpc {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

/// Attitude (DCM), velocity and position bundled as one SE_2(3) element.
/// The 5x5 embedding is [C v r; 0 1 0; 0 0 1].
struct ExtendedPose {
  Mat3 C = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 r = Vec3::Zero();

  Mat5 matrix() const;
  static ExtendedPose FromMatrix(const Mat5& X);
  static ExtendedPose Identity() { return {}; }

  ExtendedPose operator*(const ExtendedPose& other) const;
  ExtendedPose inverse() const;
};

/// Skew-symmetric matrix such that cross(u) * w = u x w.
Mat3 cross(const Vec3& u);

/// Inverse of cross() restricted to skew-symmetric input.
Vec3 uncross(const Mat3& S);

/// Rodrigues exponential, series branch below |phi| = 1e-4.
Mat3 so3_exp(const Vec3& phi);

/// Rotation log with angle in [0, pi]. Near pi the axis comes from the
/// dominant column of C + I and `ill_conditioned`, when provided, is set.
Vec3 so3_log(const Mat3& C, bool* ill_conditioned = nullptr);

/// SO(3) left Jacobian and its inverse.
Mat3 left_jacobian(const Vec3& phi);
Mat3 left_jacobian_inv(const Vec3& phi);

/// exp: (phi, v, r) -> (exp(phi^x), J(phi) v, J(phi) r).
ExtendedPose se23_exp(const Vec9& xi);

/// log: inverts se23_exp; rotation angle must stay below pi.
Vec9 se23_log(const ExtendedPose& X, bool* ill_conditioned = nullptr);

/// Left-invariant tracking error dX = X_ref^-1 * X with blocks
/// dC = Cr^T C, dv = Cr^T (v - vr), dr = Cr^T (r - rr).
ExtendedPose left_invariant_error(const ExtendedPose& X_ref, const ExtendedPose& X);

/// Projects a near-rotation onto SO(3) (polar factor, det +1).
Mat3 orthonormalize(const Mat3& C);

/// Tangent vector partitions, ordering fixed as (phi, v, r).
inline Eigen::Ref<const Vec3> xi_phi(const Vec9& xi) { return xi.segment<3>(0); }
inline Eigen::Ref<const Vec3> xi_v(const Vec9& xi) { return xi.segment<3>(3); }
inline Eigen::Ref<const Vec3> xi_r(const Vec9& xi) { return xi.segment<3>(6); }

}  // namespace tmpc

#endif  // TMPC_LIE_HPP
