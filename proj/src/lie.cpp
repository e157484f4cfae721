#include "tmpc/lie.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace tmpc {

namespace {
constexpr double kSmallAngle = 1e-4;  // below this, trig ratios go to series
}

Mat5 ExtendedPose::matrix() const {
  Mat5 X = Mat5::Identity();
  X.block<3, 3>(0, 0) = C;
  X.block<3, 1>(0, 3) = v;
  X.block<3, 1>(0, 4) = r;
  return X;
}

ExtendedPose ExtendedPose::FromMatrix(const Mat5& X) {
  ExtendedPose out;
  out.C = X.block<3, 3>(0, 0);
  out.v = X.block<3, 1>(0, 3);
  out.r = X.block<3, 1>(0, 4);
  return out;
}

ExtendedPose ExtendedPose::operator*(const ExtendedPose& other) const {
  ExtendedPose out;
  out.C = C * other.C;
  out.v = C * other.v + v;
  out.r = C * other.r + r;
  return out;
}

ExtendedPose ExtendedPose::inverse() const {
  ExtendedPose out;
  out.C = C.transpose();
  out.v = -out.C * v;
  out.r = -out.C * r;
  return out;
}

Mat3 cross(const Vec3& u) {
  Mat3 S;
  S << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
       -u.y(), u.x(), 0.0;
  return S;
}

Vec3 uncross(const Mat3& S) {
  return Vec3(S(2, 1), S(0, 2), S(1, 0));
}

Mat3 so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 S = cross(phi);
  double a, b;  // C = I + a*S + b*S^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * S + b * S * S;
}

Vec3 so3_log(const Mat3& C, bool* ill_conditioned) {
  if (ill_conditioned) *ill_conditioned = false;
  const Vec3 w = 0.5 * uncross(C - C.transpose());  // = a * sin(theta)
  const double sin_theta = w.norm();
  const double cos_theta = 0.5 * (C.trace() - 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta > M_PI - 1e-4) {
    // sin(theta) -> 0, axis from the dominant column of (C + I).
    if (ill_conditioned) *ill_conditioned = true;
    const Mat3 B = C + Mat3::Identity();
    int k;
    B.colwise().norm().maxCoeff(&k);
    Vec3 axis = B.col(k).normalized();
    // Fix the sign so that exp matches C's off-diagonal skew part.
    if (axis.dot(w) < 0.0) axis = -axis;
    return theta * axis;
  }
  if (sin_theta < kSmallAngle) {
    // theta/sin(theta) = 1 + theta^2/6 + 7 theta^4/360 + ...
    const double t2 = theta * theta;
    return w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  return w * (theta / sin_theta);
}

Mat3 left_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 S = cross(phi);
  double c1, c2;  // J = I + c1*S + c2*S^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    c1 = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    c2 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    c1 = (1.0 - std::cos(theta)) / (theta * theta);
    c2 = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() + c1 * S + c2 * S * S;
}

Mat3 left_jacobian_inv(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 S = cross(phi);
  double c;  // Jinv = I - S/2 + c*S^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    c = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() - 0.5 * S + c * S * S;
}

ExtendedPose se23_exp(const Vec9& xi) {
  const Vec3 phi = xi_phi(xi);
  const Mat3 J = left_jacobian(phi);
  ExtendedPose X;
  X.C = so3_exp(phi);
  X.v = J * xi_v(xi);
  X.r = J * xi_r(xi);
  return X;
}

Vec9 se23_log(const ExtendedPose& X, bool* ill_conditioned) {
  const Vec3 phi = so3_log(X.C, ill_conditioned);
  const Mat3 Jinv = left_jacobian_inv(phi);
  Vec9 xi;
  xi.segment<3>(0) = phi;
  xi.segment<3>(3) = Jinv * X.v;
  xi.segment<3>(6) = Jinv * X.r;
  return xi;
}

ExtendedPose left_invariant_error(const ExtendedPose& X_ref, const ExtendedPose& X) {
  ExtendedPose err;
  err.C = X_ref.C.transpose() * X.C;
  err.v = X_ref.C.transpose() * (X.v - X_ref.v);
  err.r = X_ref.C.transpose() * (X.r - X_ref.r);
  return err;
}

Mat3 orthonormalize(const Mat3& C) {
  Eigen::JacobiSVD<Mat3> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Mat3 D = Mat3::Identity();
    D(2, 2) = -1.0;
    R = svd.matrixU() * D * svd.matrixV().transpose();
  }
  return R;
}

}  // namespace tmpc
