#include "tmpc/linmodel.hpp"

#include <Eigen/Dense>
#include <stdexcept>

#include "tmpc/numeric.hpp"

namespace tmpc {

namespace {
const Vec3 kDown{0.0, 0.0, 1.0};

// Momentum-error coupling to (xi_phi, xi_v) shared by the inner loop and the
// SMPC fourth row. The (F J^-1 (J w)^x) form keeps the block exact for
// anisotropic inertia; it reduces to (F w^x) when J is isotropic.
void momentum_coupling(const Vec3& omega_ref, const ReferenceKnot& knot,
                       const VehicleParams& p, Mat3* phi, Mat3* v, Mat3* h) {
  const Mat3& E = p.drag_rotational_velocity;
  const Mat3& F = p.drag_rotational_rate;
  const Mat3 Jinv = p.inertia.inverse();
  const Vec3 w_ref = knot.C_ar.transpose() * knot.v_r;

  *phi = cross(E * w_ref) - E * cross(w_ref) + cross(F * omega_ref) -
         F * Jinv * cross(p.inertia * omega_ref);
  *v = -E;
  *h = -cross(omega_ref) - F * Jinv;
}
}  // namespace

LinearModel outer_jacobians(const ReferenceKnot& knot, const VehicleParams& p) {
  const Mat3& D = p.drag_translational;
  const Vec3 w_ref = knot.C_ar.transpose() * knot.v_r;
  const Mat3 omega_x = cross(knot.omega_r);

  LinearModel m;
  m.A = Eigen::MatrixXd::Zero(9, 9);
  m.B = Eigen::MatrixXd::Zero(9, 4);

  m.A.block<3, 3>(3, 0) =
      (cross(D * w_ref) - D * cross(w_ref) + cross(knot.f_r * kDown)) / p.mass;
  m.A.block<3, 3>(3, 3) = -omega_x - D / p.mass;
  m.A.block<3, 3>(6, 3) = Mat3::Identity();
  m.A.block<3, 3>(6, 6) = -omega_x;

  m.B.block<3, 3>(0, 1) = Mat3::Identity();
  m.B.block<3, 1>(3, 0) = -kDown / p.mass;
  return m;
}

InnerJacobians inner_jacobians(const Vec3& omega_ref, const ReferenceKnot& knot,
                               const VehicleParams& p) {
  Mat3 phi, v, h;
  momentum_coupling(omega_ref, knot, p, &phi, &v, &h);

  InnerJacobians out;
  out.model.A = h;
  out.model.B = Mat3::Identity();
  out.coupling_phi = phi;
  out.coupling_v = v;
  return out;
}

LinearModel smpc_jacobians(const ReferenceKnot& knot, const VehicleParams& p) {
  const Mat3 Jinv = p.inertia.inverse();
  const LinearModel outer = outer_jacobians(knot, p);
  Mat3 phi, v, h;
  momentum_coupling(knot.omega_r, knot, p, &phi, &v, &h);

  LinearModel m;
  m.A = Eigen::MatrixXd::Zero(12, 12);
  m.B = Eigen::MatrixXd::Zero(12, 4);

  m.A.topLeftCorner<9, 9>() = outer.A.topLeftCorner<9, 9>();
  // xi_phi_dot = domega expressed through the momentum state.
  m.A.block<3, 3>(0, 0) = Jinv * cross(p.inertia * knot.omega_r) - cross(knot.omega_r);
  m.A.block<3, 3>(0, 9) = Jinv;
  m.A.block<3, 3>(9, 0) = phi;
  m.A.block<3, 3>(9, 3) = v;
  m.A.block<3, 3>(9, 9) = h;

  m.B.block<3, 1>(3, 0) = outer.B.block<3, 1>(3, 0);
  m.B.block<3, 3>(9, 1) = Mat3::Identity();
  return m;
}

LinearModel discretize_zoh(const LinearModel& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize_zoh: dt must be positive");
  const Eigen::Index n = model.A.rows();
  const Eigen::Index nu = model.B.cols();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + nu, n + nu);
  aug.topLeftCorner(n, n) = model.A;
  aug.topRightCorner(n, nu) = model.B;
  const Eigen::MatrixXd E = expm(aug * dt);

  LinearModel out;
  out.A = E.topLeftCorner(n, n);
  out.B = E.topRightCorner(n, nu);
  out.dt = dt;
  return out;
}

}  // namespace tmpc
