#ifndef TMPC_LINMODEL_HPP
#define TMPC_LINMODEL_HPP

#include <Eigen/Core>

#include "tmpc/reference.hpp"
#include "tmpc/vehicle.hpp"

namespace tmpc {

/// State-space pair; dt = 0 marks a continuous-time model.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double dt = 0.0;
};

/// Outer-loop error dynamics linearized about the reference knot.
/// State (xi_phi, xi_v, xi_r), input (df, domega); 9x9 / 9x4.
LinearModel outer_jacobians(const ReferenceKnot& knot, const VehicleParams& p);

/// Inner-loop momentum-error dynamics linearized about omega_ref.
/// `model` is the 3-state part used by the controller (with E = F = 0 it is
/// A = -omega_ref^x, B = 1); the attitude/velocity coupling blocks that
/// appear with nonzero E, F are exported for analysis.
struct InnerJacobians {
  LinearModel model;
  Mat3 coupling_phi = Mat3::Zero();
  Mat3 coupling_v = Mat3::Zero();
};
InnerJacobians inner_jacobians(const Vec3& omega_ref, const ReferenceKnot& knot,
                               const VehicleParams& p);

/// Single-controller error dynamics: state (xi_phi, xi_v, xi_r, dh),
/// input (df, dm); 12x12 / 12x4.
LinearModel smpc_jacobians(const ReferenceKnot& knot, const VehicleParams& p);

/// Exact zero-order hold through the exponential of the augmented
/// [A B; 0 0] block matrix.
LinearModel discretize_zoh(const LinearModel& model, double dt);

}  // namespace tmpc

#endif  // TMPC_LINMODEL_HPP
