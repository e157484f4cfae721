#ifndef TMPC_CHECKS_HPP
#define TMPC_CHECKS_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "tmpc/linmodel.hpp"
#include "tmpc/reference.hpp"
#include "tmpc/vehicle.hpp"

namespace tmpc::checks {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Vec4 = Eigen::Vector4d;

/// Exact nonlinear rate of the left-invariant error, evaluated from the
/// truth dynamics and the error definition only (no linearization). The
/// returned vector is vee(dX_dot * dX^-1); at dx = du = 0 its Jacobian is
/// the outer-loop (A, B) pair.
Vec9 outer_error_rate(const ReferenceKnot& knot, const VehicleParams& p,
                      const Vec9& dxi, const Vec4& du);

/// Exact nonlinear rate of the angular-momentum error dh about omega_ref,
/// with the attitude/velocity coupling inputs (xi_phi, xi_v).
Vec3 inner_error_rate(const Vec3& omega_ref, const ReferenceKnot& knot,
                      const VehicleParams& p, const Vec3& xi_phi, const Vec3& xi_v,
                      const Vec3& dh, const Vec3& dm);

/// Exact nonlinear rate of the augmented 12-state error.
Vec12 smpc_error_rate(const ReferenceKnot& knot, const VehicleParams& p,
                      const Vec12& dx, const Vec4& du);

/// Central-difference Jacobians of the rates above; columns ordered states
/// then inputs, matching the analytic models.
Eigen::MatrixXd fd_outer_jacobian(const ReferenceKnot& knot, const VehicleParams& p,
                                  double eps = 1e-6);
Eigen::MatrixXd fd_inner_jacobian(const Vec3& omega_ref, const ReferenceKnot& knot,
                                  const VehicleParams& p, double eps = 1e-6);
Eigen::MatrixXd fd_smpc_jacobian(const ReferenceKnot& knot, const VehicleParams& p,
                                 double eps = 1e-6);

/// Worst relative column error between an analytic Jacobian [A B] and its
/// finite-difference probe; columns are compared in the 2-norm with a small
/// absolute floor so near-zero columns stay meaningful.
double max_relative_column_error(const Eigen::MatrixXd& analytic,
                                 const Eigen::MatrixXd& probed, double floor = 1e-3);

/// Draws a randomized but well-scaled reference knot for Jacobian probes.
ReferenceKnot random_knot(std::uint64_t seed, std::uint64_t index);

/// Compact self-check suite behind the `verify` CLI command. Appends one
/// line per check to `report`; returns true when everything passes.
bool run_property_suite(std::vector<std::string>& report);

}  // namespace tmpc::checks

#endif  // TMPC_CHECKS_HPP
