#ifndef TMPC_REFERENCE_HPP
#define TMPC_REFERENCE_HPP

#include <array>
#include <vector>

#include "tmpc/lie.hpp"
#include "tmpc/vehicle.hpp"

namespace tmpc {

/// One time sample of the feedforward trajectory.
struct ReferenceKnot {
  double t = 0.0;
  Mat3 C_ar = Mat3::Identity();
  Vec3 v_r = Vec3::Zero();
  Vec3 r_r = Vec3::Zero();
  double f_r = 0.0;           // thrust feedforward, N
  Vec3 omega_r = Vec3::Zero();
  Vec3 m_r = Vec3::Zero();    // torque feedforward, N m
  double psi_r = 0.0;

  ExtendedPose pose() const { return {C_ar, v_r, r_r}; }
};

/// Flat outputs (position derivatives and heading) at one instant.
struct FlatOutputs {
  Vec3 r = Vec3::Zero();
  Vec3 dr = Vec3::Zero();
  Vec3 ddr = Vec3::Zero();
  Vec3 dddr = Vec3::Zero();
  double psi = 0.0;
  double dpsi = 0.0;
};

/// Full reference state and input from the flat outputs. Thrust direction
/// solves m ddr = m g 1_3 - C 1_3 f - C D C^T dr (two fixed-point passes on
/// the drag term); omega_r comes from the analytic attitude derivative when
/// D = 0 and from a central difference of the flat attitude otherwise.
/// Throws when the required thrust vanishes (degenerate attitude).
ReferenceKnot flat_outputs_to_knot(const FlatOutputs& flat, const VehicleParams& p);

/// Torque feedforward per time step of a reference angular velocity
/// sequence: m[k] = J (w[k+1]-w[k])/dt + w[k]^x J w[k], last entry held.
std::vector<Vec3> torque_reference(const std::vector<Vec3>& omega_seq, double dt,
                                   const VehicleParams& p);

/// Per-axis quintic from (r0, v0, a0 = 0) to (target, 0, 0) with linear
/// heading; knots are evaluated on demand and hold a hover at the target
/// beyond the end time.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;

  static ReferenceTrajectory plan(const VehicleState& x0, const Vec3& target_r,
                                  double target_psi, double duration, double t0,
                                  const VehicleParams& p);

  ReferenceKnot knot(double t) const;
  std::vector<ReferenceKnot> sample(const std::vector<double>& times) const;

  double start_time() const { return t0_; }
  double end_time() const { return t0_ + duration_; }
  const Vec3& target() const { return target_; }
  double target_heading() const { return psi_f_; }

 private:
  FlatOutputs flat_at(double t) const;

  std::array<Eigen::Matrix<double, 6, 1>, 3> coeffs_{};  // per axis
  double t0_ = 0.0;
  double duration_ = 1.0;
  double psi_0_ = 0.0;
  double psi_f_ = 0.0;
  Vec3 target_ = Vec3::Zero();
  VehicleParams params_;
};

/// True iff the trailing contiguous run of active samples spans >= window.
bool replan_trigger(const std::vector<bool>& l1_active_history, double dt,
                    double window);

/// Plan length heuristic used at start and on replans: scaled by remaining
/// distance at a 5 m/s cruise, clamped to [8, 40] s.
double suggested_plan_duration(const Vec3& r0, const Vec3& target);

}  // namespace tmpc

#endif  // TMPC_REFERENCE_HPP
