#ifndef TMPC_VEHICLE_HPP
#define TMPC_VEHICLE_HPP

#include <cstdint>
#include <vector>

#include "tmpc/lie.hpp"

namespace tmpc {

/// Physical parameters of the tandem-rotor vehicle (NED, z down).
struct VehicleParams {
  double mass = 218.0;                                    // kg
  Mat3 inertia = Vec3(26.8, 97.6, 87.2).asDiagonal();     // kg m^2
  Vec3 rotor_front{1.045, 0.0, -0.514};                   // m, body frame
  Vec3 rotor_rear{-0.937, 0.0, -0.686};                   // m, body frame
  Mat3 drag_translational = Mat3::Zero();                 // D, N s/m
  Mat3 drag_rotational_velocity = Mat3::Zero();           // E
  Mat3 drag_rotational_rate = Mat3::Zero();               // F
  double gravity = 9.81;                                  // m/s^2
};

struct VehicleState {
  ExtendedPose pose;           // C_ab, v (inertial), r (inertial)
  Vec3 omega = Vec3::Zero();   // body angular velocity
};

struct StateDerivative {
  Mat3 C_dot;
  Vec3 v_dot;
  Vec3 r_dot;
  Vec3 omega_dot;
};

struct Wrench {
  double thrust = 0.0;          // N, positive up along -body z
  Vec3 torque = Vec3::Zero();   // N m, body frame
};

struct RotorForces {
  Vec3 front = Vec3::Zero();    // N, body frame
  Vec3 rear = Vec3::Zero();
};

struct WindConfig {
  Vec3 steady = Vec3::Zero();   // m/s, inertial frame
  double intensity_w0 = 0.0;    // Dryden low-altitude intensity, m/s
  std::uint64_t gust_seed = 0;
};

/// Rigid-body dynamics with thrust, gravity and linear drag. Drag terms see
/// the air-relative velocity (v - wind); gravity and thrust do not.
StateDerivative continuous_dynamics(const VehicleState& x, const Wrench& u,
                                    const Vec3& wind, const VehicleParams& p);

/// Classical RK4 step; attitude re-projected onto SO(3) afterwards.
/// Throws std::runtime_error on a non-finite derivative.
VehicleState rk4_step(const VehicleState& x, const Wrench& u, const Vec3& wind,
                      const VehicleParams& p, double dt);

inline Vec3 angular_momentum(const VehicleState& x, const VehicleParams& p) {
  return p.inertia * x.omega;
}

/// Maps wrench <-> front/rear rotor force components through
///   f   = -1_3^T (f1 + f2),
///   m_b = r1^x f1 + r2^x f2.
/// The 4x6 map is inverted minimum-norm; it is exact on its range, so
/// wrench(allocate(w)) == w. Throws at construction if the rotor geometry
/// makes the map rank deficient.
class Mixer {
 public:
  explicit Mixer(const VehicleParams& p);

  RotorForces allocate(const Wrench& w) const;
  Wrench wrench(const RotorForces& rf) const;

 private:
  Eigen::Matrix<double, 4, 6> map_;
  Eigen::Matrix<double, 6, 4> pinv_;
};

RotorForces mixer_allocate(const Wrench& w, const VehicleParams& p);
Wrench mixer_wrench(const RotorForces& rf, const VehicleParams& p);

/// Stationary colored-noise gust series (m/s, inertial axes) from the
/// MIL-spec low-altitude Dryden filters: first order in u, v and second
/// order in w, discretized at dt with exact stationary variance.
std::vector<Vec3> dryden_gust_sequence(const WindConfig& cfg, double airspeed,
                                       double altitude, double dt, std::size_t n);

/// Per-axis stationary standard deviations (sigma_u, sigma_v, sigma_w) the
/// filters are designed to, for the given conditions.
Vec3 dryden_design_sigma(const WindConfig& cfg, double altitude);

}  // namespace tmpc

#endif  // TMPC_VEHICLE_HPP
