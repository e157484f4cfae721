#include "tmpc/reference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tmpc {

namespace {

const Vec3 kDown{0.0, 0.0, 1.0};
constexpr double kMinThrustAccel = 1e-6;  // m/s^2
constexpr double kFdStep = 1e-3;          // s, attitude/body-rate differencing

struct AttitudeThrust {
  Mat3 C;
  double f;
};

// Thrust direction and magnitude from the translational dynamics solved for
// C 1_3 f. The drag term needs C itself, so iterate a couple of passes.
AttitudeThrust flat_attitude(const FlatOutputs& flat, const VehicleParams& p) {
  const bool has_drag = !p.drag_translational.isZero(0.0);
  Mat3 C = Mat3::Identity();
  AttitudeThrust out{Mat3::Identity(), 0.0};

  const int passes = has_drag ? 3 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    Vec3 t_vec = p.gravity * kDown - flat.ddr;
    if (has_drag) {
      t_vec -= C * p.drag_translational * C.transpose() * flat.dr / p.mass;
    }
    const double accel = t_vec.norm();
    if (accel < kMinThrustAccel) {
      throw std::domain_error("flat_outputs_to_knot: vanishing thrust, attitude undefined");
    }
    const Vec3 b3 = t_vec / accel;
    const Vec3 heading{std::cos(flat.psi), std::sin(flat.psi), 0.0};
    Vec3 b2 = b3.cross(heading);
    const double n2 = b2.norm();
    if (n2 < 1e-9) {
      throw std::domain_error("flat_outputs_to_knot: thrust axis parallel to heading");
    }
    b2 /= n2;
    const Vec3 b1 = b2.cross(b3);
    C.col(0) = b1;
    C.col(1) = b2;
    C.col(2) = b3;
    out.C = C;
    out.f = p.mass * accel;
  }
  return out;
}

// Body rates from the time derivative of the flat attitude, valid for D = 0
// where t_vec depends on ddr only.
Vec3 analytic_omega(const FlatOutputs& flat, const VehicleParams& p) {
  const Vec3 t_vec = p.gravity * kDown - flat.ddr;
  const double norm_t = t_vec.norm();
  const Vec3 dt_vec = -flat.dddr;

  const Vec3 b3 = t_vec / norm_t;
  const Vec3 db3 = (Mat3::Identity() - b3 * b3.transpose()) * dt_vec / norm_t;

  const Vec3 c1{std::cos(flat.psi), std::sin(flat.psi), 0.0};
  const Vec3 dc1 = flat.dpsi * Vec3{-std::sin(flat.psi), std::cos(flat.psi), 0.0};

  const Vec3 u = b3.cross(c1);
  const Vec3 du = db3.cross(c1) + b3.cross(dc1);
  const double nu = u.norm();
  const Vec3 b2 = u / nu;
  const Vec3 db2 = (Mat3::Identity() - b2 * b2.transpose()) * du / nu;

  const Vec3 b1 = b2.cross(b3);
  const Vec3 db1 = db2.cross(b3) + b2.cross(db3);

  Mat3 C, dC;
  C.col(0) = b1;
  C.col(1) = b2;
  C.col(2) = b3;
  dC.col(0) = db1;
  dC.col(1) = db2;
  dC.col(2) = db3;

  const Mat3 Omega = C.transpose() * dC;
  return uncross(0.5 * (Omega - Omega.transpose()));
}

// Taylor-shift of the flat outputs by dt, jerk held constant.
FlatOutputs shift_flat(const FlatOutputs& f, double dt) {
  FlatOutputs out;
  out.r = f.r + dt * f.dr + 0.5 * dt * dt * f.ddr + dt * dt * dt / 6.0 * f.dddr;
  out.dr = f.dr + dt * f.ddr + 0.5 * dt * dt * f.dddr;
  out.ddr = f.ddr + dt * f.dddr;
  out.dddr = f.dddr;
  out.psi = f.psi + dt * f.dpsi;
  out.dpsi = f.dpsi;
  return out;
}

Vec3 fd_omega(const FlatOutputs& minus, const FlatOutputs& plus, double h,
              const VehicleParams& p) {
  const Mat3 Cm = flat_attitude(minus, p).C;
  const Mat3 Cp = flat_attitude(plus, p).C;
  return so3_log(Cm.transpose() * Cp) / (2.0 * h);
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace

ReferenceKnot flat_outputs_to_knot(const FlatOutputs& flat, const VehicleParams& p) {
  if (!flat.r.allFinite() || !flat.dr.allFinite() || !flat.ddr.allFinite() ||
      !flat.dddr.allFinite() || !std::isfinite(flat.psi) || !std::isfinite(flat.dpsi)) {
    throw std::invalid_argument("flat_outputs_to_knot: non-finite flat outputs");
  }
  const AttitudeThrust at = flat_attitude(flat, p);

  ReferenceKnot knot;
  knot.C_ar = at.C;
  knot.f_r = at.f;
  knot.v_r = flat.dr;
  knot.r_r = flat.r;
  knot.psi_r = flat.psi;

  const bool has_drag = !p.drag_translational.isZero(0.0);
  const FlatOutputs fm = shift_flat(flat, -kFdStep);
  const FlatOutputs fp = shift_flat(flat, kFdStep);
  knot.omega_r = has_drag ? fd_omega(fm, fp, kFdStep, p) : analytic_omega(flat, p);

  // Torque feedforward from the body-rate derivative (zero rotational drag).
  const Vec3 wm = has_drag ? fd_omega(shift_flat(fm, -kFdStep), flat, kFdStep, p)
                           : analytic_omega(fm, p);
  const Vec3 wp = has_drag ? fd_omega(flat, shift_flat(fp, kFdStep), kFdStep, p)
                           : analytic_omega(fp, p);
  const Vec3 domega = (wp - wm) / (2.0 * kFdStep);
  knot.m_r = p.inertia * domega + knot.omega_r.cross(p.inertia * knot.omega_r);
  return knot;
}

std::vector<Vec3> torque_reference(const std::vector<Vec3>& omega_seq, double dt,
                                   const VehicleParams& p) {
  if (omega_seq.empty()) return {};
  std::vector<Vec3> torque(omega_seq.size());
  for (std::size_t k = 0; k + 1 < omega_seq.size(); ++k) {
    const Vec3& w = omega_seq[k];
    torque[k] = p.inertia * (omega_seq[k + 1] - w) / dt + w.cross(p.inertia * w);
  }
  if (omega_seq.size() >= 2) {
    torque.back() = torque[omega_seq.size() - 2];
  } else {
    const Vec3& w = omega_seq.front();
    torque[0] = w.cross(p.inertia * w);
  }
  return torque;
}

ReferenceTrajectory ReferenceTrajectory::plan(const VehicleState& x0, const Vec3& target_r,
                                              double target_psi, double duration, double t0,
                                              const VehicleParams& p) {
  if (!(duration > 0.0) || !target_r.allFinite() || !std::isfinite(target_psi)) {
    throw std::invalid_argument("ReferenceTrajectory::plan: bad target or duration");
  }

  ReferenceTrajectory traj;
  traj.t0_ = t0;
  traj.duration_ = duration;
  traj.target_ = target_r;
  traj.params_ = p;

  const double T = duration;
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  // s(0), s'(0), s''(0)
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A(2, 2) = 2.0;
  // s(T), s'(T), s''(T)
  for (int j = 0; j < 6; ++j) {
    A(3, j) = std::pow(T, j);
    if (j >= 1) A(4, j) = j * std::pow(T, j - 1);
    if (j >= 2) A(5, j) = j * (j - 1) * std::pow(T, j - 2);
  }
  const auto lu = A.fullPivLu();
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Matrix<double, 6, 1> b;
    b << x0.pose.r(axis), x0.pose.v(axis), 0.0, target_r(axis), 0.0, 0.0;
    traj.coeffs_[axis] = lu.solve(b);
  }

  const Mat3& C0 = x0.pose.C;
  traj.psi_0_ = std::atan2(C0(1, 0), C0(0, 0));
  traj.psi_f_ = traj.psi_0_ + wrap_angle(target_psi - traj.psi_0_);
  return traj;
}

FlatOutputs ReferenceTrajectory::flat_at(double t) const {
  const double tau = std::clamp(t - t0_, 0.0, duration_);
  FlatOutputs f;
  for (int axis = 0; axis < 3; ++axis) {
    const auto& c = coeffs_[axis];
    double s = 0.0, ds = 0.0, dds = 0.0, ddds = 0.0;
    for (int j = 5; j >= 0; --j) s = s * tau + c(j);
    for (int j = 5; j >= 1; --j) ds = ds * tau + j * c(j);
    for (int j = 5; j >= 2; --j) dds = dds * tau + j * (j - 1) * c(j);
    for (int j = 5; j >= 3; --j) ddds = ddds * tau + j * (j - 1) * (j - 2) * c(j);
    f.r(axis) = s;
    f.dr(axis) = ds;
    f.ddr(axis) = dds;
    f.dddr(axis) = ddds;
  }
  f.psi = psi_0_ + (psi_f_ - psi_0_) * tau / duration_;
  f.dpsi = (psi_f_ - psi_0_) / duration_;
  if (t - t0_ >= duration_) {
    // Hover hold at the target: terminal knot has v = 0, omega = 0.
    f.dr.setZero();
    f.ddr.setZero();
    f.dddr.setZero();
    f.dpsi = 0.0;
  }
  return f;
}

ReferenceKnot ReferenceTrajectory::knot(double t) const {
  ReferenceKnot k = flat_outputs_to_knot(flat_at(t), params_);
  k.t = t;
  if (t - t0_ >= duration_) {
    k.omega_r.setZero();
    k.m_r.setZero();
  }
  return k;
}

std::vector<ReferenceKnot> ReferenceTrajectory::sample(const std::vector<double>& times) const {
  std::vector<ReferenceKnot> knots;
  knots.reserve(times.size());
  for (double t : times) knots.push_back(knot(t));
  return knots;
}

bool replan_trigger(const std::vector<bool>& l1_active_history, double dt, double window) {
  std::size_t run = 0;
  for (auto it = l1_active_history.rbegin(); it != l1_active_history.rend() && *it; ++it) {
    ++run;
  }
  return static_cast<double>(run) * dt >= window && run > 0;
}

double suggested_plan_duration(const Vec3& r0, const Vec3& target) {
  constexpr double kCruise = 5.0;  // m/s
  const double dist = (target - r0).norm();
  return std::clamp(2.0 * dist / kCruise, 8.0, 40.0);
}

}  // namespace tmpc
