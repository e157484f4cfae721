#include "tmpc/vehicle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tmpc/numeric.hpp"
#include "tmpc/rng.hpp"

namespace tmpc {

namespace {
const Vec3 kDown{0.0, 0.0, 1.0};  // 1_3 in NED
}

StateDerivative continuous_dynamics(const VehicleState& x, const Wrench& u,
                                    const Vec3& wind, const VehicleParams& p) {
  const Mat3& C = x.pose.C;
  const Vec3 v_air = x.pose.v - wind;

  StateDerivative d;
  d.C_dot = C * cross(x.omega);
  d.r_dot = x.pose.v;
  d.v_dot = kDown * p.gravity - C * kDown * (u.thrust / p.mass) -
            C * p.drag_translational * C.transpose() * v_air / p.mass;
  d.omega_dot = p.inertia.ldlt().solve(
      u.torque - p.drag_rotational_velocity * C.transpose() * v_air -
      p.drag_rotational_rate * x.omega - x.omega.cross(p.inertia * x.omega));
  return d;
}

VehicleState rk4_step(const VehicleState& x, const Wrench& u, const Vec3& wind,
                      const VehicleParams& p, double dt) {
  auto eval = [&](const VehicleState& s) { return continuous_dynamics(s, u, wind, p); };
  auto advance = [](const VehicleState& s, const StateDerivative& d, double h) {
    VehicleState out;
    out.pose.C = s.pose.C + h * d.C_dot;
    out.pose.v = s.pose.v + h * d.v_dot;
    out.pose.r = s.pose.r + h * d.r_dot;
    out.omega = s.omega + h * d.omega_dot;
    return out;
  };

  const StateDerivative k1 = eval(x);
  const StateDerivative k2 = eval(advance(x, k1, 0.5 * dt));
  const StateDerivative k3 = eval(advance(x, k2, 0.5 * dt));
  const StateDerivative k4 = eval(advance(x, k3, dt));

  VehicleState out;
  out.pose.C = x.pose.C + dt / 6.0 * (k1.C_dot + 2.0 * k2.C_dot + 2.0 * k3.C_dot + k4.C_dot);
  out.pose.v = x.pose.v + dt / 6.0 * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
  out.pose.r = x.pose.r + dt / 6.0 * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot);
  out.omega = x.omega + dt / 6.0 * (k1.omega_dot + 2.0 * k2.omega_dot +
                                    2.0 * k3.omega_dot + k4.omega_dot);

  if (!out.pose.C.allFinite() || !out.pose.v.allFinite() || !out.pose.r.allFinite() ||
      !out.omega.allFinite()) {
    throw std::runtime_error("rk4_step: non-finite state derivative");
  }
  out.pose.C = orthonormalize(out.pose.C);
  return out;
}

Mixer::Mixer(const VehicleParams& p) {
  map_.setZero();
  map_.block<1, 3>(0, 0) = -kDown.transpose();
  map_.block<1, 3>(0, 3) = -kDown.transpose();
  map_.block<3, 3>(1, 0) = cross(p.rotor_front);
  map_.block<3, 3>(1, 3) = cross(p.rotor_rear);

  const Eigen::Matrix4d gram = map_ * map_.transpose();
  Eigen::FullPivLU<Eigen::Matrix4d> lu(gram);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("Mixer: rotor geometry gives a rank-deficient allocation map");
  }
  pinv_ = map_.transpose() * lu.inverse();
}

RotorForces Mixer::allocate(const Wrench& w) const {
  Eigen::Vector4d u;
  u << w.thrust, w.torque;
  const Eigen::Matrix<double, 6, 1> forces = pinv_ * u;
  RotorForces rf;
  rf.front = forces.head<3>();
  rf.rear = forces.tail<3>();
  return rf;
}

Wrench Mixer::wrench(const RotorForces& rf) const {
  Eigen::Matrix<double, 6, 1> forces;
  forces << rf.front, rf.rear;
  const Eigen::Vector4d u = map_ * forces;
  Wrench w;
  w.thrust = u(0);
  w.torque = u.tail<3>();
  return w;
}

RotorForces mixer_allocate(const Wrench& w, const VehicleParams& p) {
  return Mixer(p).allocate(w);
}

Wrench mixer_wrench(const RotorForces& rf, const VehicleParams& p) {
  return Mixer(p).wrench(rf);
}

namespace {

constexpr double kFtPerM = 1.0 / 0.3048;

struct DrydenScales {
  double length_uv;  // m
  double length_w;   // m
  double sigma_uv;   // m/s
  double sigma_w;    // m/s
};

// MIL-F-8785C low-altitude scale lengths and intensities. The empirical
// constants expect altitude in feet.
DrydenScales dryden_scales(double w0, double altitude) {
  const double h_ft = std::clamp(std::abs(altitude) * kFtPerM, 10.0, 1000.0);
  const double den = 0.177 + 0.000823 * h_ft;
  DrydenScales s;
  s.length_w = h_ft / kFtPerM;
  s.length_uv = h_ft / std::pow(den, 1.2) / kFtPerM;
  s.sigma_w = 0.1 * w0;
  s.sigma_uv = s.sigma_w / std::pow(den, 0.4);
  return s;
}

// Discrete stationary colored-noise filter x_{k+1} = Ad x + L n, y = c^T x,
// scaled so that stationary std of y is exactly sigma.
class ShapingFilter {
 public:
  ShapingFilter(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                const Eigen::VectorXd& C, double sigma, double dt) {
    const Eigen::Index n = A.rows();
    // Van Loan: exp([ -A BB^T; 0 A^T ] dt) gives Ad and Qd.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = -A;
    M.topRightCorner(n, n) = B * B.transpose();
    M.bottomRightCorner(n, n) = A.transpose();
    const Eigen::MatrixXd E = expm(M * dt);
    Ad_ = E.bottomRightCorner(n, n).transpose();
    const Eigen::MatrixXd Qd = Ad_ * E.topRightCorner(n, n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Qd + Qd.transpose()));
    noise_gain_ = es.eigenvectors() *
                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    const Eigen::MatrixXd P = discrete_lyapunov(Ad_, Qd);
    const double var = C.dot(P * C);
    out_ = var > 0.0 ? Eigen::VectorXd(C * (sigma / std::sqrt(var))) : C;

    // Stationary start so the series has the design RMS from sample 0.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(P);
    init_gain_ = ep.eigenvectors() *
                 ep.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    state_ = Eigen::VectorXd::Zero(n);
  }

  void init(RngStream& rng) {
    Eigen::VectorXd n(state_.size());
    for (Eigen::Index i = 0; i < n.size(); ++i) n(i) = rng.gaussian();
    state_ = init_gain_ * n;
  }

  double step(RngStream& rng) {
    Eigen::VectorXd n(state_.size());
    for (Eigen::Index i = 0; i < n.size(); ++i) n(i) = rng.gaussian();
    state_ = Ad_ * state_ + noise_gain_ * n;
    return out_.dot(state_);
  }

 private:
  Eigen::MatrixXd Ad_, noise_gain_, init_gain_;
  Eigen::VectorXd out_, state_;
};

ShapingFilter first_order_filter(double corr_length, double airspeed, double sigma,
                                 double dt) {
  const double tau = corr_length / airspeed;
  Eigen::MatrixXd A(1, 1);
  A << -1.0 / tau;
  Eigen::VectorXd B(1), C(1);
  B << 1.0;
  C << 1.0;
  return {A, B, C, sigma, dt};
}

ShapingFilter second_order_filter(double corr_length, double airspeed, double sigma,
                                  double dt) {
  const double tau = corr_length / airspeed;
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, -1.0 / (tau * tau), -2.0 / tau;
  Eigen::VectorXd B(2), C(2);
  B << 0.0, 1.0;
  C << 1.0 / (tau * tau), std::sqrt(3.0) / tau;
  return {A, B, C, sigma, dt};
}

}  // namespace

Vec3 dryden_design_sigma(const WindConfig& cfg, double altitude) {
  const DrydenScales s = dryden_scales(cfg.intensity_w0, altitude);
  return {s.sigma_uv, s.sigma_uv, s.sigma_w};
}

std::vector<Vec3> dryden_gust_sequence(const WindConfig& cfg, double airspeed,
                                       double altitude, double dt, std::size_t n) {
  if (airspeed <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("dryden_gust_sequence: airspeed and dt must be positive");
  }
  if (cfg.intensity_w0 <= 0.0) {
    return std::vector<Vec3>(n, Vec3::Zero());
  }

  const DrydenScales s = dryden_scales(cfg.intensity_w0, altitude);
  ShapingFilter fu = first_order_filter(s.length_uv, airspeed, s.sigma_uv, dt);
  ShapingFilter fv = first_order_filter(s.length_uv, airspeed, s.sigma_uv, dt);
  ShapingFilter fw = second_order_filter(s.length_w, airspeed, s.sigma_w, dt);

  RngStream ru(cfg.gust_seed, "gust_u");
  RngStream rv(cfg.gust_seed, "gust_v");
  RngStream rw(cfg.gust_seed, "gust_w");
  fu.init(ru);
  fv.init(rv);
  fw.init(rw);

  std::vector<Vec3> gusts(n);
  for (std::size_t k = 0; k < n; ++k) {
    gusts[k] = Vec3(fu.step(ru), fv.step(rv), fw.step(rw));
  }
  return gusts;
}

}  // namespace tmpc
