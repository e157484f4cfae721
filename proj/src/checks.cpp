#include "tmpc/checks.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "tmpc/lie.hpp"
#include "tmpc/mpc.hpp"
#include "tmpc/qpsolve.hpp"
#include "tmpc/rng.hpp"

namespace tmpc::checks {

namespace {

// Truth translational acceleration at (C, v) under thrust f, wind = 0.
Vec3 v_dot(const Mat3& C, const Vec3& v, double f, const VehicleParams& p) {
  VehicleState s;
  s.pose.C = C;
  s.pose.v = v;
  Wrench u;
  u.thrust = f;
  return continuous_dynamics(s, u, Vec3::Zero(), p).v_dot;
}

// Truth angular acceleration scaled by J, i.e. d(J omega)/dt in body axes.
Vec3 h_body_dot(const Mat3& C, const Vec3& v, const Vec3& omega, const Vec3& torque,
                const VehicleParams& p) {
  return torque - p.drag_rotational_velocity * C.transpose() * v -
         p.drag_rotational_rate * omega - omega.cross(p.inertia * omega);
}

}  // namespace

Vec9 outer_error_rate(const ReferenceKnot& knot, const VehicleParams& p,
                      const Vec9& dxi, const Vec4& du) {
  const ExtendedPose dX = se23_exp(dxi);
  const Mat3 C = knot.C_ar * dX.C;
  const Vec3 v = knot.v_r + knot.C_ar * dX.v;

  const double f = knot.f_r + du(0);
  const Vec3 omega = dX.C.transpose() * knot.omega_r + du.tail<3>();

  const Vec3 vdot = v_dot(C, v, f, p);
  const Vec3 vdot_ref = v_dot(knot.C_ar, knot.v_r, knot.f_r, p);

  // Blocks of dX_dot assembled from the product rule on dX = Xr^-1 X.
  const Mat3 dC_dot = -cross(knot.omega_r) * dX.C + dX.C * cross(omega);
  const Vec3 dv_dot = -knot.omega_r.cross(dX.v) + knot.C_ar.transpose() * (vdot - vdot_ref);
  const Vec3 dr_dot = -knot.omega_r.cross(dX.r) + dX.v;

  const Mat3 Phi = dC_dot * dX.C.transpose();  // antisymmetric
  Vec9 rate;
  rate.segment<3>(0) = uncross(Phi);
  rate.segment<3>(3) = dv_dot - Phi * dX.v;
  rate.segment<3>(6) = dr_dot - Phi * dX.r;
  return rate;
}

Vec3 inner_error_rate(const Vec3& omega_ref, const ReferenceKnot& knot,
                      const VehicleParams& p, const Vec3& xi_phi, const Vec3& xi_v,
                      const Vec3& dh, const Vec3& dm) {
  const Mat3 dC = so3_exp(xi_phi);
  const Mat3 C = knot.C_ar * dC;
  const Vec3 v = knot.v_r + knot.C_ar * left_jacobian(xi_phi) * xi_v;

  const Vec3 h_ref = p.inertia * omega_ref;
  const Vec3 omega = p.inertia.ldlt().solve(dC.transpose() * (h_ref + dh));
  const Vec3 torque = dC.transpose() * knot.m_r + dm;

  const Vec3 h_dot = h_body_dot(C, v, omega, torque, p);
  const Vec3 h_ref_dot = h_body_dot(knot.C_ar, knot.v_r, omega_ref, knot.m_r, p);

  const Mat3 dC_dot = -cross(omega_ref) * dC + dC * cross(omega);
  return dC_dot * (p.inertia * omega) + dC * h_dot - h_ref_dot;
}

Vec12 smpc_error_rate(const ReferenceKnot& knot, const VehicleParams& p,
                      const Vec12& dx, const Vec4& du) {
  const Vec9 dxi = dx.head<9>();
  const Vec3 dh = dx.tail<3>();
  const ExtendedPose dX = se23_exp(dxi);

  // The angular velocity is a state here, recovered from the momentum error.
  const Vec3 h_ref = p.inertia * knot.omega_r;
  const Vec3 omega = p.inertia.ldlt().solve(dX.C.transpose() * (h_ref + dh));

  const Mat3 C = knot.C_ar * dX.C;
  const Vec3 v = knot.v_r + knot.C_ar * dX.v;
  const double f = knot.f_r + du(0);
  const Vec3 torque = dX.C.transpose() * knot.m_r + du.tail<3>();

  const Vec3 vdot = v_dot(C, v, f, p);
  const Vec3 vdot_ref = v_dot(knot.C_ar, knot.v_r, knot.f_r, p);

  const Mat3 dC_dot = -cross(knot.omega_r) * dX.C + dX.C * cross(omega);
  const Vec3 dv_dot = -knot.omega_r.cross(dX.v) + knot.C_ar.transpose() * (vdot - vdot_ref);
  const Vec3 dr_dot = -knot.omega_r.cross(dX.r) + dX.v;
  const Mat3 Phi = dC_dot * dX.C.transpose();

  const Vec3 h_dot = h_body_dot(C, v, omega, torque, p);
  const Vec3 h_ref_dot = h_body_dot(knot.C_ar, knot.v_r, knot.omega_r, knot.m_r, p);

  Vec12 rate;
  rate.segment<3>(0) = uncross(Phi);
  rate.segment<3>(3) = dv_dot - Phi * dX.v;
  rate.segment<3>(6) = dr_dot - Phi * dX.r;
  rate.segment<3>(9) = dC_dot * (p.inertia * omega) + dX.C * h_dot - h_ref_dot;
  return rate;
}

Eigen::MatrixXd fd_outer_jacobian(const ReferenceKnot& knot, const VehicleParams& p,
                                  double eps) {
  Eigen::MatrixXd J(9, 13);
  for (int j = 0; j < 13; ++j) {
    Vec9 xp = Vec9::Zero(), xm = Vec9::Zero();
    Vec4 up = Vec4::Zero(), um = Vec4::Zero();
    if (j < 9) {
      xp(j) = eps;
      xm(j) = -eps;
    } else {
      up(j - 9) = eps;
      um(j - 9) = -eps;
    }
    J.col(j) = (outer_error_rate(knot, p, xp, up) - outer_error_rate(knot, p, xm, um)) /
               (2.0 * eps);
  }
  return J;
}

Eigen::MatrixXd fd_inner_jacobian(const Vec3& omega_ref, const ReferenceKnot& knot,
                                  const VehicleParams& p, double eps) {
  // Columns: xi_phi (3), xi_v (3), dh (3), dm (3).
  Eigen::MatrixXd J(3, 12);
  for (int j = 0; j < 12; ++j) {
    Eigen::Matrix<double, 12, 1> e = Eigen::Matrix<double, 12, 1>::Zero();
    e(j) = eps;
    auto eval = [&](const Eigen::Matrix<double, 12, 1>& q) {
      return inner_error_rate(omega_ref, knot, p, q.segment<3>(0), q.segment<3>(3),
                              q.segment<3>(6), q.segment<3>(9));
    };
    J.col(j) = (eval(e) - eval(-e)) / (2.0 * eps);
  }
  return J;
}

Eigen::MatrixXd fd_smpc_jacobian(const ReferenceKnot& knot, const VehicleParams& p,
                                 double eps) {
  Eigen::MatrixXd J(12, 16);
  for (int j = 0; j < 16; ++j) {
    Vec12 xp = Vec12::Zero(), xm = Vec12::Zero();
    Vec4 up = Vec4::Zero(), um = Vec4::Zero();
    if (j < 12) {
      xp(j) = eps;
      xm(j) = -eps;
    } else {
      up(j - 12) = eps;
      um(j - 12) = -eps;
    }
    J.col(j) = (smpc_error_rate(knot, p, xp, up) - smpc_error_rate(knot, p, xm, um)) /
               (2.0 * eps);
  }
  return J;
}

double max_relative_column_error(const Eigen::MatrixXd& analytic,
                                 const Eigen::MatrixXd& probed, double floor) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
    const double err = (analytic.col(j) - probed.col(j)).norm();
    const double scale = std::max(probed.col(j).norm(), floor);
    worst = std::max(worst, err / scale);
  }
  return worst;
}

ReferenceKnot random_knot(std::uint64_t seed, std::uint64_t index) {
  RngStream rng(seed ^ (0x9E37ULL * index), "knot");
  ReferenceKnot k;
  k.C_ar = so3_exp(rng.gaussian_vec3(0.0, 0.6));
  k.v_r = rng.gaussian_vec3(0.0, 3.0);
  k.r_r = rng.gaussian_vec3(0.0, 20.0);
  k.omega_r = rng.gaussian_vec3(0.0, 0.4);
  k.f_r = std::max(100.0, 218.0 * 9.81 + rng.gaussian(0.0, 300.0));
  k.m_r = rng.gaussian_vec3(0.0, 20.0);
  return k;
}

bool run_property_suite(std::vector<std::string>& report) {
  bool ok = true;
  auto check = [&](const std::string& name, bool pass, double value) {
    std::ostringstream line;
    line << (pass ? "ok   " : "FAIL ") << name << " (" << value << ")";
    report.push_back(line.str());
    ok = ok && pass;
  };

  // Lie round trips.
  {
    RngStream rng(11, "verify_lie");
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      Vec9 xi;
      for (int j = 0; j < 9; ++j) xi(j) = rng.gaussian(0.0, j < 3 ? 0.8 : 5.0);
      worst = std::max(worst, (se23_log(se23_exp(xi)) - xi).norm());
    }
    check("se23 exp/log round trip", worst < 1e-9, worst);
  }
  {
    RngStream rng(12, "verify_jac");
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Vec3 phi = rng.gaussian_vec3(0.0, 0.9);
      worst = std::max(worst,
                       (left_jacobian(phi) * left_jacobian_inv(phi) - Mat3::Identity())
                           .norm());
    }
    check("left Jacobian inverse product", worst < 1e-10, worst);
  }

  // Mixer round trip.
  {
    VehicleParams p;
    Mixer mixer(p);
    RngStream rng(13, "verify_mixer");
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      Wrench w;
      w.thrust = rng.gaussian(p.mass * p.gravity, 500.0);
      w.torque = rng.gaussian_vec3(0.0, 80.0);
      const Wrench back = mixer.wrench(mixer.allocate(w));
      worst = std::max({worst, std::abs(back.thrust - w.thrust),
                        (back.torque - w.torque).norm()});
    }
    check("mixer round trip", worst < 1e-10, worst);
  }

  // Horizon schedules hit the configured totals.
  {
    const auto outer = nonuniform_schedule(0.10, 48, 10, 28.8);
    const auto smpc = nonuniform_schedule(0.02, 48, 10, 5.76);
    double sum_outer = 0.0, sum_smpc = 0.0;
    for (double d : outer) sum_outer += d;
    for (double d : smpc) sum_smpc += d;
    const double err = std::max(std::abs(sum_outer - 28.8), std::abs(sum_smpc - 5.76));
    check("non-uniform schedule totals", err < 1e-9, err);
  }

  // Analytic Jacobians against finite differences, zero and nonzero drag.
  {
    VehicleParams zero_drag;
    VehicleParams with_drag;
    with_drag.drag_translational = Vec3(0.6, 0.6, 0.9).asDiagonal();
    with_drag.drag_rotational_velocity = Vec3(0.2, 0.2, 0.1).asDiagonal();
    with_drag.drag_rotational_rate = Vec3(1.0, 1.0, 1.0).asDiagonal();
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
      const ReferenceKnot knot = random_knot(99, i);
      for (const VehicleParams& p : {zero_drag, with_drag}) {
        const LinearModel outer = outer_jacobians(knot, p);
        Eigen::MatrixXd outer_full(9, 13);
        outer_full << outer.A, outer.B;
        worst = std::max(worst,
                         max_relative_column_error(outer_full, fd_outer_jacobian(knot, p)));

        const InnerJacobians inner = inner_jacobians(knot.omega_r, knot, p);
        Eigen::MatrixXd inner_full(3, 12);
        inner_full << inner.coupling_phi, inner.coupling_v, inner.model.A, inner.model.B;
        worst = std::max(worst, max_relative_column_error(
                                    inner_full, fd_inner_jacobian(knot.omega_r, knot, p)));

        const LinearModel smpc = smpc_jacobians(knot, p);
        Eigen::MatrixXd smpc_full(12, 16);
        smpc_full << smpc.A, smpc.B;
        worst = std::max(worst,
                         max_relative_column_error(smpc_full, fd_smpc_jacobian(knot, p)));
      }
    }
    check("analytic vs finite-difference Jacobians", worst < 1e-4, worst);
  }

  // QP solver KKT residuals on random strictly convex problems.
  {
    RngStream rng(14, "verify_qp");
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const int n = 2 + static_cast<int>(rng.uniform() * 8);
      const int m = 2 + static_cast<int>(rng.uniform() * 12);
      Eigen::MatrixXd Root(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) Root(r, c) = rng.gaussian();
      QPProblem prob;
      prob.H = Root * Root.transpose() + Eigen::MatrixXd::Identity(n, n);
      prob.F = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
      prob.G = Eigen::MatrixXd::NullaryExpr(m, n, [&](Eigen::Index, Eigen::Index) {
        return rng.gaussian();
      });
      prob.w = Eigen::VectorXd::NullaryExpr(m, [&](Eigen::Index) {
        return std::abs(rng.gaussian()) + 0.1;
      });
      QPSolver solver;
      const QPSolution sol = solver.solve(prob);
      const KKTResiduals res = kkt_residuals(prob, sol.mu, sol.lambda);
      worst = std::max({worst, res.stationarity, res.primal,
                        res.complementarity, -res.dual_lower});
    }
    check("QP KKT residuals", worst < 1e-6, worst);
  }

  return ok;
}

}  // namespace tmpc::checks
