#include "tmpc/cascade.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "tmpc/linmodel.hpp"

namespace tmpc {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Eigen::VectorXd diag_vec(std::initializer_list<double> blocks3, double lead = -1.0) {
  std::vector<double> v;
  if (lead >= 0.0) v.push_back(lead);
  for (double b : blocks3) {
    v.push_back(b);
    v.push_back(b);
    v.push_back(b);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

HorizonSpec make_horizon(const LoopTuning& tune) {
  HorizonSpec h;
  h.N = tune.N;
  h.Nu = tune.Nu;
  h.Nc = tune.Nc;
  h.dt_schedule = nonuniform_schedule(tune.dt, tune.N, tune.Nc, tune.T_total);
  return h;
}

CostSpec make_cost(const LoopTuning& tune, double slack_quad, double slack_lin) {
  CostSpec c;
  c.Q = tune.q_diag.asDiagonal();
  c.R = tune.r_diag.asDiagonal();
  c.P = tune.terminal_scale * c.Q;
  c.slack_quad = slack_quad;
  c.slack_lin = slack_lin;
  return c;
}

// Shifts the previous decision vector one input block forward, repeating the
// last block; slacks stay in place.
Eigen::VectorXd shift_warm_start(const Eigen::VectorXd& mu, int Nu, int m, int n_slack) {
  if (mu.size() != Nu * m + n_slack) return {};
  Eigen::VectorXd shifted = mu;
  shifted.head((Nu - 1) * m) = mu.segment(m, (Nu - 1) * m);
  shifted.segment((Nu - 1) * m, m) = mu.segment((Nu - 1) * m, m);
  return shifted;
}

}  // namespace

ControllerConfig ControllerConfig::Defaults() {
  ControllerConfig cfg;
  cfg.outer = {0.10, 48, 10, 10, 28.8, diag_vec({1000.0, 10.0, 100.0}),
               diag_vec({1.0}, 0.001), 1.0};
  cfg.inner = {0.02, 10, 5, 5, 0.2, diag_vec({1000.0}), diag_vec({1.0}), 1.0};
  cfg.smpc = {0.02, 48, 10, 10, 5.76, diag_vec({1000.0, 10.0, 100.0, 10.0}),
              diag_vec({1.0}, 0.001), 1.0};
  return cfg;
}

CmpcController::CmpcController(const ControllerConfig& cfg, const VehicleParams& estimated)
    : cfg_(cfg),
      est_(estimated),
      outer_horizon_(make_horizon(cfg.outer)),
      inner_horizon_(make_horizon(cfg.inner)),
      outer_cost_(make_cost(cfg.outer, cfg.slack_quad, cfg.slack_lin)),
      inner_cost_(make_cost(cfg.inner, cfg.slack_quad, cfg.slack_lin)),
      solver_(cfg.qp) {
  outer_cons_.keep_in = true;
  outer_cons_.l1_attitude = true;
  outer_cons_.alpha = cfg.keep_in_alpha;
  outer_cons_.gamma = cfg.l1_gamma;
  outer_cons_.u_min = Eigen::Vector4d(cfg.f_min, -cfg.omega_max, -cfg.omega_max,
                                      -cfg.omega_max);
  outer_cons_.u_max = Eigen::Vector4d(cfg.f_max, cfg.omega_max, cfg.omega_max,
                                      cfg.omega_max);

  inner_cons_.u_min = -cfg.torque_max * Eigen::Vector3d::Ones();
  inner_cons_.u_max = cfg.torque_max * Eigen::Vector3d::Ones();

  // Benign startup command: hover feedforward, zero rates.
  held_.thrust = est_.mass * est_.gravity;
  held_.omega_star.assign(cfg_.outer.N, Vec3::Zero());
  held_.torque_ff.assign(cfg_.outer.N, Vec3::Zero());
  inner_models_.assign(inner_horizon_.N,
                       discretize_zoh({Mat3::Zero(), Mat3::Identity(), 0.0}, cfg_.inner.dt));
}

void CmpcController::outer_step(const VehicleState& x, const ReferenceTrajectory& traj,
                                double t) {
  const double t_assembly = now_seconds();

  const ReferenceKnot knot0 = traj.knot(t);
  const ExtendedPose dX = left_invariant_error(knot0.pose(), x.pose);
  const Vec9 dxi = se23_log(dX);

  const int N = outer_horizon_.N;
  std::vector<LinearModel> models;
  models.reserve(N);
  std::vector<Mat3> attitude_ref(outer_horizon_.Nc + 1, Mat3::Identity());
  Eigen::MatrixXd u_ff(4, outer_horizon_.Nu);
  std::vector<Vec3> omega_ff(N);
  std::vector<double> f_ff(N);

  double t_i = t;
  for (int i = 0; i < N; ++i) {
    const ReferenceKnot knot_i = i == 0 ? knot0 : traj.knot(t_i);
    models.push_back(discretize_zoh(outer_jacobians(knot_i, est_),
                                    outer_horizon_.dt_schedule[i]));
    if (i >= 1 && i <= outer_horizon_.Nc) attitude_ref[i] = knot_i.C_ar;

    // Step 0 composes the rate feedforward with the measured attitude error;
    // later steps assume the predicted error stays small.
    omega_ff[i] = i == 0 ? Vec3(dX.C.transpose() * knot0.omega_r) : knot_i.omega_r;
    omega_ff[i] = omega_ff[i].cwiseMax(-cfg_.omega_max).cwiseMin(cfg_.omega_max);
    f_ff[i] = std::clamp(knot_i.f_r, cfg_.f_min, cfg_.f_max);
    if (i < outer_horizon_.Nu) {
      u_ff(0, i) = f_ff[i];
      u_ff.block<3, 1>(1, i) = omega_ff[i];
    }
    t_i += outer_horizon_.dt_schedule[i];
  }
  assembly_time_ += now_seconds() - t_assembly;

  const Eigen::VectorXd warm = shift_warm_start(outer_warm_mu_, outer_horizon_.Nu, 4, 2);
  outer_result_ = mpc_step(dxi, models, outer_cost_, outer_cons_, outer_horizon_,
                           attitude_ref, {}, u_ff, solver_, warm, outer_warm_lambda_);

  if (outer_result_.qp.status == QPStatus::kOptimal) {
    outer_faulted_ = false;
    outer_fault_streak_ = 0;
    outer_warm_mu_ = outer_result_.warm_mu;
    outer_warm_lambda_ = outer_result_.warm_lambda;

    OuterCommand cmd;
    cmd.t_issued = t;
    cmd.thrust = std::clamp(f_ff[0] + outer_result_.du_seq(0, 0), cfg_.f_min, cfg_.f_max);
    cmd.omega_cmd = (omega_ff[0] + outer_result_.du_seq.block<3, 1>(1, 0))
                        .cwiseMax(-cfg_.omega_max)
                        .cwiseMin(cfg_.omega_max);
    cmd.omega_star.resize(N);
    for (int i = 0; i < N; ++i) {
      cmd.omega_star[i] = (omega_ff[i] + outer_result_.du_seq.block<3, 1>(1, i))
                              .cwiseMax(-cfg_.omega_max)
                              .cwiseMin(cfg_.omega_max);
    }
    cmd.torque_ff = torque_reference(cmd.omega_star, cfg_.outer.dt, est_);
    held_ = cmd;
  } else {
    // Hold the previous command for one period, then degrade to pure
    // feedforward about the reference.
    outer_faulted_ = true;
    ++outer_fault_streak_;
    outer_warm_mu_.resize(0);
    outer_warm_lambda_.resize(0);
    if (outer_fault_streak_ > 1) {
      OuterCommand cmd;
      cmd.t_issued = t;
      cmd.thrust = std::clamp(knot0.f_r, cfg_.f_min, cfg_.f_max);
      cmd.omega_cmd = Vec3(dX.C.transpose() * knot0.omega_r)
                          .cwiseMax(-cfg_.omega_max)
                          .cwiseMin(cfg_.omega_max);
      cmd.omega_star.assign(N, cmd.omega_cmd);
      cmd.torque_ff = torque_reference(cmd.omega_star, cfg_.outer.dt, est_);
      held_ = cmd;
    } else {
      held_.t_issued = t;
    }
  }

  // Inner LTI model for this outer period, linearized about the first
  // optimal rate with the E = F = 0 reduction.
  const double t_inner_prep = now_seconds();
  LinearModel inner_ct;
  inner_ct.A = -cross(held_.omega_star.front());
  inner_ct.B = Mat3::Identity();
  inner_models_.assign(inner_horizon_.N, discretize_zoh(inner_ct, cfg_.inner.dt));
  assembly_time_ += now_seconds() - t_inner_prep;
}

InnerCommand CmpcController::inner_step(const VehicleState& x,
                                        const ReferenceTrajectory& traj, double t) {
  const double t_assembly = now_seconds();
  const int idx = std::clamp(
      static_cast<int>(std::floor((t - held_.t_issued) / cfg_.outer.dt + 1e-9)), 0,
      static_cast<int>(held_.omega_star.size()) - 1);
  const Vec3& omega_ref = held_.omega_star[idx];
  const Vec3& m_ref = held_.torque_ff[idx];

  const ReferenceKnot knot = traj.knot(t);
  const Mat3 dC = knot.C_ar.transpose() * x.pose.C;
  const Vec3 dh = dC * (est_.inertia * x.omega) - est_.inertia * omega_ref;

  Eigen::MatrixXd u_ff(3, inner_horizon_.Nu);
  const Vec3 ff = (dC.transpose() * m_ref)
                      .cwiseMax(-cfg_.torque_max)
                      .cwiseMin(cfg_.torque_max);
  u_ff.colwise() = ff;
  assembly_time_ += now_seconds() - t_assembly;

  const Eigen::VectorXd warm = shift_warm_start(inner_warm_mu_, inner_horizon_.Nu, 3, 0);
  inner_result_ = mpc_step(dh, inner_models_, inner_cost_, inner_cons_, inner_horizon_,
                           {}, {}, u_ff, solver_, warm, inner_warm_lambda_);

  if (inner_result_.qp.status == QPStatus::kOptimal) {
    inner_faulted_ = false;
    inner_warm_mu_ = inner_result_.warm_mu;
    inner_warm_lambda_ = inner_result_.warm_lambda;
    last_inner_.torque = (ff + inner_result_.du_seq.col(0))
                             .cwiseMax(-cfg_.torque_max)
                             .cwiseMin(cfg_.torque_max);
  } else {
    inner_faulted_ = true;
    inner_warm_mu_.resize(0);
    inner_warm_lambda_.resize(0);
  }
  return last_inner_;
}

SmpcController::SmpcController(const ControllerConfig& cfg, const VehicleParams& estimated)
    : cfg_(cfg),
      est_(estimated),
      horizon_(make_horizon(cfg.smpc)),
      cost_(make_cost(cfg.smpc, cfg.slack_quad, cfg.slack_lin)),
      solver_(cfg.qp) {
  cons_.keep_in = true;
  cons_.l1_attitude = true;
  cons_.momentum_box = true;
  cons_.alpha = cfg.keep_in_alpha;
  cons_.gamma = cfg.l1_gamma;
  cons_.u_min = Eigen::Vector4d(cfg.f_min, -cfg.torque_max, -cfg.torque_max,
                                -cfg.torque_max);
  cons_.u_max = Eigen::Vector4d(cfg.f_max, cfg.torque_max, cfg.torque_max,
                                cfg.torque_max);
  cons_.momentum_max = est_.inertia.diagonal().cwiseAbs() * cfg.omega_max;

  last_command_.thrust = est_.mass * est_.gravity;
}

Wrench SmpcController::step(const VehicleState& x, const ReferenceTrajectory& traj,
                            double t) {
  const double t_assembly = now_seconds();
  const ReferenceKnot knot0 = traj.knot(t);
  const ExtendedPose dX = left_invariant_error(knot0.pose(), x.pose);
  const Vec3 dh = dX.C * (est_.inertia * x.omega) - est_.inertia * knot0.omega_r;

  Eigen::Matrix<double, 12, 1> dx;
  dx << se23_log(dX), dh;

  const int N = horizon_.N;
  std::vector<LinearModel> models;
  models.reserve(N);
  std::vector<Mat3> attitude_ref(horizon_.Nc + 1, Mat3::Identity());
  std::vector<Vec3> momentum_ref(horizon_.Nc + 1, Vec3::Zero());
  Eigen::MatrixXd u_ff(4, horizon_.Nu);

  double t_i = t;
  double f_ff0 = 0.0;
  Vec3 m_ff0 = Vec3::Zero();
  for (int i = 0; i < N; ++i) {
    const ReferenceKnot knot_i = i == 0 ? knot0 : traj.knot(t_i);
    models.push_back(discretize_zoh(smpc_jacobians(knot_i, est_),
                                    horizon_.dt_schedule[i]));
    if (i >= 1 && i <= horizon_.Nc) {
      attitude_ref[i] = knot_i.C_ar;
      momentum_ref[i] = est_.inertia * knot_i.omega_r;
    }
    if (i < horizon_.Nu) {
      const Vec3 m_ff = i == 0 ? Vec3(dX.C.transpose() * knot0.m_r) : knot_i.m_r;
      u_ff(0, i) = std::clamp(knot_i.f_r, cfg_.f_min, cfg_.f_max);
      u_ff.block<3, 1>(1, i) =
          m_ff.cwiseMax(-cfg_.torque_max).cwiseMin(cfg_.torque_max);
      if (i == 0) {
        f_ff0 = u_ff(0, 0);
        m_ff0 = u_ff.block<3, 1>(1, 0);
      }
    }
    t_i += horizon_.dt_schedule[i];
  }
  assembly_time_ += now_seconds() - t_assembly;

  const Eigen::VectorXd warm = shift_warm_start(warm_mu_, horizon_.Nu, 4, 3);
  result_ = mpc_step(dx, models, cost_, cons_, horizon_, attitude_ref, momentum_ref,
                     u_ff, solver_, warm, warm_lambda_);

  if (result_.qp.status == QPStatus::kOptimal) {
    faulted_ = false;
    fault_streak_ = 0;
    warm_mu_ = result_.warm_mu;
    warm_lambda_ = result_.warm_lambda;
    Wrench cmd;
    cmd.thrust = std::clamp(f_ff0 + result_.du_seq(0, 0), cfg_.f_min, cfg_.f_max);
    cmd.torque = (m_ff0 + result_.du_seq.block<3, 1>(1, 0))
                     .cwiseMax(-cfg_.torque_max)
                     .cwiseMin(cfg_.torque_max);
    last_command_ = cmd;
    have_last_ = true;
  } else {
    faulted_ = true;
    ++fault_streak_;
    warm_mu_.resize(0);
    warm_lambda_.resize(0);
    if (fault_streak_ > 1 || !have_last_) {
      last_command_.thrust = f_ff0;
      last_command_.torque = m_ff0;
    }
  }
  return last_command_;
}

SimLog run_simulation(const SimScenario& scenario, ControllerKind kind,
                      const ControllerConfig& cfg, double duration) {
  SimLog log;
  log.duration = duration;
  log.dt_control = cfg.inner.dt;

  const int truth_steps = static_cast<int>(std::llround(duration / cfg.dt_truth));
  const int inner_every = static_cast<int>(std::llround(cfg.inner.dt / cfg.dt_truth));
  const int outer_every = static_cast<int>(std::llround(cfg.outer.dt / cfg.dt_truth));
  if (inner_every * 5 != outer_every && kind == ControllerKind::kCmpc) {
    throw std::invalid_argument("run_simulation: outer dt must be 5 inner periods");
  }

  VehicleState x = scenario.x0;
  Mixer mixer(scenario.truth);

  ReferenceTrajectory traj = ReferenceTrajectory::plan(
      x, scenario.target, scenario.target_psi,
      suggested_plan_duration(x.pose.r, scenario.target), 0.0, scenario.estimated);

  const double airspeed =
      std::max(1.0, (scenario.x0.pose.v - scenario.wind.steady).norm());
  const double altitude = std::max(1.0, std::abs(scenario.x0.pose.r.z()));
  const std::vector<Vec3> gusts =
      dryden_gust_sequence(scenario.wind, airspeed, altitude, cfg.dt_truth,
                           static_cast<std::size_t>(truth_steps) + 1);

  CmpcController cmpc(cfg, scenario.estimated);
  SmpcController smpc(cfg, scenario.estimated);

  // l1-activity history at the rate the trajectory replanning is monitored:
  // the outer tick for CMPC, every control tick for SMPC.
  std::vector<bool> l1_history;
  const double monitor_dt = kind == ControllerKind::kCmpc ? cfg.outer.dt : cfg.inner.dt;

  Wrench applied;
  double pending_solve_time = 0.0;
  int pending_iterations = 0;

  log.rows.reserve(static_cast<std::size_t>(truth_steps / inner_every) + 1);
  log.truth_t.reserve(static_cast<std::size_t>(truth_steps) + 1);
  log.truth_x.reserve(static_cast<std::size_t>(truth_steps) + 1);
  log.truth_t.push_back(0.0);
  log.truth_x.push_back(x);

  for (int k = 0; k < truth_steps; ++k) {
    const double t = k * cfg.dt_truth;

    const bool outer_tick = kind == ControllerKind::kCmpc && k % outer_every == 0;
    const bool control_tick = k % inner_every == 0;

    if ((outer_tick || (kind == ControllerKind::kSmpc && control_tick)) &&
        replan_trigger(l1_history, monitor_dt, cfg.replan_window)) {
      traj = ReferenceTrajectory::plan(
          x, scenario.target, scenario.target_psi,
          suggested_plan_duration(x.pose.r, scenario.target), t, scenario.estimated);
      l1_history.clear();
      log.replans.push_back({t});
    }

    if (outer_tick) {
      cmpc.outer_step(x, traj, t);
      pending_solve_time += cmpc.outer_result().qp.solve_time;
      pending_iterations += cmpc.outer_result().qp.iterations;
      l1_history.push_back(cmpc.outer_result().l1_active);
      if (cmpc.outer_faulted()) ++log.fault_count;
    }

    if (control_tick) {
      bool fault = false;
      bool l1_active = false, keep_in_active = false;
      double eps_keep_in = 0.0, eps_l1 = 0.0, eps_momentum = 0.0;

      if (kind == ControllerKind::kCmpc) {
        const InnerCommand inner = cmpc.inner_step(x, traj, t);
        applied = mixer.wrench(mixer.allocate({cmpc.held().thrust, inner.torque}));
        pending_solve_time += cmpc.inner_result().qp.solve_time;
        pending_iterations += cmpc.inner_result().qp.iterations;
        fault = cmpc.inner_faulted() || cmpc.outer_faulted();
        if (cmpc.inner_faulted()) ++log.fault_count;
        l1_active = cmpc.outer_result().l1_active;
        keep_in_active = cmpc.outer_result().keep_in_active;
        if (cmpc.outer_result().slacks.size() >= 2) {
          eps_keep_in = cmpc.outer_result().slacks(0);
          eps_l1 = cmpc.outer_result().slacks(1);
        }
      } else {
        const Wrench cmd = smpc.step(x, traj, t);
        applied = mixer.wrench(mixer.allocate(cmd));
        pending_solve_time += smpc.result().qp.solve_time;
        pending_iterations += smpc.result().qp.iterations;
        fault = smpc.faulted();
        if (fault) ++log.fault_count;
        l1_active = smpc.result().l1_active;
        keep_in_active = smpc.result().keep_in_active;
        if (smpc.result().slacks.size() >= 3) {
          eps_keep_in = smpc.result().slacks(0);
          eps_l1 = smpc.result().slacks(1);
          eps_momentum = smpc.result().slacks(2);
        }
        l1_history.push_back(l1_active);
      }

      const ReferenceKnot knot = traj.knot(t);
      const ExtendedPose dX = left_invariant_error(knot.pose(), x.pose);

      LogRow row;
      row.t = t;
      row.r = x.pose.r;
      row.v = x.pose.v;
      row.att_log = so3_log(x.pose.C);
      row.omega = x.omega;
      row.thrust = applied.thrust;
      row.torque = applied.torque;
      row.eps_keep_in = eps_keep_in;
      row.eps_l1 = eps_l1;
      row.eps_momentum = eps_momentum;
      row.solve_time = pending_solve_time;
      row.err_att = so3_log(dX.C).norm();
      row.err_vel = dX.v.norm();
      row.err_pos = dX.r.norm();
      row.err_thrust = std::abs(applied.thrust - knot.f_r);
      row.err_torque = (applied.torque - knot.m_r).norm();
      row.tilt = std::acos(std::clamp(x.pose.C(2, 2), -1.0, 1.0));
      row.l1_active = l1_active;
      row.keep_in_active = keep_in_active;
      row.qp_iterations = pending_iterations;
      row.fault = fault;
      log.rows.push_back(row);

      log.qp_time_total += pending_solve_time;
      log.qp_iterations_total += pending_iterations;
      pending_solve_time = 0.0;
      pending_iterations = 0;
    }

    try {
      x = rk4_step(x, applied, scenario.wind.steady + gusts[k], scenario.truth,
                   cfg.dt_truth);
    } catch (const std::exception&) {
      log.aborted = true;
      ++log.fault_count;
      break;
    }
    log.truth_t.push_back((k + 1) * cfg.dt_truth);
    log.truth_x.push_back(x);
  }

  log.assembly_time_total = kind == ControllerKind::kCmpc ? cmpc.assembly_time()
                                                          : smpc.assembly_time();
  return log;
}

}  // namespace tmpc
