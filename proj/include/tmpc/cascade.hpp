#ifndef TMPC_CASCADE_HPP
#define TMPC_CASCADE_HPP

#include <vector>

#include "tmpc/mpc.hpp"
#include "tmpc/reference.hpp"
#include "tmpc/vehicle.hpp"

namespace tmpc {

enum class ControllerKind { kCmpc, kSmpc };

/// Horizon and penalty tuning for one MPC loop; P = scale * Q.
struct LoopTuning {
  double dt = 0.1;
  int N = 1, Nu = 1, Nc = 1;
  double T_total = 0.1;
  Eigen::VectorXd q_diag;
  Eigen::VectorXd r_diag;
  double terminal_scale = 1.0;
};

struct ControllerConfig {
  LoopTuning outer;
  LoopTuning inner;
  LoopTuning smpc;
  double keep_in_alpha = 0.14;   // rad
  double l1_gamma = 0.1;         // rad
  double f_min = 0.0, f_max = 3000.0;       // N
  double omega_max = 2.0;                    // rad/s
  double torque_max = 200.0;                 // N m
  double slack_quad = 1e4, slack_lin = 1e2;
  double replan_window = 0.4;    // s of sustained l1 activity
  double dt_truth = 0.002;       // s
  QPSettings qp;

  static ControllerConfig Defaults();
};

struct OuterCommand {
  double thrust = 0.0;
  Vec3 omega_cmd = Vec3::Zero();
  std::vector<Vec3> omega_star;  // composed optimal sequence, N entries
  std::vector<Vec3> torque_ff;   // feedforward torque along omega_star
  double t_issued = 0.0;
};

struct InnerCommand {
  Vec3 torque = Vec3::Zero();
};

/// Per-control-tick record; error columns are kept in memory for metrics,
/// the CSV serialization carries the external-interface columns.
struct LogRow {
  double t = 0.0;
  Vec3 r = Vec3::Zero(), v = Vec3::Zero(), att_log = Vec3::Zero(), omega = Vec3::Zero();
  double thrust = 0.0;
  Vec3 torque = Vec3::Zero();
  double eps_keep_in = 0.0, eps_l1 = 0.0, eps_momentum = 0.0;
  double solve_time = 0.0;
  double err_att = 0.0, err_vel = 0.0, err_pos = 0.0, err_thrust = 0.0, err_torque = 0.0;
  double tilt = 0.0;
  bool l1_active = false, keep_in_active = false;
  int qp_iterations = 0;
  bool fault = false;
};

struct ReplanEvent {
  double t = 0.0;
};

struct SimLog {
  std::vector<LogRow> rows;             // control rate
  std::vector<double> truth_t;          // truth rate
  std::vector<VehicleState> truth_x;
  std::vector<ReplanEvent> replans;
  int fault_count = 0;
  bool aborted = false;
  double qp_time_total = 0.0;
  double assembly_time_total = 0.0;
  long qp_iterations_total = 0;
  double duration = 0.0;
  double dt_control = 0.02;
};

struct SimScenario {
  VehicleState x0;
  VehicleParams truth;
  VehicleParams estimated;
  WindConfig wind;
  Vec3 target = Vec3::Zero();
  double target_psi = 0.0;
};

/// Outer-loop MPC on the SE_2(3) error plus the torque-tracking inner loop.
/// The inner model is linearized once per outer tick about the first optimal
/// angular velocity and reused for the substeps.
class CmpcController {
 public:
  CmpcController(const ControllerConfig& cfg, const VehicleParams& estimated);

  void outer_step(const VehicleState& x, const ReferenceTrajectory& traj, double t);
  InnerCommand inner_step(const VehicleState& x, const ReferenceTrajectory& traj, double t);

  const OuterCommand& held() const { return held_; }
  const MpcStepResult& outer_result() const { return outer_result_; }
  const MpcStepResult& inner_result() const { return inner_result_; }
  bool outer_faulted() const { return outer_faulted_; }
  bool inner_faulted() const { return inner_faulted_; }
  double assembly_time() const { return assembly_time_; }

 private:
  ControllerConfig cfg_;
  VehicleParams est_;
  HorizonSpec outer_horizon_, inner_horizon_;
  CostSpec outer_cost_, inner_cost_;
  ConstraintSpec outer_cons_, inner_cons_;
  QPSolver solver_;

  OuterCommand held_;
  std::vector<LinearModel> inner_models_;
  MpcStepResult outer_result_, inner_result_;
  Eigen::VectorXd outer_warm_mu_, outer_warm_lambda_;
  Eigen::VectorXd inner_warm_mu_, inner_warm_lambda_;
  InnerCommand last_inner_{};
  int outer_fault_streak_ = 0;
  bool outer_faulted_ = false, inner_faulted_ = false;
  double assembly_time_ = 0.0;
};

/// Single 12-state MPC over the augmented error.
class SmpcController {
 public:
  SmpcController(const ControllerConfig& cfg, const VehicleParams& estimated);

  Wrench step(const VehicleState& x, const ReferenceTrajectory& traj, double t);

  const MpcStepResult& result() const { return result_; }
  bool faulted() const { return faulted_; }
  double assembly_time() const { return assembly_time_; }

 private:
  ControllerConfig cfg_;
  VehicleParams est_;
  HorizonSpec horizon_;
  CostSpec cost_;
  ConstraintSpec cons_;
  QPSolver solver_;

  MpcStepResult result_;
  Eigen::VectorXd warm_mu_, warm_lambda_;
  Wrench last_command_;
  bool have_last_ = false;
  int fault_streak_ = 0;
  bool faulted_ = false;
  double assembly_time_ = 0.0;
};

/// Fixed-step closed loop: truth model at dt_truth, inner/SMPC every 0.02 s,
/// outer every 0.10 s, mixer round trip on every applied wrench, Dryden
/// gusts on top of the steady wind, replanning on sustained l1 activity.
SimLog run_simulation(const SimScenario& scenario, ControllerKind kind,
                      const ControllerConfig& cfg, double duration);

}  // namespace tmpc

#endif  // TMPC_CASCADE_HPP
