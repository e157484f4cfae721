#ifndef TMPC_MPC_HPP
#define TMPC_MPC_HPP

#include <Eigen/Core>
#include <vector>

#include "tmpc/linmodel.hpp"
#include "tmpc/qpsolve.hpp"

namespace tmpc {

struct HorizonSpec {
  int N = 1;                        // prediction steps
  int Nu = 1;                       // control horizon
  int Nc = 1;                       // constraint horizon (state constraints)
  std::vector<double> dt_schedule;  // N durations
};

struct CostSpec {
  Eigen::MatrixXd Q;       // state penalty
  Eigen::MatrixXd R;       // input penalty
  Eigen::MatrixXd P;       // terminal penalty
  double slack_quad = 1e4; // quadratic weight per soft-constraint slack
  double slack_lin = 1e2;  // exact-penalty linear weight
};

/// Attitude keep-in cone, l1 attitude-error bound and input boxes; the
/// momentum box is the SMPC form of the angular velocity limit.
struct ConstraintSpec {
  bool keep_in = false;
  bool l1_attitude = false;
  bool momentum_box = false;
  double alpha = 0.14;             // rad
  double gamma = 0.1;              // rad
  Eigen::VectorXd u_min, u_max;    // per-loop input box
  Vec3 momentum_max = Vec3::Zero();// |h_i| bound, N m s
};

/// Stacked prediction dx_i = [M]_i dx0 + [S]_i dmu over the full horizon.
struct PredictionMatrices {
  Eigen::MatrixXd S;  // (N n) x (N m)
  Eigen::MatrixXd M;  // (N n) x n
};

PredictionMatrices prediction_matrices_ltv(const std::vector<LinearModel>& models);
PredictionMatrices prediction_matrices_lti(const LinearModel& model, int N);

/// Hold-last expansion map from Nu input blocks to N.
Eigen::MatrixXd move_blocking_expand(int Nu, int N, int m);

/// First Nc steps at dt_base, then a geometric tail whose ratio is solved so
/// the schedule sums to T_total.
std::vector<double> nonuniform_schedule(double dt_base, int N, int Nc, double T_total);

/// Condensed cost over z = [dmu; slacks]: H = S~^T Qbar S~ + E^T Rbar E with
/// S~ = S E, plus the quadratic/linear slack penalty.
void condense_cost(const PredictionMatrices& pred, const Eigen::MatrixXd& expand,
                   const CostSpec& cost, const Eigen::VectorXd& dx0, int n_slack,
                   Eigen::MatrixXd* H, Eigen::VectorXd* F);

enum class RowKind { kKeepIn, kL1, kMomentum, kInputBox, kSlackSign };

/// Stacked inequalities G z <= W + T dx0 over z = [dmu; slacks].
struct ConstraintSet {
  Eigen::MatrixXd G;
  Eigen::VectorXd W;
  Eigen::MatrixXd T;
  std::vector<RowKind> kinds;
  int n_slack = 0;  // order: keep-in, l1, momentum (present ones only)
  int slack_keep_in = -1, slack_l1 = -1, slack_momentum = -1;
};

/// State rows are imposed on predicted steps 1..Nc through S and M; input
/// boxes act on steps 0..Nu-1 relative to the (pre-clamped) feedforward.
ConstraintSet constraint_matrices(const ConstraintSpec& spec, const HorizonSpec& horizon,
                                  const PredictionMatrices& pred,
                                  const Eigen::MatrixXd& expand,
                                  const std::vector<Mat3>& attitude_ref,
                                  const std::vector<Vec3>& momentum_ref,
                                  const Eigen::MatrixXd& u_ff);

struct MpcStepResult {
  Eigen::MatrixXd du_seq;          // m x N, expanded through move blocking
  Eigen::VectorXd slacks;
  QPSolution qp;
  bool keep_in_active = false;
  bool l1_active = false;
  bool momentum_active = false;
  Eigen::VectorXd warm_mu;         // raw decision vector for warm starting
  Eigen::VectorXd warm_lambda;
};

/// Assembles prediction, cost and constraints, then solves the condensed QP.
/// attitude_ref/momentum_ref are indexed by predicted step (entry i for step
/// i, entries 1..Nc used); u_ff is m x Nu.
MpcStepResult mpc_step(const Eigen::VectorXd& dx0, const std::vector<LinearModel>& models,
                       const CostSpec& cost, const ConstraintSpec& cons,
                       const HorizonSpec& horizon, const std::vector<Mat3>& attitude_ref,
                       const std::vector<Vec3>& momentum_ref, const Eigen::MatrixXd& u_ff,
                       const QPSolver& solver,
                       const Eigen::VectorXd& warm_mu = Eigen::VectorXd(),
                       const Eigen::VectorXd& warm_lambda = Eigen::VectorXd());

}  // namespace tmpc

#endif  // TMPC_MPC_HPP
