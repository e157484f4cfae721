#include "tmpc/mpc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tmpc/lie.hpp"

namespace tmpc {

namespace {
const Vec3 kDown{0.0, 0.0, 1.0};
constexpr double kActiveTol = 1e-8;
}

PredictionMatrices prediction_matrices_ltv(const std::vector<LinearModel>& models) {
  const int N = static_cast<int>(models.size());
  if (N < 1) throw std::invalid_argument("prediction_matrices_ltv: empty model sequence");
  const Eigen::Index n = models[0].A.rows();
  const Eigen::Index m = models[0].B.cols();
  for (const auto& model : models) {
    if (model.A.rows() != n || model.A.cols() != n || model.B.rows() != n ||
        model.B.cols() != m) {
      throw std::invalid_argument("prediction_matrices_ltv: inconsistent dimensions");
    }
  }

  PredictionMatrices pred;
  pred.S = Eigen::MatrixXd::Zero(N * n, N * m);
  pred.M = Eigen::MatrixXd::Zero(N * n, n);

  Eigen::MatrixXd chain = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i <= N; ++i) {
    chain = (models[i - 1].A * chain).eval();
    pred.M.middleRows((i - 1) * n, n) = chain;
  }
  for (int j = 0; j < N; ++j) {
    Eigen::MatrixXd prop = models[j].B;
    pred.S.block(j * n, j * m, n, m) = prop;
    for (int i = j + 2; i <= N; ++i) {
      prop = (models[i - 1].A * prop).eval();
      pred.S.block((i - 1) * n, j * m, n, m) = prop;
    }
  }
  return pred;
}

PredictionMatrices prediction_matrices_lti(const LinearModel& model, int N) {
  return prediction_matrices_ltv(std::vector<LinearModel>(N, model));
}

Eigen::MatrixXd move_blocking_expand(int Nu, int N, int m) {
  if (Nu > N || Nu < 1) throw std::invalid_argument("move_blocking_expand: need 1 <= Nu <= N");
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(N * m, Nu * m);
  for (int i = 0; i < N; ++i) {
    const int j = std::min(i, Nu - 1);
    E.block(i * m, j * m, m, m).setIdentity();
  }
  return E;
}

std::vector<double> nonuniform_schedule(double dt_base, int N, int Nc, double T_total) {
  if (N < 1 || Nc < 0 || Nc > N || !(dt_base > 0.0)) {
    throw std::invalid_argument("nonuniform_schedule: bad horizon parameters");
  }
  if (N * dt_base > T_total * (1.0 + 1e-12)) {
    throw std::invalid_argument("nonuniform_schedule: T_total shorter than uniform horizon");
  }

  std::vector<double> schedule(N, dt_base);
  const int tail = N - Nc;
  const double target = T_total - Nc * dt_base;
  if (tail == 0) {
    if (std::abs(target) > 1e-9) {
      throw std::invalid_argument("nonuniform_schedule: Nc = N cannot reach T_total");
    }
    return schedule;
  }

  // Sum of dt_base * ratio^i for i = 1..tail, monotone in ratio.
  auto tail_sum = [&](double ratio) {
    double sum = 0.0, step = dt_base;
    for (int i = 0; i < tail; ++i) {
      step *= ratio;
      sum += step;
    }
    return sum;
  };

  double lo = 1.0, hi = 1.0;
  while (tail_sum(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail_sum(mid) < target ? lo : hi) = mid;
  }
  const double ratio = 0.5 * (lo + hi);

  double step = dt_base, sum = Nc * dt_base;
  for (int i = Nc; i < N; ++i) {
    step *= ratio;
    schedule[i] = step;
    sum += step;
  }
  schedule.back() += T_total - sum;  // absorb bisection residual exactly
  return schedule;
}

void condense_cost(const PredictionMatrices& pred, const Eigen::MatrixXd& expand,
                   const CostSpec& cost, const Eigen::VectorXd& dx0, int n_slack,
                   Eigen::MatrixXd* H, Eigen::VectorXd* F) {
  const Eigen::Index n = cost.Q.rows();
  const Eigen::Index N = pred.M.rows() / n;
  const Eigen::Index nz = expand.cols() + n_slack;

  Eigen::MatrixXd S_eff = pred.S * expand;
  Eigen::MatrixXd QS(S_eff.rows(), S_eff.cols());
  Eigen::MatrixXd QM(pred.M.rows(), pred.M.cols());
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::MatrixXd& Qi = (i == N - 1) ? cost.P : cost.Q;
    QS.middleRows(i * n, n) = Qi * S_eff.middleRows(i * n, n);
    QM.middleRows(i * n, n) = Qi * pred.M.middleRows(i * n, n);
  }

  const Eigen::Index m = cost.R.rows();
  Eigen::MatrixXd Rbar = Eigen::MatrixXd::Zero(N * m, N * m);
  for (Eigen::Index i = 0; i < N; ++i) Rbar.block(i * m, i * m, m, m) = cost.R;

  H->setZero(nz, nz);
  F->setZero(nz);
  H->topLeftCorner(expand.cols(), expand.cols()) =
      S_eff.transpose() * QS + expand.transpose() * Rbar * expand;
  F->head(expand.cols()) = S_eff.transpose() * (QM * dx0);
  for (int s = 0; s < n_slack; ++s) {
    (*H)(expand.cols() + s, expand.cols() + s) = 2.0 * cost.slack_quad;
    (*F)(expand.cols() + s) = cost.slack_lin;
  }
  *H = 0.5 * (*H + H->transpose()).eval();
}

ConstraintSet constraint_matrices(const ConstraintSpec& spec, const HorizonSpec& horizon,
                                  const PredictionMatrices& pred,
                                  const Eigen::MatrixXd& expand,
                                  const std::vector<Mat3>& attitude_ref,
                                  const std::vector<Vec3>& momentum_ref,
                                  const Eigen::MatrixXd& u_ff) {
  const Eigen::Index n = pred.M.cols();
  const Eigen::Index m_in = u_ff.rows();
  const Eigen::Index n_mu = expand.cols();

  ConstraintSet set;
  if (spec.keep_in) set.slack_keep_in = set.n_slack++;
  if (spec.l1_attitude) set.slack_l1 = set.n_slack++;
  if (spec.momentum_box) set.slack_momentum = set.n_slack++;
  const Eigen::Index nz = n_mu + set.n_slack;

  const Eigen::MatrixXd S_eff = pred.S * expand;

  Eigen::Index rows = 0;
  if (spec.keep_in) rows += horizon.Nc;
  if (spec.l1_attitude) rows += 8 * horizon.Nc;
  if (spec.momentum_box) rows += 6 * horizon.Nc;
  rows += 2 * m_in * horizon.Nu;
  rows += set.n_slack;

  set.G.setZero(rows, nz);
  set.W.setZero(rows);
  set.T.setZero(rows, n);
  set.kinds.assign(rows, RowKind::kInputBox);

  Eigen::Index row = 0;
  auto state_row = [&](int step, const Eigen::RowVectorXd& a_state, double rhs,
                       int slack, RowKind kind) {
    const Eigen::Index r0 = (step - 1) * n;
    set.G.block(row, 0, 1, n_mu) = a_state * S_eff.middleRows(r0, n);
    if (slack >= 0) set.G(row, n_mu + slack) = -1.0;
    set.W(row) = rhs;
    set.T.row(row) = -a_state * pred.M.middleRows(r0, n);
    set.kinds[row] = kind;
    ++row;
  };

  if (spec.keep_in) {
    const double cos_alpha = std::cos(spec.alpha);
    for (int i = 1; i <= horizon.Nc; ++i) {
      const Mat3& C_ar = attitude_ref.at(i);
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
      a.segment<3>(0) = kDown.transpose() * C_ar * cross(kDown);
      state_row(i, a, C_ar(2, 2) - cos_alpha, set.slack_keep_in, RowKind::kKeepIn);
    }
  }

  if (spec.l1_attitude) {
    for (int i = 1; i <= horizon.Nc; ++i) {
      for (int pattern = 0; pattern < 8; ++pattern) {
        Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
        for (int axis = 0; axis < 3; ++axis) {
          a(axis) = (pattern >> axis) & 1 ? 1.0 : -1.0;
        }
        state_row(i, a, spec.gamma, set.slack_l1, RowKind::kL1);
      }
    }
  }

  if (spec.momentum_box) {
    for (int i = 1; i <= horizon.Nc; ++i) {
      const Vec3& h_ref = momentum_ref.at(i);
      for (int axis = 0; axis < 3; ++axis) {
        for (double sign : {1.0, -1.0}) {
          Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
          a(n - 3 + axis) = sign;
          state_row(i, a, spec.momentum_max(axis) - sign * h_ref(axis),
                    set.slack_momentum, RowKind::kMomentum);
        }
      }
    }
  }

  for (int i = 0; i < horizon.Nu; ++i) {
    for (Eigen::Index k = 0; k < m_in; ++k) {
      const double ff = std::clamp(u_ff(k, i), spec.u_min(k), spec.u_max(k));
      set.G(row, i * m_in + k) = 1.0;
      set.W(row) = spec.u_max(k) - ff;
      set.kinds[row] = RowKind::kInputBox;
      ++row;
      set.G(row, i * m_in + k) = -1.0;
      set.W(row) = ff - spec.u_min(k);
      set.kinds[row] = RowKind::kInputBox;
      ++row;
    }
  }

  for (int s = 0; s < set.n_slack; ++s) {
    set.G(row, n_mu + s) = -1.0;
    set.kinds[row] = RowKind::kSlackSign;
    ++row;
  }
  return set;
}

MpcStepResult mpc_step(const Eigen::VectorXd& dx0, const std::vector<LinearModel>& models,
                       const CostSpec& cost, const ConstraintSpec& cons,
                       const HorizonSpec& horizon, const std::vector<Mat3>& attitude_ref,
                       const std::vector<Vec3>& momentum_ref, const Eigen::MatrixXd& u_ff,
                       const QPSolver& solver, const Eigen::VectorXd& warm_mu,
                       const Eigen::VectorXd& warm_lambda) {
  const Eigen::Index m = models.at(0).B.cols();
  if (static_cast<int>(models.size()) != horizon.N) {
    throw std::invalid_argument("mpc_step: model count != N");
  }

  const PredictionMatrices pred = prediction_matrices_ltv(models);
  const Eigen::MatrixXd expand = move_blocking_expand(horizon.Nu, horizon.N, m);
  const ConstraintSet set =
      constraint_matrices(cons, horizon, pred, expand, attitude_ref, momentum_ref, u_ff);

  QPProblem qp;
  condense_cost(pred, expand, cost, dx0, set.n_slack, &qp.H, &qp.F);
  qp.G = set.G;
  qp.w = set.W + set.T * dx0;

  MpcStepResult out;
  out.qp = solver.solve(qp, warm_mu, warm_lambda);
  const Eigen::Index n_mu = expand.cols();

  if (out.qp.mu.size() != n_mu + set.n_slack) {
    // Solver fault: report zeros, caller falls back to the previous command.
    out.du_seq = Eigen::MatrixXd::Zero(m, horizon.N);
    out.slacks = Eigen::VectorXd::Zero(set.n_slack);
    return out;
  }

  out.warm_mu = out.qp.mu;
  out.warm_lambda = out.qp.lambda;
  out.slacks = out.qp.mu.tail(set.n_slack);

  const Eigen::VectorXd du_full = expand * out.qp.mu.head(n_mu);
  out.du_seq = Eigen::Map<const Eigen::MatrixXd>(du_full.data(), m, horizon.N);

  const Eigen::VectorXd gap = qp.G * out.qp.mu - qp.w;
  for (Eigen::Index r = 0; r < gap.size(); ++r) {
    if (gap(r) > -kActiveTol) {
      switch (set.kinds[r]) {
        case RowKind::kKeepIn: out.keep_in_active = true; break;
        case RowKind::kL1: out.l1_active = true; break;
        case RowKind::kMomentum: out.momentum_active = true; break;
        default: break;
      }
    }
  }
  if (set.slack_keep_in >= 0 && out.slacks(set.slack_keep_in) > kActiveTol) {
    out.keep_in_active = true;
  }
  if (set.slack_l1 >= 0 && out.slacks(set.slack_l1) > kActiveTol) out.l1_active = true;
  if (set.slack_momentum >= 0 && out.slacks(set.slack_momentum) > kActiveTol) {
    out.momentum_active = true;
  }
  return out;
}

}  // namespace tmpc
