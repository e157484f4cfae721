#ifndef TMPC_QPSOLVE_HPP
#define TMPC_QPSOLVE_HPP

#include <Eigen/Core>
#include <string>

namespace tmpc {

/// min 1/2 mu^T H mu + F^T mu  s.t.  G mu <= w.
/// `w` is the already-combined right-hand side (W + T dx for the MPC use).
struct QPProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd F;
  Eigen::MatrixXd G;
  Eigen::VectorXd w;

  /// Plain-text dump (dimensions then row-major matrices) for offline
  /// cross-checking with other solvers.
  void dump(const std::string& path) const;
};

enum class QPStatus { kOptimal, kMaxIterations, kNumericalFault };

struct KKTResiduals {
  double stationarity = 0.0;      // ||H mu + F + G^T lambda||_inf
  double primal = 0.0;            // max(0, max(G mu - w))
  double complementarity = 0.0;   // |lambda^T (G mu - w)|
  double dual_lower = 0.0;        // min(lambda)
};

struct QPSolution {
  Eigen::VectorXd mu;
  Eigen::VectorXd lambda;
  QPStatus status = QPStatus::kNumericalFault;
  int iterations = 0;
  KKTResiduals residuals;
  double solve_time = 0.0;  // wall clock, s
  bool polished = false;
};

struct QPSettings {
  double tolerance = 1e-6;
  int max_iterations = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double relaxation = 1.6;
  bool polish = true;
};

KKTResiduals kkt_residuals(const QPProblem& p, const Eigen::VectorXd& mu,
                           const Eigen::VectorXd& lambda);

/// Operator-splitting (ADMM) solver with penalty adaptation and an
/// active-set polish pass. Deterministic: identical problems and settings
/// give bit-identical iterates.
class QPSolver {
 public:
  explicit QPSolver(const QPSettings& settings = {}) : settings_(settings) {}

  QPSolution solve(const QPProblem& p) const;
  QPSolution solve(const QPProblem& p, const Eigen::VectorXd& mu_warm,
                   const Eigen::VectorXd& lambda_warm) const;

  const QPSettings& settings() const { return settings_; }

 private:
  QPSettings settings_;
};

}  // namespace tmpc

#endif  // TMPC_QPSOLVE_HPP
