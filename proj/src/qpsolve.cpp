#include "tmpc/qpsolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tmpc {

namespace {

constexpr double kRegThreshold = 1e-10;
constexpr double kRegSigma = 1e-8;
constexpr double kDualTol = 1e-9;
constexpr int kCheckInterval = 10;
constexpr int kRhoInterval = 50;

bool finite(const QPProblem& p) {
  return p.H.allFinite() && p.F.allFinite() && p.G.allFinite() && p.w.allFinite();
}

// Equality-constrained solve on the active set; returns false when the
// candidate fails feasibility or dual positivity.
bool polish(const Eigen::MatrixXd& H, const Eigen::VectorXd& F, const Eigen::MatrixXd& G,
            const Eigen::VectorXd& w, const Eigen::VectorXd& lambda_guess, double tol,
            Eigen::VectorXd* mu, Eigen::VectorXd* lambda) {
  const Eigen::Index n = H.rows();
  const Eigen::Index m = G.rows();

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lambda_guess(i) > kDualTol) active.push_back(i);
  }
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());

  Eigen::MatrixXd K(n + na, n + na);
  K.setZero();
  K.topLeftCorner(n, n) = H;
  for (Eigen::Index a = 0; a < na; ++a) {
    K.block(n + a, 0, 1, n) = G.row(active[a]);
    K.block(0, n + a, n, 1) = G.row(active[a]).transpose();
  }
  Eigen::VectorXd rhs(n + na);
  rhs.head(n) = -F;
  for (Eigen::Index a = 0; a < na; ++a) rhs(n + a) = w(active[a]);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);

  Eigen::VectorXd mu_c = sol.head(n);
  Eigen::VectorXd lambda_c = Eigen::VectorXd::Zero(m);
  for (Eigen::Index a = 0; a < na; ++a) lambda_c(active[a]) = sol(n + a);

  if (lambda_c.size() > 0 && na > 0 && lambda_c.minCoeff() < -kDualTol) return false;
  if (m > 0 && ((G * mu_c - w).maxCoeff() > tol)) return false;

  *mu = std::move(mu_c);
  *lambda = std::move(lambda_c);
  return true;
}

}  // namespace

void QPProblem::dump(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("QPProblem::dump: cannot open " + path);
  out.precision(17);
  out << H.rows() << " " << G.rows() << "\n";
  out << "H\n" << H << "\nF\n" << F.transpose() << "\n";
  out << "G\n" << G << "\nw\n" << w.transpose() << "\n";
}

KKTResiduals kkt_residuals(const QPProblem& p, const Eigen::VectorXd& mu,
                           const Eigen::VectorXd& lambda) {
  if (mu.size() != p.H.rows() || lambda.size() != p.G.rows()) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  KKTResiduals r;
  Eigen::VectorXd grad = p.H * mu + p.F;
  if (p.G.rows() > 0) grad += p.G.transpose() * lambda;
  r.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (p.G.rows() > 0) {
    const Eigen::VectorXd gap = p.G * mu - p.w;
    r.primal = std::max(0.0, gap.maxCoeff());
    r.complementarity = std::abs(lambda.dot(gap));
    r.dual_lower = lambda.minCoeff();
  }
  return r;
}

QPSolution QPSolver::solve(const QPProblem& p) const {
  return solve(p, Eigen::VectorXd(), Eigen::VectorXd());
}

QPSolution QPSolver::solve(const QPProblem& p, const Eigen::VectorXd& mu_warm,
                           const Eigen::VectorXd& lambda_warm) const {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  QPSolution sol;
  const Eigen::Index n = p.H.rows();
  const Eigen::Index m = p.G.rows();
  if (!finite(p) || p.H.cols() != n || p.F.size() != n ||
      (m > 0 && (p.G.cols() != n || p.w.size() != m))) {
    sol.status = QPStatus::kNumericalFault;
    sol.solve_time = elapsed();
    return sol;
  }

  Eigen::MatrixXd H = 0.5 * (p.H + p.H.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kRegThreshold) {
      H += kRegSigma * Eigen::MatrixXd::Identity(n, n);
    }
  }

  // Unconstrained problems collapse to one linear solve.
  if (m == 0) {
    sol.mu = H.ldlt().solve(-p.F);
    sol.lambda.resize(0);
    sol.iterations = 0;
    sol.polished = true;
    sol.residuals = kkt_residuals(p, sol.mu, sol.lambda);
    sol.status = sol.residuals.stationarity < settings_.tolerance
                     ? QPStatus::kOptimal
                     : QPStatus::kNumericalFault;
    sol.solve_time = elapsed();
    return sol;
  }

  Eigen::VectorXd x = mu_warm.size() == n ? mu_warm : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = lambda_warm.size() == m ? lambda_warm.cwiseMax(0.0)
                                              : Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = (p.G * x).cwiseMin(p.w);

  double rho = settings_.rho;
  const double sigma = settings_.sigma;
  const double alpha = settings_.relaxation;
  const Eigen::MatrixXd GtG = p.G.transpose() * p.G;

  Eigen::LDLT<Eigen::MatrixXd> kkt(H + sigma * Eigen::MatrixXd::Identity(n, n) + rho * GtG);

  auto converged = [&](const KKTResiduals& r) {
    return r.stationarity < settings_.tolerance && r.primal < settings_.tolerance &&
           r.complementarity < settings_.tolerance && r.dual_lower > -kDualTol;
  };

  KKTResiduals res;
  int it = 0;
  for (; it < settings_.max_iterations; ++it) {
    const Eigen::VectorXd rhs = sigma * x - p.F + p.G.transpose() * (rho * z - y);
    const Eigen::VectorXd x_tilde = kkt.solve(rhs);
    const Eigen::VectorXd z_tilde = p.G * x_tilde;

    x = alpha * x_tilde + (1.0 - alpha) * x;
    const Eigen::VectorXd z_relaxed = alpha * z_tilde + (1.0 - alpha) * z;
    const Eigen::VectorXd z_next = (z_relaxed + y / rho).cwiseMin(p.w);
    y = (y + rho * (z_relaxed - z_next)).cwiseMax(0.0);
    z = z_next;

    if ((it + 1) % kCheckInterval == 0) {
      res = kkt_residuals(p, x, y);
      if (converged(res)) {
        ++it;
        break;
      }
      if ((it + 1) % kRhoInterval == 0) {
        const double ratio = (res.primal + 1e-12) / (res.stationarity + 1e-12);
        if (ratio > 10.0 || ratio < 0.1) {
          rho = std::clamp(rho * std::sqrt(ratio), 1e-6, 1e6);
          kkt.compute(H + sigma * Eigen::MatrixXd::Identity(n, n) + rho * GtG);
        }
      }
    }
  }

  sol.mu = x;
  sol.lambda = y;
  sol.iterations = it;
  res = kkt_residuals(p, x, y);

  if (settings_.polish) {
    Eigen::VectorXd mu_p, lambda_p;
    if (polish(H, p.F, p.G, p.w, y, settings_.tolerance, &mu_p, &lambda_p)) {
      const KKTResiduals polished = kkt_residuals(p, mu_p, lambda_p);
      if (std::max({polished.stationarity, polished.primal, polished.complementarity}) <=
          std::max({res.stationarity, res.primal, res.complementarity})) {
        sol.mu = std::move(mu_p);
        sol.lambda = std::move(lambda_p);
        sol.polished = true;
      }
    }
  }

  sol.residuals = kkt_residuals(p, sol.mu, sol.lambda);
  sol.status = converged(sol.residuals) ? QPStatus::kOptimal : QPStatus::kMaxIterations;
  sol.solve_time = elapsed();
  return sol;
}

}  // namespace tmpc
