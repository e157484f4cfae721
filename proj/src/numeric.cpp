#include "tmpc/numeric.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace tmpc {

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) { return A.exp(); }

Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd K =
      Eigen::MatrixXd::Identity(n * n, n * n) - Eigen::kroneckerProduct(A, A).eval();
  Eigen::VectorXd q(Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n));
  Eigen::VectorXd x = K.fullPivLu().solve(q);
  Eigen::MatrixXd X(Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n));
  return 0.5 * (X + X.transpose());
}

}  // namespace tmpc
