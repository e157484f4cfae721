#ifndef TMPC_NUMERIC_HPP
#define TMPC_NUMERIC_HPP

#include <Eigen/Core>

namespace tmpc {

/// Dense matrix exponential (scaling-and-squaring Pade).
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

/// Solves X = A X A^T + Q for symmetric X (small systems, vectorized solve).
Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

}  // namespace tmpc

#endif  // TMPC_NUMERIC_HPP
