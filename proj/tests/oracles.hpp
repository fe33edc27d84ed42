#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <cmath>

#include <Eigen/Dense>

namespace notchkit::test {

// Least-squares via one-sided Jacobi orthogonalization of the augmented
// design [X 1]: theta = V S^-1 U^T y. Shares nothing with the
// normal-equations solver in the library.
inline Eigen::VectorXd jacobi_pinv_solve(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), f = X.cols();
  Eigen::MatrixXd B(n, f + 1);
  B.leftCols(f) = X;
  B.col(f).setOnes();
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(f + 1, f + 1);

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < B.cols() - 1; ++i) {
      for (Eigen::Index j = i + 1; j < B.cols(); ++j) {
        const double alpha = B.col(i).squaredNorm();
        const double beta = B.col(j).squaredNorm();
        const double gamma = B.col(i).dot(B.col(j));
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        if (std::abs(gamma) < 1e-15 * std::sqrt(alpha * beta)) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Eigen::VectorXd bi = B.col(i);
        B.col(i) = c * bi - s * B.col(j);
        B.col(j) = s * bi + c * B.col(j);
        const Eigen::VectorXd vi = V.col(i);
        V.col(i) = c * vi - s * V.col(j);
        V.col(j) = s * vi + c * V.col(j);
      }
    }
    if (off < 1e-14) break;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(f + 1);
  for (Eigen::Index i = 0; i < B.cols(); ++i) {
    const double sigma = B.col(i).norm();
    if (sigma > 1e-12) {
      theta += V.col(i) * (B.col(i).dot(y) / (sigma * sigma));
    }
  }
  return theta;
}

}  // namespace notchkit::test
