#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace sktlab {

struct IterativeResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using VectorNorm = std::function<double(const Eigen::VectorXd&)>;

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator. Stops once ||b - A x|| <= tol ||b|| in `norm` (Euclidean when
/// empty).
IterativeResult preconditioned_cg(const LinearOperator& apply, const LinearOperator& precondition,
                                  const Eigen::VectorXd& rhs, const Eigen::VectorXd& initial,
                                  double tol, int max_iterations, const VectorNorm& norm = {});

/// Dense symmetric solve: Cholesky, falling back to LU when the matrix is not
/// numerically positive definite. Throws LinearSolveFailed if the relative
/// residual, measured in `norm` (Euclidean when empty), exceeds both `tol`
/// and the rounding floor 8 eps ||(|A| |x| + |b|)|| / ||b||.
Eigen::VectorXd dense_spd_solve(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs,
                                double tol, const VectorNorm& norm = {});

/// Compact scientific rendering for error messages.
std::string format_residual(double value);

}  // namespace sktlab
