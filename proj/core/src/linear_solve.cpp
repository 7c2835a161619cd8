#include "sktlab/linear_solve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sktlab/error.hpp"

namespace sktlab {

IterativeResult preconditioned_cg(const LinearOperator& apply, const LinearOperator& precondition,
                                  const Eigen::VectorXd& rhs, const Eigen::VectorXd& initial,
                                  double tol, int max_iterations, const VectorNorm& norm) {
  const auto measure = [&](const Eigen::VectorXd& v) { return norm ? norm(v) : v.norm(); };
  IterativeResult result;
  result.x = initial;
  const double rhs_norm = measure(rhs);
  if (rhs_norm == 0.0) {
    result.x.setZero();
    result.converged = true;
    return result;
  }
  Eigen::VectorXd r = rhs - apply(result.x);
  Eigen::VectorXd z = precondition(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iterations; ++it) {
    result.relative_residual = measure(r) / rhs_norm;
    if (result.relative_residual <= tol) {
      result.converged = true;
      result.iterations = it;
      return result;
    }
    const Eigen::VectorXd ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    result.x += alpha * p;
    r -= alpha * ap;
    z = precondition(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  // recompute from scratch to avoid reporting a drifted recursive residual
  result.relative_residual = measure(rhs - apply(result.x)) / rhs_norm;
  result.converged = result.relative_residual <= tol;
  result.iterations = max_iterations;
  return result;
}

Eigen::VectorXd dense_spd_solve(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs,
                                double tol, const VectorNorm& norm) {
  const auto measure = [&](const Eigen::VectorXd& v) { return norm ? norm(v) : v.norm(); };
  const Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  const bool spd = llt.info() == Eigen::Success;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  if (!spd) lu.compute(matrix);
  const auto solve = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    return spd ? Eigen::VectorXd(llt.solve(b)) : Eigen::VectorXd(lu.solve(b));
  };

  Eigen::VectorXd x = solve(rhs);
  const double scale = measure(rhs);
  if (scale == 0.0) return x;
  double residual = measure(rhs - matrix * x) / scale;
  // iterative refinement, two rounds at most
  for (int round = 0; round < 2 && !(residual <= tol); ++round) {
    x += solve(rhs - matrix * x);
    residual = measure(rhs - matrix * x) / scale;
  }
  // A residual at the rounding level of the product A x cannot be reduced further.
  const Eigen::VectorXd magnitude = matrix.cwiseAbs() * x.cwiseAbs() + rhs.cwiseAbs();
  const double floor = 8.0 * std::numeric_limits<double>::epsilon() * measure(magnitude) / scale;
  if (!(std::isfinite(residual) && residual <= std::max(tol, floor))) {
    std::ostringstream os;
    os << "dense solve relative residual " << residual << " above tolerance " << tol;
    fail(ErrorCode::LinearSolveFailed, os.str());
  }
  return x;
}

std::string format_residual(double value) {
  std::ostringstream os;
  os << value;
  return os.str();
}

}  // namespace sktlab
