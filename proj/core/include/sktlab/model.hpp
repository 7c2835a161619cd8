#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>

namespace sktlab {

enum class DiffusionMode { WithSelfDiffusion, WithoutSelfDiffusion };

/// Coefficients of the n-species SKT cross-diffusion system.
///
/// The diffusion matrix is A_ij(u) = delta_ij (a0_i + sum_k a_ik u_k) + a_ij u_i.
/// `pi` is a reversible measure of `a`: pi_i a_ij = pi_j a_ji.
struct SKTParameters {
  int n = 1;
  Eigen::VectorXd a0;
  Eigen::MatrixXd a;
  Eigen::VectorXd pi;
  DiffusionMode mode = DiffusionMode::WithSelfDiffusion;

  /// Builds and validates. When `pi` is empty the reversible measure is
  /// computed from `a`; when `mode` is empty it is inferred from the diagonal.
  static SKTParameters make(Eigen::VectorXd a0, Eigen::MatrixXd a,
                            std::optional<Eigen::VectorXd> pi = std::nullopt,
                            std::optional<DiffusionMode> mode = std::nullopt);

  /// Throws SktError on any violated invariant.
  void validate() const;

  /// max_ij |pi_i a_ij - pi_j a_ji| / max(1, pi_i a_ij).
  double detailed_balance_residual() const;
};

/// Reversible measure of a nonnegative coefficient matrix, normalized to 1 at
/// the smallest index of every connected component of the support graph.
Eigen::VectorXd find_reversible_measure(const Eigen::MatrixXd& a);

Eigen::MatrixXd diffusion_matrix(const SKTParameters& p, const Eigen::VectorXd& u);

/// h(u) = sum_i pi_i (u_i (log u_i - 1) + 1), with 0 log 0 = 0.
double entropy_density(const SKTParameters& p, const Eigen::VectorXd& u);

/// Scalar building block of `entropy_density` for one species, pi_i = 1.
inline double entropy_kernel(double u) {
  return u > 0.0 ? u * (std::log(u) - 1.0) + 1.0 : 1.0;
}

/// w_i = pi_i log u_i. Throws NonPositiveDensity when some u_i <= 0.
Eigen::VectorXd entropy_variable(const SKTParameters& p, const Eigen::VectorXd& u);

/// u_i = exp(w_i / pi_i); strictly positive for finite w.
Eigen::VectorXd inverse_entropy_variable(const SKTParameters& p, const Eigen::VectorXd& w);

/// B(w) = A(u(w)) h''(u(w))^{-1}, i.e. B_ij = A_ij(u) u_j / pi_j.
Eigen::MatrixXd mobility_matrix(const SKTParameters& p, const Eigen::VectorXd& w);

/// Mobility evaluated directly from a positive density, skipping the exp.
Eigen::MatrixXd mobility_from_density(const SKTParameters& p, const Eigen::VectorXd& u);

/// z . h''(u) A(u) z.
double entropy_quadratic_form(const SKTParameters& p, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& z);

/// Lower bound for z . h''(u) A(u) z:
///   sum_i pi_i (a0_i z_i^2 / u_i + 2 a_ii z_i^2)
///   + 1/2 sum_{i != j} pi_i a_ij (sqrt(u_j/u_i) z_i + sqrt(u_i/u_j) z_j)^2.
double dissipation_lower_bound(const SKTParameters& p, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& z);

}  // namespace sktlab
