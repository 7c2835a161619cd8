#pragma once

#include <Eigen/Core>

#include <memory>

#include "sktlab/field.hpp"
#include "sktlab/model.hpp"
#include "sktlab/spectral.hpp"

namespace sktlab {

struct NewtonSettings {
  double tol = 1e-10;
  int max_iter = 50;
  /// Maximum number of step halvings in one line search.
  int max_halvings = 30;
  /// Linear systems with at most this many unknowns are factorized densely;
  /// larger ones go through preconditioned CG.
  Eigen::Index dense_limit = 1536;

  void validate() const;
};

struct RegularizedSolve {
  GridField w;
  int iterations = 0;
  /// Final ||Q_eps(w) - v||_{D(L)'}.
  double residual = 0.0;
};

/// The monotone map Q_eps(w) = u(w) + eps L*L w and its inverse R_eps.
///
/// Q_eps acts species by species: u_i(w) = exp(w_i / pi_i) cellwise and L*L is
/// the spectral multiplier (1 + lambda_k)^m. R_eps is computed by a damped
/// Newton iteration on G(w) = Q_eps(w) - v whose Jacobian diag(u'(w)) + eps L*L
/// is symmetric positive definite. Immutable once constructed.
class RegularizationOperator {
 public:
  RegularizationOperator(std::shared_ptr<const SpectralBasis> basis, SKTParameters params,
                         double epsilon, NewtonSettings settings = {});

  double epsilon() const { return epsilon_; }
  const SpectralBasis& basis() const { return *basis_; }
  std::shared_ptr<const SpectralBasis> basis_ptr() const { return basis_; }
  const SKTParameters& params() const { return params_; }
  const NewtonSettings& settings() const { return settings_; }

  GridField apply_Q_eps(const GridField& w) const;

  /// Throws NewtonDiverged with the final residual when the iteration or
  /// damping budget runs out.
  RegularizedSolve solve_R_eps(const GridField& v) const;

  /// H(v) = sum_c |cell| h(u(R_eps(v))) + eps/2 ||L R_eps(v)||^2.
  double regularized_entropy(const GridField& v) const;
  /// The same functional evaluated at a known w = R_eps(v).
  double entropy_at(const FieldArray& w) const;

  /// DR_eps[v] xi = (diag(u'(w)) + eps L*L)^{-1} xi with w = R_eps(v).
  GridField dR_eps_apply(const GridField& v, const GridField& xi) const;
  /// Same, linearized at a known w.
  GridField dR_eps_apply_at(const FieldArray& w, const GridField& xi) const;

  /// eps L*L x, species-wise.
  FieldArray apply_regularizer(const FieldArray& x) const;
  /// Dense eps L*L on one species, or nullptr when the grid exceeds the dense limit.
  const Eigen::MatrixXd* dense_regularizer() const { return dense_regularizer_.get(); }
  /// eps (1 + lambda_k)^m per sorted mode.
  const Eigen::VectorXd& regularizer_spectrum() const { return regularizer_spectrum_; }

  double dual_norm(const FieldArray& f) const;

 private:
  Eigen::VectorXd solve_species(int species, const Eigen::VectorXd& v, double tol_scale,
                                int& iterations, double& residual) const;
  Eigen::VectorXd newton_species(int species, const Eigen::VectorXd& v, Eigen::VectorXd w,
                                 double target, int& iterations, double& residual) const;
  Eigen::VectorXd linear_solve(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& rhs,
                               double tol) const;

  std::shared_ptr<const SpectralBasis> basis_;
  SKTParameters params_;
  double epsilon_;
  NewtonSettings settings_;
  Eigen::VectorXd regularizer_spectrum_;
  Eigen::VectorXd dual_weights_;
  std::shared_ptr<const Eigen::MatrixXd> dense_regularizer_;
};

}  // namespace sktlab
