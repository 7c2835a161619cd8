#pragma once

#include <Eigen/Core>

#include <vector>

#include "sktlab/field.hpp"
#include "sktlab/grid.hpp"

namespace sktlab {

/// Smallest integer m with m > d/2 + 1.
int default_sobolev_index(int dim);

/// Orthonormal eigenbasis of the discrete Neumann Laplacian.
///
/// Eigenpairs are sampled cosines (tensor products in 2D), orthonormal in the
/// discrete inner product <f, g> = sum_c |cell| f_c g_c. Coefficient vectors
/// are indexed by mode in ascending eigenvalue order, so mode 0 is the
/// constant. The connection operator is L = (I - Delta_h)^{m/2}, a multiplier
/// (1 + lambda_k)^{m/2} in this basis; its norm constant against the H^m
/// norm is exactly 1.
///
/// Immutable after construction.
class SpectralBasis {
 public:
  SpectralBasis(const Grid& grid, int sobolev_index);

  const Grid& grid() const { return grid_; }
  int sobolev_index() const { return m_; }
  Eigen::Index size() const { return grid_.cells(); }

  /// Sorted eigenvalues, lambda_0 = 0.
  const Eigen::VectorXd& eigenvalues() const { return sorted_eigenvalues_; }

  /// Cell values of sorted mode k.
  Eigen::VectorXd mode(Eigen::Index k) const;
  /// max_c |eta_k(c)|.
  double mode_sup_norm(Eigen::Index k) const;

  Eigen::VectorXd to_spectral(const Eigen::Ref<const Eigen::VectorXd>& f) const;
  Eigen::VectorXd from_spectral(const Eigen::Ref<const Eigen::VectorXd>& coefficients) const;

  /// Multiplies sorted-mode coefficients by `multiplier(k)` and transforms back.
  Eigen::VectorXd apply_multiplier(const Eigen::Ref<const Eigen::VectorXd>& f,
                                   const Eigen::VectorXd& sorted_multiplier) const;

  /// (1 + lambda_k)^power for every sorted mode.
  Eigen::VectorXd sobolev_weights(double power) const;

  /// Dense cell-space matrix of the operator with the given sorted-mode
  /// multiplier, i.e. |cell| Phi diag(mult) Phi^T. O(N^2) memory.
  Eigen::MatrixXd dense_operator(const Eigen::VectorXd& sorted_multiplier) const;

  /// ||f||_{D(L)'} of a single scalar field.
  double dual_norm(const Eigen::Ref<const Eigen::VectorXd>& f) const;

  /// Discrete inner product sum_c |cell| f_c g_c.
  double inner(const Eigen::Ref<const Eigen::VectorXd>& f,
               const Eigen::Ref<const Eigen::VectorXd>& g) const;

 private:
  void forward_natural(const double* f, double* c) const;
  void inverse_natural(const double* c, double* f) const;

  Grid grid_;
  int m_;
  Eigen::MatrixXd phi_x_;  // nx x nx, column kx
  Eigen::MatrixXd phi_y_;  // ny x ny, column ky
  Eigen::VectorXd lambda_x_;
  Eigen::VectorXd lambda_y_;
  std::vector<Eigen::Index> sorted_to_natural_;
  Eigen::VectorXd sorted_eigenvalues_;
};

SpectralBasis build_eigenbasis(const Grid& grid, int sobolev_index);

Eigen::VectorXd to_spectral(const SpectralBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& f);
Eigen::VectorXd from_spectral(const SpectralBasis& basis,
                              const Eigen::Ref<const Eigen::VectorXd>& coefficients);

/// L f, multiplier (1 + lambda_k)^{m/2}, species-wise.
FieldArray apply_L(const SpectralBasis& basis, const FieldArray& f);
/// L*L f, multiplier (1 + lambda_k)^m, species-wise.
FieldArray apply_LstarL(const SpectralBasis& basis, const FieldArray& f);

/// ||f||_{D(L)'}^2 = sum_k (1 + lambda_k)^{-m} fhat_k^2, summed over species.
double dual_norm(const SpectralBasis& basis, const FieldArray& f);

/// ||L f||_{L^2}, the D(L) norm, summed over species.
double domain_norm(const SpectralBasis& basis, const FieldArray& f);

/// Discrete L^2 norm over all species.
double l2_norm(const Grid& grid, const FieldArray& f);

}  // namespace sktlab
