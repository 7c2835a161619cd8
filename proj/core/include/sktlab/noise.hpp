#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sktlab/field.hpp"
#include "sktlab/model.hpp"
#include "sktlab/path_record.hpp"
#include "sktlab/spectral.hpp"

namespace sktlab {

namespace noise_family {

struct Zero {};
/// s(u) = u / (1 + u^{1/2 + eta})
struct BoundedRatio {
  double eta = 0.5;
};
/// s(u) = u^alpha, 1/2 <= alpha <= 1
struct Power {
  double alpha = 0.5;
};
/// s(u) = u^alpha / (1 + u^beta), beta >= alpha / 2
struct PowerDamped {
  double alpha = 0.5;
  double beta = 0.5;
};
/// Arbitrary intensity for diagnostics; not an admissible SKT noise in
/// general (it need not vanish at u = 0).
struct Custom {
  std::function<double(double)> intensity;
  std::string name = "custom";
};

}  // namespace noise_family

using NoiseFamily = std::variant<noise_family::Zero, noise_family::BoundedRatio, noise_family::Power,
                                 noise_family::PowerDamped, noise_family::Custom>;

std::string family_name(const NoiseFamily& family);

/// rho = 1.1 (d/2)^2 + 0.1.
double default_spectral_decay(int dim);

/// Diagonal multiplicative noise sigma_ii(u) = s(u_i) sum_{k<K} a_k eta_k dW_ik
/// with a_k = (1 + lambda_k)^{-rho}.
class NoiseModel {
 public:
  /// `modes` defaults to the smallest K whose coefficient tail
  /// sum_{k>=K} a_k^2 is at most 1% of the total, capped at the basis size.
  NoiseModel(std::shared_ptr<const SpectralBasis> basis, NoiseFamily family,
             std::optional<double> rho = std::nullopt,
             std::optional<Eigen::Index> modes = std::nullopt);

  const NoiseFamily& family() const { return family_; }
  bool is_zero() const { return std::holds_alternative<noise_family::Zero>(family_); }
  double rho() const { return rho_; }
  Eigen::Index modes() const { return modes_; }
  const SpectralBasis& basis() const { return *basis_; }

  /// a_k for k < K.
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  /// sum_{k>=K} a_k^2 / sum_k a_k^2 over the full discrete basis.
  double tail_fraction() const { return tail_fraction_; }
  /// sum_{k<K} a_k^2 ||eta_k||_sup^2.
  double sup_norm_sum() const { return sup_norm_sum_; }

  double intensity(double u) const;

  /// Cellwise s(u_i,c) sum_k a_k eta_k(c) dW_ik. `dw` is n x K.
  GridField increment(const FieldArray& u, const Eigen::MatrixXd& dw) const;

  /// sigma(u) e_k for species i: the field s(u_i) a_k eta_k.
  Eigen::VectorXd mode_field(const FieldArray& u, int species, Eigen::Index k) const;

  /// Per-cell sum_{k<K} a_k^2 eta_k(c)^2.
  const Eigen::VectorXd& cell_weights() const { return cell_weights_; }

 private:
  std::shared_ptr<const SpectralBasis> basis_;
  NoiseFamily family_;
  double rho_;
  Eigen::Index modes_;
  Eigen::VectorXd coefficients_;
  double tail_fraction_ = 0.0;
  double sup_norm_sum_ = 0.0;
  Eigen::VectorXd cell_weights_;
};

GridField noise_increment_field(const NoiseModel& model, const SKTParameters& params,
                                const GridField& u, const Eigen::MatrixXd& dw);

struct A4Report {
  double lipschitz = 0.0;  // max ||sigma(u) - sigma(v)||_HS / ||u - v||
  double growth = 0.0;     // max ||sigma(v)||_HS / (1 + ||v||)
  double exponent = 0.0;   // least-squares slope of log ||sigma(v)||_HS vs log ||v||
  std::size_t samples = 0;
};

/// Empirical Lipschitz and growth constants of u -> sigma(u) in the
/// Hilbert-Schmidt norm. The growth exponent is fitted over samples with
/// ||v||_{L^2} > 1.
A4Report check_A4(const NoiseModel& model, const SKTParameters& params,
                  const std::vector<std::pair<GridField, GridField>>& sample_pairs);

struct A5Report {
  double ratio1 = 0.0;
  double ratio2 = 0.0;
};

/// Empirical entropy-noise interaction constants along a trajectory. With
/// rectangle-rule time integrals over the saved snapshots,
///   lhs1(t) = (int_0^t sum_{i,k} (<pi_i log u_i, s(u_i) a_k eta_k>)^2 ds)^{1/2}
///   lhs2(t) = int_0^t sum_{i,k} <pi_i / u_i, (s(u_i) a_k eta_k)^2> ds
/// and ratio_j = max_t lhs_j(t) / (1 + int_0^t int h(u) dx ds).
A5Report check_A5(const NoiseModel& model, const SKTParameters& params, const PathRecord& trajectory);

/// ||sigma(u)||_HS^2 = sum_{i, k<K} a_k^2 ||s(u_i) eta_k||^2.
double hilbert_schmidt_norm(const NoiseModel& model, const FieldArray& u);

}  // namespace sktlab
