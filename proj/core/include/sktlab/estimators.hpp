#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "sktlab/field.hpp"
#include "sktlab/path_record.hpp"
#include "sktlab/simulator.hpp"
#include "sktlab/spectral.hpp"

namespace sktlab {

enum class SpaceNorm {
  L1,
  L2,
  Lq,
  H1,      // (||f||_2^2 + ||grad f||_2^2)^{1/2}
  GradL2,  // ||grad f||_2
  W11,     // ||f||_1 + ||grad f||_1
  GradL1,  // ||grad f||_1
  Dual,    // ||f||_{D(L)'}
};

struct Transform {
  enum class Kind { Identity, Sqrt, PairSqrt };
  Kind kind = Kind::Identity;
  int i = 0;  // species pair for PairSqrt, 0-based
  int j = 1;

  static Transform identity() { return {}; }
  static Transform sqrt() { return {Kind::Sqrt, 0, 1}; }
  static Transform pair_sqrt(int i, int j) { return {Kind::PairSqrt, i, j}; }
};

/// Mixed space-time norm ||T(u)||_{L^{p_t}(0,T; X)}.
struct NormSpec {
  double time_exponent = 2.0;  // infinity allowed
  SpaceNorm space = SpaceNorm::L2;
  double q = 2.0;  // exponent of Lq
  Transform transform;

  void validate() const;
  static constexpr double infinity = std::numeric_limits<double>::infinity();
};

/// Spatial norm of one field (species rows). With several rows the norm is
/// taken over the stacked species, e.g. (sum_i ||f_i||_q^q)^{1/q}.
double space_norm(const SpectralBasis& basis, const FieldArray& f, const NormSpec& spec);

/// Cell-centered gradient with mirrored ghost cells: centered differences in
/// the interior, (f_1 - f_0) / (2h) at a wall. Returns |grad f| per cell
/// (Euclidean magnitude in 2D) for a scalar field.
Eigen::VectorXd gradient_magnitude(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f);

/// Left-rectangle weights for the given sample times: w_s = t_{s+1} - t_s and
/// zero for the last sample.
std::vector<double> rectangle_weights(const std::vector<double>& times);

/// Discrete ||T(u)||_{L^{p_t}(0,T;X)} over the saved snapshots. `species`
/// restricts to one species (ignored for PairSqrt); all species otherwise.
double mixed_norm(const PathRecord& path, const SpectralBasis& basis, const NormSpec& spec,
                  std::optional<int> species = std::nullopt);

/// Same, from explicit samples.
double mixed_norm(const std::vector<double>& times, const std::vector<FieldArray>& fields,
                  const SpectralBasis& basis, const NormSpec& spec,
                  std::optional<int> species = std::nullopt);

struct SlobodeckijResult {
  double seminorm_pow = 0.0;  // the double sum, i.e. |v|^p
  double seminorm = 0.0;      // its p-th root
  double lp_part = 0.0;       // ||v||_{L^p(0,T;X)}^p
  double full = 0.0;          // (lp_part + seminorm_pow)^{1/p}
  /// alpha < 1/2 and p = (2d + 4) / d, the fractional compactness regime.
  bool in_compactness_regime = false;
};

/// Sobolev-Slobodeckij seminorm
///   sum_{s != t} w_s w_t ||v(t) - v(s)||^p / |t - s|^{1 + alpha p}
/// from sample times, a pairwise distance and a pointwise norm.
SlobodeckijResult slobodeckij_seminorm(const std::vector<double>& times,
                                       const std::function<double(std::size_t, std::size_t)>& distance,
                                       const std::function<double(std::size_t)>& norm, double alpha,
                                       double p, int dim);

/// Scalar path with X = absolute value.
SlobodeckijResult slobodeckij_seminorm(const std::vector<double>& times,
                                       const std::vector<double>& values, double alpha, double p,
                                       int dim = 1);

/// Path of density snapshots with X = D(L)' (space = Dual) or L^2 (space = L2).
SlobodeckijResult slobodeckij_seminorm(const PathRecord& path, const SpectralBasis& basis,
                                       double alpha, double p, SpaceNorm space);

struct MomentResult {
  double mean = 0.0;
  std::optional<double> stderr_value;  // none for a single sample
};

/// Mean and standard error of X^p over the given functional values.
MomentResult ensemble_moment(const std::vector<double>& values, double p);

/// Same with X = mixed_norm(path, spec) for every path.
MomentResult ensemble_moment(const std::vector<PathRecord>& paths, const SpectralBasis& basis,
                             const NormSpec& spec, double p, std::optional<int> species = std::nullopt);

struct EpsilonRow {
  double epsilon = 0.0;
  /// ||u^{eps_k} - u^{eps_{k+1}}||_{L^2(Q_T)}; absent for the last row.
  std::optional<double> l2_difference;
  /// sup_t eps ||L*L w||_{D(L)'} = sup_t ||v - u||_{D(L)'}.
  double regularization_residue = 0.0;
  double sup_entropy = 0.0;
  int total_newton_iterations = 0;
};

/// Runs the entropy-variable scheme for every epsilon with identical noise
/// (same seed and path index) and compares successive solutions.
std::vector<EpsilonRow> epsilon_consistency_study(const SimConfig& config,
                                                  const std::vector<double>& eps_list,
                                                  std::uint64_t seed);

/// ||u||_{L^{2+2/d}(Q_T)} / (||u||_{L^2(0,T;H^1)}^theta ||u||_{L^inf(0,T;L^1)}^{1-theta}),
/// theta = d / (d + 1), for one species.
double gagliardo_nirenberg_ratio(const PathRecord& path, const SpectralBasis& basis, int species);

}  // namespace sktlab
