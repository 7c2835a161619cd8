#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sktlab/field.hpp"
#include "sktlab/grid.hpp"
#include "sktlab/model.hpp"
#include "sktlab/noise.hpp"
#include "sktlab/path_record.hpp"
#include "sktlab/regularization.hpp"
#include "sktlab/spectral.hpp"

namespace sktlab {

enum class Scheme { EntropyVariable, LaplacianForm };

std::string to_string(Scheme scheme);

/// u_i = constant_i + amplitude_i cos(pi x / Lx) [cos(pi y / Ly)], or an
/// explicit n x N field.
struct InitialCondition {
  Eigen::VectorXd constant;
  Eigen::VectorXd amplitude;
  std::optional<FieldArray> field;
};

struct NoiseSpec {
  NoiseFamily family = noise_family::Zero{};
  std::optional<double> rho;
  std::optional<Eigen::Index> modes;
};

/// Everything a run needs. Fill the plain fields, then call `finalize()`,
/// which validates them, resolves defaults and builds the shared operators.
struct SimConfig {
  SKTParameters params;
  Grid grid;
  int sobolev_index = 0;  // 0: smallest admissible for the dimension
  double epsilon = 1e-4;
  NewtonSettings newton;
  NoiseSpec noise;
  double T = 0.0;
  double dt = 0.0;
  Scheme scheme = Scheme::EntropyVariable;
  std::size_t save_every = 0;  // 0: max(1, steps / 100)
  InitialCondition initial;
  /// Check the facewise dissipation bound at every step (EntropyVariable only).
  bool check_faces = true;

  std::shared_ptr<const SpectralBasis> basis;
  std::shared_ptr<const RegularizationOperator> regularization;
  std::shared_ptr<const NoiseModel> noise_model;

  void finalize();
  bool finalized() const { return basis && regularization && noise_model; }
  std::size_t steps() const;
  FieldArray initial_density() const;
};

struct EntropyState {
  FieldArray v;
  FieldArray w;
};

struct StepInfo {
  int newton_iterations = 0;
  /// sum over faces |cell| grad w' . B grad w' with B frozen at the old state.
  double dissipation = 0.0;
  double residual = 0.0;
  std::size_t clipped = 0;
  /// Facewise check of grad w' . B grad w' against the dissipation lower bound.
  std::size_t faces_checked = 0;
  std::size_t face_violations = 0;
  double face_bound_sum = 0.0;  // sum over faces |cell| times the lower bound
};

/// One semi-implicit step of dv = div(B(w) grad w) dt + sigma(u) dW in the
/// entropy variable: B is frozen on the faces at the old state and
///   u(w') + eps L*L w' - dt D w' = v + sigma(u(w)) dW
/// is solved for w' by damped Newton. The returned v' = v + dt D w' + noise
/// is the conservative update; it equals Q_eps(w') to the Newton tolerance.
EntropyState step_entropy_variable(const SimConfig& config, const EntropyState& state,
                                   const Eigen::MatrixXd& dw, StepInfo* info = nullptr);

/// One lagged-coefficient step of the Laplacian form,
///   u'_i - dt Delta_h (c_i u'_i) = u_i + noise,  c_i = a_i0 + sum_j a_ij u_j.
FieldArray step_laplacian_form(const SimConfig& config, const FieldArray& u,
                               const Eigen::MatrixXd& dw, StepInfo* info = nullptr);

/// Zero-mean Wiener increments of step `step` (0-based) on path `path_index`.
Eigen::MatrixXd step_increments(const SimConfig& config, std::uint64_t seed,
                                std::uint32_t path_index, std::size_t step);

PathRecord run_path(const SimConfig& config, std::uint64_t seed, std::uint32_t path_index = 0);

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 for a single sample
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Order-independent summary via pairwise summation.
SampleStats describe(const std::vector<double>& values);
double pairwise_sum(const double* values, std::size_t count);

struct PathSummary {
  std::uint32_t path_index = 0;
  double sup_entropy = 0.0;
  double integrated_dissipation = 0.0;  // sum_k dt D_k
  double final_entropy = 0.0;
  Eigen::VectorXd initial_mass;
  Eigen::VectorXd final_mass;
  Eigen::VectorXd initial_dual_mass;
  Eigen::VectorXd final_dual_mass;
  double min_density = 0.0;
  std::size_t face_bound_violations = 0;
};

struct EnsembleStats {
  std::uint64_t base_seed = 0;
  std::vector<PathSummary> paths;
  SampleStats sup_entropy;
  SampleStats integrated_dissipation;
  SampleStats final_entropy;
  /// Mean and variance over paths of H at every record time.
  std::vector<double> times;
  std::vector<double> mean_entropy;
  std::vector<double> variance_entropy;
  /// Filled when requested.
  std::vector<PathRecord> records;
};

struct EnsembleOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  bool keep_records = false;
};

EnsembleStats run_ensemble(const SimConfig& config, std::size_t paths, std::uint64_t base_seed,
                           EnsembleOptions options = {});

PathSummary summarize(const PathRecord& record);

/// Per-step entropy bookkeeping of a path recorded with save_every = 1.
struct BalanceStep {
  double t = 0.0;
  double delta_entropy = 0.0;
  double dissipation = 0.0;   // -dt sum_faces |cell| grad w' . B grad w'
  double martingale = 0.0;    // <w, sigma(u) dW>
  double ito_correction = 0.0;
  double residual = 0.0;      // delta_entropy - (dissipation + martingale + ito_correction)
  double face_lower_bound = 0.0;  // -dt times the facewise lower-bound sum
  std::size_t face_violations = 0;
};

std::vector<BalanceStep> entropy_balance_report(const SimConfig& config, const PathRecord& path);

}  // namespace sktlab
