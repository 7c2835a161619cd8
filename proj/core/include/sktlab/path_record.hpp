#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "sktlab/field.hpp"

namespace sktlab {

struct Snapshot {
  double t = 0.0;
  std::size_t step = 0;
  FieldArray u;
  /// Entropy variable; absent for the Laplacian-form scheme.
  std::optional<FieldArray> w;
};

/// Per-step scalar series of one path plus the saved field snapshots.
/// Index 0 is the initial state; index k the state after step k.
struct PathRecord {
  std::vector<double> times;
  std::vector<double> entropy;      // H
  std::vector<double> dissipation;  // realized dissipation rate of the step ending here
  std::vector<Eigen::VectorXd> mass;       // u-mass per species
  std::vector<Eigen::VectorXd> dual_mass;  // v-mass per species (equal to u-mass for the Laplacian form)
  std::vector<double> min_u;
  std::vector<double> max_u;
  std::vector<Eigen::VectorXd> l2;
  std::vector<int> newton_iterations;

  std::vector<Snapshot> snapshots;

  std::uint64_t seed = 0;
  std::uint32_t path_index = 0;
  Eigen::Index noise_modes = 0;

  /// Faces where the facewise quadratic form fell below the dissipation
  /// lower bound, or the bound below zero, beyond round-off.
  std::size_t face_bound_violations = 0;
  std::size_t faces_checked = 0;
  /// Laplacian form: negative round-off values clipped to zero.
  std::size_t clip_events = 0;

  std::size_t size() const { return times.size(); }
  int species() const { return mass.empty() ? 0 : static_cast<int>(mass.front().size()); }
};

}  // namespace sktlab
