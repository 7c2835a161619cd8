#pragma once

#include <Eigen/Core>

namespace sktlab {

/// Species-by-cell array. Row i holds species i; cells are ordered row-major
/// over the grid with x fastest.
using FieldArray = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FieldKind { Density, EntropyVariable, Dual };

struct GridField {
  FieldKind kind = FieldKind::Density;
  FieldArray values;

  GridField() = default;
  GridField(FieldKind k, FieldArray v) : kind(k), values(std::move(v)) {}

  Eigen::Index species() const { return values.rows(); }
  Eigen::Index cells() const { return values.cols(); }
};

}  // namespace sktlab
