#pragma once

#include <Eigen/Core>

#include <vector>

#include "sktlab/field.hpp"
#include "sktlab/model.hpp"

namespace sktlab {

/// Uniform cell-centered grid on [0, Lx] or [0, Lx] x [0, Ly] with no-flux
/// boundaries. A 1D grid is stored with ny = 1 and ly = 1.
struct Grid {
  int dim = 1;
  int nx = 2;
  int ny = 1;
  double lx = 1.0;
  double ly = 1.0;

  static Grid line(int nx, double lx = 1.0);
  static Grid rectangle(int nx, int ny, double lx = 1.0, double ly = 1.0);

  void validate() const;

  Eigen::Index cells() const { return static_cast<Eigen::Index>(nx) * ny; }
  double hx() const { return lx / nx; }
  double hy() const { return dim == 2 ? ly / ny : 1.0; }
  double cell_volume() const { return hx() * hy(); }
  double domain_volume() const { return dim == 2 ? lx * ly : lx; }

  Eigen::Index index(int ix, int iy) const { return static_cast<Eigen::Index>(iy) * nx + ix; }
  double x(int ix) const { return (ix + 0.5) * hx(); }
  double y(int iy) const { return (iy + 0.5) * hy(); }
};

/// Interior face between cells `left` and `right` (right is the neighbour in
/// the positive axis direction). Boundary faces carry no flux and are omitted.
struct Face {
  Eigen::Index left;
  Eigen::Index right;
  double spacing;
};

std::vector<Face> interior_faces(const Grid& grid);

/// Discrete Neumann Laplacian, 3-point (1D) or 5-point (2D) stencil.
Eigen::VectorXd neumann_laplacian(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f);

/// Species-wise Neumann Laplacian of a multi-species array.
FieldArray neumann_laplacian_species(const Grid& grid, const FieldArray& f);

/// Per-species cell sums weighted by the cell volume.
Eigen::VectorXd species_mass(const Grid& grid, const FieldArray& f);

/// div(B(w) grad w) in flux form: B is evaluated at the arithmetic mean of w
/// on each interior face.
GridField divergence_mobility(const SKTParameters& params, const Grid& grid, const GridField& w);

/// Delta_h applied to p_i = u_i (a0_i + sum_j a_ij u_j).
GridField laplacian_form_rhs(const SKTParameters& params, const Grid& grid, const GridField& u);

/// Mobility matrices frozen on the interior faces of a grid.
///
/// Stores B(w_face) for every face so that the flux-form operator can be
/// applied to other fields with the coefficients held fixed.
class FaceMobility {
 public:
  FaceMobility(const SKTParameters& params, const Grid& grid, const FieldArray& w);

  const std::vector<Face>& faces() const { return faces_; }
  const Eigen::MatrixXd& mobility(std::size_t face) const { return mobility_[face]; }
  /// Density at the face, u(w_face).
  const Eigen::VectorXd& density(std::size_t face) const { return density_[face]; }

  /// (D x)_{i,c} = sum_faces sum_j B_ij (x_j,nbr - x_j,c) / h^2.
  FieldArray apply(const FieldArray& x) const;

  /// sum_faces |cell| grad x . B grad x, the discrete Dirichlet form -<x, D x>.
  double quadratic_form(const FieldArray& x) const;

  /// Average diagonal mobility per species, used for preconditioning.
  Eigen::VectorXd mean_diagonal() const;

 private:
  std::vector<Face> faces_;
  std::vector<Eigen::MatrixXd> mobility_;
  std::vector<Eigen::VectorXd> density_;
  double cell_volume_;
  int species_;
};

}  // namespace sktlab
