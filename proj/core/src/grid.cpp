#include "sktlab/grid.hpp"

#include <cmath>

#include "sktlab/error.hpp"

namespace sktlab {

Grid Grid::line(int nx, double lx) {
  Grid g;
  g.dim = 1;
  g.nx = nx;
  g.lx = lx;
  g.validate();
  return g;
}

Grid Grid::rectangle(int nx, int ny, double lx, double ly) {
  Grid g;
  g.dim = 2;
  g.nx = nx;
  g.ny = ny;
  g.lx = lx;
  g.ly = ly;
  g.validate();
  return g;
}

void Grid::validate() const {
  require(dim == 1 || dim == 2, ErrorCode::InvalidArgument, "grid dimension must be 1 or 2");
  require(nx >= 2, ErrorCode::InvalidArgument, "grid needs at least 2 cells per axis");
  require(std::isfinite(lx) && lx > 0.0, ErrorCode::InvalidArgument, "grid length must be positive");
  if (dim == 2) {
    require(ny >= 2, ErrorCode::InvalidArgument, "grid needs at least 2 cells per axis");
    require(std::isfinite(ly) && ly > 0.0, ErrorCode::InvalidArgument,
            "grid length must be positive");
  } else {
    require(ny == 1, ErrorCode::InvalidArgument, "1D grid must have ny = 1");
  }
}

std::vector<Face> interior_faces(const Grid& grid) {
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(2 * grid.cells()));
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix + 1 < grid.nx; ++ix) {
      faces.push_back({grid.index(ix, iy), grid.index(ix + 1, iy), grid.hx()});
    }
  }
  if (grid.dim == 2) {
    for (int iy = 0; iy + 1 < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        faces.push_back({grid.index(ix, iy), grid.index(ix, iy + 1), grid.hy()});
      }
    }
  }
  return faces;
}

Eigen::VectorXd neumann_laplacian(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f) {
  require(f.size() == grid.cells(), ErrorCode::SizeMismatch, "field size does not match grid");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
  const double cx = 1.0 / (grid.hx() * grid.hx());
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix + 1 < grid.nx; ++ix) {
      const auto l = grid.index(ix, iy);
      const double flux = (f(l + 1) - f(l)) * cx;
      out(l) += flux;
      out(l + 1) -= flux;
    }
  }
  if (grid.dim == 2) {
    const double cy = 1.0 / (grid.hy() * grid.hy());
    for (int iy = 0; iy + 1 < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        const auto l = grid.index(ix, iy);
        const auto r = grid.index(ix, iy + 1);
        const double flux = (f(r) - f(l)) * cy;
        out(l) += flux;
        out(r) -= flux;
      }
    }
  }
  return out;
}

FieldArray neumann_laplacian_species(const Grid& grid, const FieldArray& f) {
  FieldArray out(f.rows(), f.cols());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    out.row(i) = neumann_laplacian(grid, f.row(i).transpose()).transpose();
  }
  return out;
}

Eigen::VectorXd species_mass(const Grid& grid, const FieldArray& f) {
  return f.rowwise().sum() * grid.cell_volume();
}

GridField divergence_mobility(const SKTParameters& params, const Grid& grid, const GridField& w) {
  require(w.values.rows() == params.n && w.values.cols() == grid.cells(), ErrorCode::SizeMismatch,
          "entropy variable shape does not match parameters and grid");
  require(w.values.allFinite(), ErrorCode::NonFinite, "entropy variable has non-finite entries");
  const FaceMobility mob(params, grid, w.values);
  return {FieldKind::Dual, mob.apply(w.values)};
}

GridField laplacian_form_rhs(const SKTParameters& params, const Grid& grid, const GridField& u) {
  require(u.values.rows() == params.n && u.values.cols() == grid.cells(), ErrorCode::SizeMismatch,
          "density shape does not match parameters and grid");
  require((u.values.array() > 0.0).all(), ErrorCode::NonPositiveDensity,
          "Laplacian form needs strictly positive densities");
  // p_i = u_i (a0_i + sum_j a_ij u_j)
  FieldArray pressure = params.a * u.values;
  pressure.colwise() += params.a0;
  pressure.array() *= u.values.array();
  return {FieldKind::Dual, neumann_laplacian_species(grid, pressure)};
}

FaceMobility::FaceMobility(const SKTParameters& params, const Grid& grid, const FieldArray& w)
    : faces_(interior_faces(grid)), cell_volume_(grid.cell_volume()), species_(params.n) {
  mobility_.reserve(faces_.size());
  density_.reserve(faces_.size());
  for (const Face& f : faces_) {
    const Eigen::VectorXd w_face = 0.5 * (w.col(f.left) + w.col(f.right));
    Eigen::VectorXd u_face = inverse_entropy_variable(params, w_face);
    mobility_.push_back(mobility_from_density(params, u_face));
    density_.push_back(std::move(u_face));
  }
}

FieldArray FaceMobility::apply(const FieldArray& x) const {
  FieldArray out = FieldArray::Zero(x.rows(), x.cols());
  Eigen::VectorXd flux(species_);
  for (std::size_t k = 0; k < faces_.size(); ++k) {
    const Face& f = faces_[k];
    flux.noalias() = mobility_[k] * (x.col(f.right) - x.col(f.left));
    flux /= f.spacing * f.spacing;
    out.col(f.left) += flux;
    out.col(f.right) -= flux;
  }
  return out;
}

double FaceMobility::quadratic_form(const FieldArray& x) const {
  double total = 0.0;
  for (std::size_t k = 0; k < faces_.size(); ++k) {
    const Face& f = faces_[k];
    const Eigen::VectorXd z = (x.col(f.right) - x.col(f.left)) / f.spacing;
    total += z.dot(mobility_[k] * z);
  }
  return total * cell_volume_;
}

Eigen::VectorXd FaceMobility::mean_diagonal() const {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(species_);
  for (const auto& b : mobility_) mean += b.diagonal();
  if (!mobility_.empty()) mean /= static_cast<double>(mobility_.size());
  return mean;
}

}  // namespace sktlab
