#include "sktlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sktlab/error.hpp"

namespace sktlab {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Normalized cosine modes of the 1D Neumann Laplacian on n cells of [0, length].
void cosine_modes(int n, double length, Eigen::MatrixXd& phi, Eigen::VectorXd& lambda) {
  const double h = length / n;
  phi.resize(n, n);
  lambda.resize(n);
  for (int k = 0; k < n; ++k) {
    const double norm = k == 0 ? std::sqrt(1.0 / length) : std::sqrt(2.0 / length);
    for (int c = 0; c < n; ++c) {
      phi(c, k) = norm * std::cos(std::numbers::pi * k * (c + 0.5) / n);
    }
    const double s = std::sin(std::numbers::pi * k / (2.0 * n));
    lambda(k) = 4.0 / (h * h) * s * s;
  }
}

}  // namespace

int default_sobolev_index(int dim) {
  // smallest integer strictly above d/2 + 1
  return static_cast<int>(std::floor(dim / 2.0 + 1.0)) + 1;
}

SpectralBasis::SpectralBasis(const Grid& grid, int sobolev_index) : grid_(grid), m_(sobolev_index) {
  grid_.validate();
  require(m_ >= 1, ErrorCode::InvalidArgument, "Sobolev index must be positive");
  cosine_modes(grid_.nx, grid_.lx, phi_x_, lambda_x_);
  if (grid_.dim == 2) {
    cosine_modes(grid_.ny, grid_.ly, phi_y_, lambda_y_);
  } else {
    phi_y_ = Eigen::MatrixXd::Ones(1, 1);
    lambda_y_ = Eigen::VectorXd::Zero(1);
  }

  const Eigen::Index n = grid_.cells();
  Eigen::VectorXd natural(n);
  for (int ky = 0; ky < grid_.ny; ++ky) {
    for (int kx = 0; kx < grid_.nx; ++kx) natural(ky * grid_.nx + kx) = lambda_x_(kx) + lambda_y_(ky);
  }
  sorted_to_natural_.resize(static_cast<std::size_t>(n));
  std::iota(sorted_to_natural_.begin(), sorted_to_natural_.end(), Eigen::Index{0});
  std::stable_sort(sorted_to_natural_.begin(), sorted_to_natural_.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return natural(a) < natural(b); });
  sorted_eigenvalues_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) sorted_eigenvalues_(k) = natural(sorted_to_natural_[k]);
}

void SpectralBasis::forward_natural(const double* f, double* c) const {
  const Eigen::Map<const RowMajorMatrix> F(f, grid_.ny, grid_.nx);
  Eigen::Map<RowMajorMatrix> C(c, grid_.ny, grid_.nx);
  if (grid_.dim == 1) {
    C.noalias() = grid_.cell_volume() * (F * phi_x_);
  } else {
    C.noalias() = grid_.cell_volume() * (phi_y_.transpose() * F * phi_x_);
  }
}

void SpectralBasis::inverse_natural(const double* c, double* f) const {
  const Eigen::Map<const RowMajorMatrix> C(c, grid_.ny, grid_.nx);
  Eigen::Map<RowMajorMatrix> F(f, grid_.ny, grid_.nx);
  if (grid_.dim == 1) {
    F.noalias() = C * phi_x_.transpose();
  } else {
    F.noalias() = phi_y_ * C * phi_x_.transpose();
  }
}

Eigen::VectorXd SpectralBasis::to_spectral(const Eigen::Ref<const Eigen::VectorXd>& f) const {
  require(f.size() == size(), ErrorCode::SizeMismatch, "field size does not match basis");
  const Eigen::VectorXd input = f;
  Eigen::VectorXd natural(size());
  forward_natural(input.data(), natural.data());
  Eigen::VectorXd sorted(size());
  for (Eigen::Index k = 0; k < size(); ++k) sorted(k) = natural(sorted_to_natural_[k]);
  return sorted;
}

Eigen::VectorXd SpectralBasis::from_spectral(
    const Eigen::Ref<const Eigen::VectorXd>& coefficients) const {
  require(coefficients.size() <= size(), ErrorCode::SizeMismatch,
          "more coefficients than basis modes");
  Eigen::VectorXd natural = Eigen::VectorXd::Zero(size());
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    natural(sorted_to_natural_[k]) = coefficients(k);
  }
  Eigen::VectorXd f(size());
  inverse_natural(natural.data(), f.data());
  return f;
}

Eigen::VectorXd SpectralBasis::apply_multiplier(const Eigen::Ref<const Eigen::VectorXd>& f,
                                                const Eigen::VectorXd& sorted_multiplier) const {
  Eigen::VectorXd c = to_spectral(f);
  c.array() *= sorted_multiplier.array();
  return from_spectral(c);
}

Eigen::VectorXd SpectralBasis::sobolev_weights(double power) const {
  return (1.0 + sorted_eigenvalues_.array()).pow(power).matrix();
}

Eigen::VectorXd SpectralBasis::mode(Eigen::Index k) const {
  require(k >= 0 && k < size(), ErrorCode::InvalidArgument, "mode index out of range");
  const Eigen::Index nat = sorted_to_natural_[k];
  const auto kx = nat % grid_.nx;
  const auto ky = nat / grid_.nx;
  Eigen::VectorXd f(size());
  for (int iy = 0; iy < grid_.ny; ++iy) {
    for (int ix = 0; ix < grid_.nx; ++ix) f(grid_.index(ix, iy)) = phi_y_(iy, ky) * phi_x_(ix, kx);
  }
  return f;
}

double SpectralBasis::mode_sup_norm(Eigen::Index k) const {
  const Eigen::Index nat = sorted_to_natural_[k];
  return phi_x_.col(nat % grid_.nx).cwiseAbs().maxCoeff() *
         phi_y_.col(nat / grid_.nx).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd SpectralBasis::dense_operator(const Eigen::VectorXd& sorted_multiplier) const {
  const Eigen::Index n = size();
  Eigen::MatrixXd phi(n, n);
  for (Eigen::Index k = 0; k < n; ++k) phi.col(k) = mode(k);
  Eigen::MatrixXd scaled = phi * sorted_multiplier.asDiagonal();
  return grid_.cell_volume() * scaled * phi.transpose();
}

double SpectralBasis::dual_norm(const Eigen::Ref<const Eigen::VectorXd>& f) const {
  const Eigen::VectorXd c = to_spectral(f);
  return std::sqrt(((1.0 + sorted_eigenvalues_.array()).pow(-m_) * c.array().square()).sum());
}

double SpectralBasis::inner(const Eigen::Ref<const Eigen::VectorXd>& f,
                            const Eigen::Ref<const Eigen::VectorXd>& g) const {
  return grid_.cell_volume() * f.dot(g);
}

SpectralBasis build_eigenbasis(const Grid& grid, int sobolev_index) {
  return SpectralBasis(grid, sobolev_index);
}

Eigen::VectorXd to_spectral(const SpectralBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& f) {
  return basis.to_spectral(f);
}

Eigen::VectorXd from_spectral(const SpectralBasis& basis,
                              const Eigen::Ref<const Eigen::VectorXd>& coefficients) {
  return basis.from_spectral(coefficients);
}

namespace {

FieldArray apply_rows(const SpectralBasis& basis, const FieldArray& f, const Eigen::VectorXd& mult) {
  require(f.cols() == basis.size(), ErrorCode::SizeMismatch, "field size does not match basis");
  FieldArray out(f.rows(), f.cols());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    out.row(i) = basis.apply_multiplier(f.row(i).transpose(), mult).transpose();
  }
  return out;
}

}  // namespace

FieldArray apply_L(const SpectralBasis& basis, const FieldArray& f) {
  return apply_rows(basis, f, basis.sobolev_weights(0.5 * basis.sobolev_index()));
}

FieldArray apply_LstarL(const SpectralBasis& basis, const FieldArray& f) {
  return apply_rows(basis, f, basis.sobolev_weights(basis.sobolev_index()));
}


double dual_norm(const SpectralBasis& basis, const FieldArray& f) {
  require(f.cols() == basis.size(), ErrorCode::SizeMismatch, "field size does not match basis");
  const Eigen::VectorXd w = basis.sobolev_weights(-basis.sobolev_index());
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const Eigen::VectorXd c = basis.to_spectral(f.row(i).transpose());
    total += (w.array() * c.array().square()).sum();
  }
  return std::sqrt(total);
}

double domain_norm(const SpectralBasis& basis, const FieldArray& f) {
  require(f.cols() == basis.size(), ErrorCode::SizeMismatch, "field size does not match basis");
  const Eigen::VectorXd w = basis.sobolev_weights(basis.sobolev_index());
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const Eigen::VectorXd c = basis.to_spectral(f.row(i).transpose());
    total += (w.array() * c.array().square()).sum();
  }
  return std::sqrt(total);
}

double l2_norm(const Grid& grid, const FieldArray& f) {
  return std::sqrt(grid.cell_volume() * f.squaredNorm());
}

}  // namespace sktlab
