#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical kernels.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// Dense Neumann Laplacian of a uniform 1D cell grid, assembled by hand.
inline Eigen::MatrixXd neumann_matrix_1d(int n, double length) {
  const double h = length / n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int c = 0; c + 1 < n; ++c) {
    m(c, c) -= 1.0;
    m(c + 1, c + 1) -= 1.0;
    m(c, c + 1) += 1.0;
    m(c + 1, c) += 1.0;
  }
  return m / (h * h);
}

/// 2D Neumann Laplacian as a Kronecker sum, x fastest.
inline Eigen::MatrixXd neumann_matrix_2d(int nx, int ny, double lx, double ly) {
  const Eigen::MatrixXd ax = neumann_matrix_1d(nx, lx);
  const Eigen::MatrixXd ay = neumann_matrix_1d(ny, ly);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nx * ny, nx * ny);
  for (int iy = 0; iy < ny; ++iy) m.block(iy * nx, iy * nx, nx, nx) += ax;
  for (int iy = 0; iy < ny; ++iy) {
    for (int jy = 0; jy < ny; ++jy) {
      if (ay(iy, jy) == 0.0) continue;
      for (int ix = 0; ix < nx; ++ix) m(iy * nx + ix, jy * nx + ix) += ay(iy, jy);
    }
  }
  return m;
}

/// Sorted eigenvalues of -Delta_h from a dense symmetric eigensolver.
inline Eigen::VectorXd sorted_spectrum(const Eigen::MatrixXd& laplacian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-laplacian);
  Eigen::VectorXd ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

/// Exact single-mode heat solution 1 + amp cos(pi x) exp(-pi^2 t) at cell centers of [0,1].
inline Eigen::VectorXd heat_mode(int n, double amp, double t) {
  Eigen::VectorXd u(n);
  for (int c = 0; c < n; ++c) {
    const double x = (c + 0.5) / n;
    u(c) = 1.0 + amp * std::cos(std::numbers::pi * x) * std::exp(-std::numbers::pi * std::numbers::pi * t);
  }
  return u;
}

/// Kolmogorov criterion by brute force: every cycle through the support graph
/// (here: every ordered triple and pair for n <= 4) has equal forward and
/// backward products.
inline bool kolmogorov_holds(const Eigen::MatrixXd& a, double rel_tol = 1e-10) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> perm(n);
  // enumerate all cycles of length 3..n by permutations of subsets
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<int> nodes;
    for (int i = 0; i < n; ++i) {
      if (mask & (1 << i)) nodes.push_back(i);
    }
    if (nodes.size() < 3) continue;
    std::sort(nodes.begin(), nodes.end());
    do {
      double fwd = 1.0, bwd = 1.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const int i = nodes[k], j = nodes[(k + 1) % nodes.size()];
        fwd *= a(i, j);
        bwd *= a(j, i);
      }
      if (fwd == 0.0 && bwd == 0.0) continue;
      if (std::abs(fwd - bwd) > rel_tol * std::max(fwd, bwd)) return false;
    } while (std::next_permutation(nodes.begin() + 1, nodes.end()));
  }
  return true;
}

/// Random smooth field on a 1D grid: a few cosine modes with decaying amplitudes.
inline Eigen::VectorXd smooth_field_1d(int n, std::mt19937_64& gen, double scale = 1.0, int modes = 6) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < modes; ++k) {
    const double amp = scale * normal(gen) / (1.0 + k);
    for (int c = 0; c < n; ++c) f(c) += amp * std::cos(std::numbers::pi * k * (c + 0.5) / n);
  }
  return f;
}

}  // namespace oracle
