#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "sktlab/error.hpp"
#include "sktlab/grid.hpp"
#include "sktlab/spectral.hpp"
#include "support/oracles.hpp"

using namespace sktlab;

namespace {

Eigen::VectorXd random_field(Eigen::Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd f(n);
  for (Eigen::Index c = 0; c < n; ++c) f(c) = normal(gen);
  return f;
}

FieldArray row(const Eigen::VectorXd& f) {
  FieldArray out(1, f.size());
  out.row(0) = f.transpose();
  return out;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid::line(1), SktError);
  CHECK_THROWS_AS(Grid::line(8, -1.0), SktError);
  CHECK_THROWS_AS(Grid::rectangle(4, 1), SktError);
  const Grid g = Grid::rectangle(4, 3, 2.0, 3.0);
  CHECK(g.cells() == 12);
  CHECK(g.hx() == 0.5);
  CHECK(g.hy() == 1.0);
  CHECK(g.cell_volume() == 0.5);
  CHECK(interior_faces(g).size() == 3 * 3 + 4 * 2);
}

TEST_CASE("Neumann Laplacian") {
  SUBCASE("two-cell example") {
    const Eigen::VectorXd out = neumann_laplacian(Grid::line(2), Eigen::Vector2d(0.0, 1.0));
    CHECK(out(0) == doctest::Approx(4.0));
    CHECK(out(1) == doctest::Approx(-4.0));
  }
  SUBCASE("constants are annihilated") {
    const Grid g = Grid::rectangle(5, 7, 1.0, 2.0);
    CHECK(neumann_laplacian(g, Eigen::VectorXd::Constant(g.cells(), 3.7)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("matches the hand-assembled matrix, 1D and 2D") {
    std::mt19937_64 gen(1);
    const Grid g1 = Grid::line(13, 2.0);
    const Eigen::VectorXd f1 = random_field(g1.cells(), gen);
    CHECK((neumann_laplacian(g1, f1) - oracle::neumann_matrix_1d(13, 2.0) * f1).cwiseAbs().maxCoeff() < 1e-10);
    const Grid g2 = Grid::rectangle(6, 5, 1.0, 0.7);
    const Eigen::VectorXd f2 = random_field(g2.cells(), gen);
    const Eigen::MatrixXd m2 = oracle::neumann_matrix_2d(6, 5, 1.0, 0.7);
    CHECK((neumann_laplacian(g2, f2) - m2 * f2).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("discrete mass of the output vanishes") {
    std::mt19937_64 gen(2);
    const Grid g = Grid::rectangle(9, 4);
    const Eigen::VectorXd f = random_field(g.cells(), gen);
    CHECK(std::abs(neumann_laplacian(g, f).sum() * g.cell_volume()) < 1e-12 * 1e3);
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(neumann_laplacian(Grid::line(4), Eigen::VectorXd::Zero(5)), SktError);
  }
}

TEST_CASE("eigenbasis") {
  SUBCASE("two-cell eigenvalues") {
    const SpectralBasis b(Grid::line(2), 2);
    CHECK(b.eigenvalues()(0) == doctest::Approx(0.0));
    CHECK(b.eigenvalues()(1) == doctest::Approx(8.0));
  }
  SUBCASE("default index") {
    CHECK(default_sobolev_index(1) == 2);
    CHECK(default_sobolev_index(2) == 3);
  }
  SUBCASE("spectrum agrees with a dense eigensolver") {
    const SpectralBasis b1(Grid::line(32, 1.5), 2);
    CHECK((b1.eigenvalues() - oracle::sorted_spectrum(oracle::neumann_matrix_1d(32, 1.5))).cwiseAbs().maxCoeff() <
          1e-8);
    const SpectralBasis b2(Grid::rectangle(8, 6, 1.0, 2.0), 3);
    CHECK((b2.eigenvalues() - oracle::sorted_spectrum(oracle::neumann_matrix_2d(8, 6, 1.0, 2.0)))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  }
  SUBCASE("eigenrelation residual and orthonormality") {
    for (const Grid& g : {Grid::line(64), Grid::rectangle(6, 5, 1.0, 2.0)}) {
      const SpectralBasis b(g, default_sobolev_index(g.dim));
      double worst = 0.0;
      Eigen::MatrixXd phi(g.cells(), g.cells());
      for (Eigen::Index k = 0; k < b.size(); ++k) {
        const Eigen::VectorXd e = b.mode(k);
        phi.col(k) = e;
        const Eigen::VectorXd r = neumann_laplacian(g, e) + b.eigenvalues()(k) * e;
        worst = std::max(worst, std::sqrt(g.cell_volume() * r.squaredNorm()));
      }
      CHECK(worst <= 1e-10 * std::max(1.0, b.eigenvalues().maxCoeff()));
      const Eigen::MatrixXd gram = g.cell_volume() * phi.transpose() * phi;
      CHECK((gram - Eigen::MatrixXd::Identity(g.cells(), g.cells())).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(b.mode(0).maxCoeff() - b.mode(0).minCoeff() < 1e-14);
    }
  }
  SUBCASE("1D closed form") {
    const Grid g = Grid::line(10, 2.0);
    const SpectralBasis b(g, 2);
    for (int k = 0; k < 10; ++k) {
      const double s = std::sin(std::numbers::pi * k / 20.0);
      CHECK(b.eigenvalues()(k) == doctest::Approx(4.0 / (0.2 * 0.2) * s * s));
    }
  }
}

TEST_CASE("spectral transforms") {
  std::mt19937_64 gen(4);
  for (const Grid& g : {Grid::line(37, 1.0), Grid::rectangle(9, 7, 2.0, 1.0)}) {
    const SpectralBasis b(g, default_sobolev_index(g.dim));
    const Eigen::VectorXd c = to_spectral(b, Eigen::VectorXd::Constant(g.cells(), 2.5));
    CHECK(c(0) == doctest::Approx(2.5 * std::sqrt(g.domain_volume())));
    CHECK(c.tail(c.size() - 1).cwiseAbs().maxCoeff() < 1e-12);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd f = random_field(g.cells(), gen);
      const Eigen::VectorXd fh = to_spectral(b, f);
      CHECK((from_spectral(b, fh) - f).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(fh.squaredNorm() - g.cell_volume() * f.squaredNorm()) < 1e-12 * fh.squaredNorm());
    }
  }
  SUBCASE("unit interval constant") {
    const SpectralBasis b(Grid::line(16), 2);
    const Eigen::VectorXd c = to_spectral(b, Eigen::VectorXd::Constant(16, 3.0));
    CHECK(c(0) == doctest::Approx(3.0));
  }
}

TEST_CASE("connection operator and dual norm") {
  const SpectralBasis b2(Grid::line(2), 2);
  const FieldArray eta1 = row(b2.mode(1));
  CHECK((apply_LstarL(b2, eta1) - 81.0 * eta1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((apply_L(b2, eta1) - 9.0 * eta1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(dual_norm(b2, eta1) == doctest::Approx(1.0 / 9.0));

  const SpectralBasis b(Grid::line(32), 2);
  const FieldArray constant = FieldArray::Constant(1, 32, -1.75);
  // rounding in the top modes is amplified by the multiplier norm
  const double top = 1.0 + b.eigenvalues().maxCoeff();
  const double unit = 64.0 * std::numeric_limits<double>::epsilon() * 1.75;
  CHECK((apply_L(b, constant) - constant).cwiseAbs().maxCoeff() < unit * top);
  CHECK((apply_LstarL(b, constant) - constant).cwiseAbs().maxCoeff() < unit * top * top);
  CHECK(dual_norm(b, constant) == doctest::Approx(1.75));

  std::mt19937_64 gen(6);
  const SpectralBasis b3(Grid::line(32), 3);
  for (int trial = 0; trial < 20; ++trial) {
    const FieldArray f = row(random_field(32, gen));
    const FieldArray g = row(random_field(32, gen));
    const double lhs = b.inner(apply_L(b, f).row(0).transpose(), g.row(0).transpose());
    const double rhs = b.inner(f.row(0).transpose(), apply_L(b, g).row(0).transpose());
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    CHECK(dual_norm(b, f) <= l2_norm(b.grid(), f) + 1e-15);
    CHECK(dual_norm(b3, f) < dual_norm(b, f));
    const FieldArray two = (FieldArray(2, 32) << f, g).finished();
    CHECK(dual_norm(b, two) == doctest::Approx(std::hypot(dual_norm(b, f), dual_norm(b, g))));
  }
  SUBCASE("dense operator agrees with the multiplier") {
    const Eigen::VectorXd mult = b.sobolev_weights(2.0);
    const Eigen::MatrixXd dense = b.dense_operator(mult);
    const FieldArray f = row(random_field(32, gen));
    CHECK((dense * f.row(0).transpose() - apply_LstarL(b, f).row(0).transpose()).cwiseAbs().maxCoeff() <
          1e-9 * apply_LstarL(b, f).cwiseAbs().maxCoeff());
  }
}

TEST_CASE("spatial operators") {
  const auto heat = SKTParameters::make(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1));
  const Grid g = Grid::line(64);

  SUBCASE("constants are annihilated") {
    const auto p = SKTParameters::make(Eigen::Vector2d(0.1, 0.2), (Eigen::Matrix2d() << 1, 2, 1, 1).finished());
    const GridField w(FieldKind::EntropyVariable, FieldArray::Constant(2, 64, 0.3));
    CHECK(divergence_mobility(p, g, w).values.cwiseAbs().maxCoeff() < 1e-12);
    const GridField u(FieldKind::Density, FieldArray::Constant(2, 64, 1.3));
    CHECK(laplacian_form_rhs(p, g, u).values.cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("small-amplitude heat linearization") {
    const double delta = 1e-6;
    FieldArray u(1, 64), w(1, 64);
    for (int c = 0; c < 64; ++c) {
      u(0, c) = 1.0 + delta * std::cos(std::numbers::pi * g.x(c));
      w(0, c) = std::log(u(0, c));
    }
    const Eigen::VectorXd div = divergence_mobility(heat, g, GridField(FieldKind::EntropyVariable, w)).values.row(0);
    const Eigen::VectorXd lap = neumann_laplacian(g, u.row(0).transpose());
    CHECK((div - lap).cwiseAbs().maxCoeff() <= 1e-4 * lap.cwiseAbs().maxCoeff());
  }

  SUBCASE("laplacian form reduces exactly for a = 0") {
    const auto scaled = SKTParameters::make(Eigen::VectorXd::Constant(1, 2.5), Eigen::MatrixXd::Zero(1, 1));
    std::mt19937_64 gen(8);
    FieldArray u = row((random_field(64, gen).array() * 0.1 + 1.0).matrix());
    const Eigen::VectorXd out = laplacian_form_rhs(scaled, g, GridField(FieldKind::Density, u)).values.row(0);
    CHECK((out - 2.5 * neumann_laplacian(g, u.row(0).transpose())).cwiseAbs().maxCoeff() <
          1e-12 * out.cwiseAbs().maxCoeff());
    FieldArray bad = u;
    bad(0, 3) = 0.0;
    CHECK_THROWS_AS(laplacian_form_rhs(scaled, g, GridField(FieldKind::Density, bad)), SktError);
  }

  SUBCASE("flux form conserves mass, 1D and 2D") {
    const auto p = SKTParameters::make(Eigen::Vector2d(0.1, 0.2), (Eigen::Matrix2d() << 1, 2, 1, 1).finished());
    std::mt19937_64 gen(10);
    for (const Grid& grid : {Grid::line(40), Grid::rectangle(7, 9, 1.0, 1.5)}) {
      FieldArray w(2, grid.cells());
      w.row(0) = random_field(grid.cells(), gen).transpose();
      w.row(1) = random_field(grid.cells(), gen).transpose();
      const GridField div = divergence_mobility(p, grid, GridField(FieldKind::EntropyVariable, w));
      const Eigen::VectorXd mass = species_mass(grid, div.values);
      CHECK(mass.cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, div.values.cwiseAbs().maxCoeff()));
      const FieldArray u = w.array().exp().matrix() * 0.5;
      const GridField lf = laplacian_form_rhs(p, grid, GridField(FieldKind::Density, u));
      CHECK(species_mass(grid, lf.values).cwiseAbs().maxCoeff() <
            1e-12 * std::max(1.0, lf.values.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("frozen face mobility reproduces the flux-form operator and a nonnegative form") {
    const auto p = SKTParameters::make(Eigen::Vector2d(0.1, 0.2), (Eigen::Matrix2d() << 1, 2, 1, 1).finished());
    std::mt19937_64 gen(12);
    const Grid grid = Grid::rectangle(6, 5);
    FieldArray w(2, grid.cells());
    w.row(0) = random_field(grid.cells(), gen).transpose();
    w.row(1) = random_field(grid.cells(), gen).transpose();
    const FaceMobility faces(p, grid, w);
    const FieldArray direct = divergence_mobility(p, grid, GridField(FieldKind::EntropyVariable, w)).values;
    CHECK((faces.apply(w) - direct).cwiseAbs().maxCoeff() < 1e-12 * direct.cwiseAbs().maxCoeff());
    const double q = faces.quadratic_form(w);
    CHECK(q >= 0.0);
    const double inner = -grid.cell_volume() * (w.array() * faces.apply(w).array()).sum();
    CHECK(q == doctest::Approx(inner).epsilon(1e-10));
  }
}
