#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "sktlab/error.hpp"
#include "sktlab/estimators.hpp"
#include "support/oracles.hpp"

using namespace sktlab;

namespace {

PathRecord sampled_path(int samples, double T,
                        const std::function<FieldArray(double)>& field) {
  PathRecord rec;
  for (int s = 0; s < samples; ++s) {
    Snapshot snap;
    snap.t = T * s / (samples - 1);
    snap.step = static_cast<std::size_t>(s);
    snap.u = field(snap.t);
    rec.snapshots.push_back(snap);
  }
  return rec;
}

FieldArray heat_field(int n, double t) {
  FieldArray u(1, n);
  u.row(0) = oracle::heat_mode(n, 0.5, t).transpose();
  return u;
}

}  // namespace

TEST_CASE("NormSpec validation") {
  NormSpec spec;
  spec.time_exponent = 0.5;
  CHECK_THROWS_AS(spec.validate(), SktError);
  spec = {};
  spec.space = SpaceNorm::Lq;
  spec.q = 0.5;
  CHECK_THROWS_AS(spec.validate(), SktError);
  spec = {};
  spec.transform = Transform::pair_sqrt(1, 1);
  CHECK_THROWS_AS(spec.validate(), SktError);
}

TEST_CASE("gradient magnitude") {
  const Grid g = Grid::line(10);
  Eigen::VectorXd f(10);
  for (int c = 0; c < 10; ++c) f(c) = 3.0 * g.x(c);
  const Eigen::VectorXd grad = gradient_magnitude(g, f);
  for (int c = 1; c < 9; ++c) CHECK(grad(c) == doctest::Approx(3.0));
  CHECK(grad(0) == doctest::Approx(1.5));  // mirrored ghost halves the wall difference
  CHECK(grad(9) == doctest::Approx(1.5));
  const Grid g2 = Grid::rectangle(6, 6);
  Eigen::VectorXd h(36);
  for (int iy = 0; iy < 6; ++iy) {
    for (int ix = 0; ix < 6; ++ix) h(g2.index(ix, iy)) = 3.0 * g2.x(ix) + 4.0 * g2.y(iy);
  }
  CHECK(gradient_magnitude(g2, h)(g2.index(2, 3)) == doctest::Approx(5.0));
}

TEST_CASE("rectangle weights") {
  const auto w = rectangle_weights({0.0, 0.1, 0.3, 0.6});
  REQUIRE(w.size() == 4);
  CHECK(w[0] == doctest::Approx(0.1));
  CHECK(w[1] == doctest::Approx(0.2));
  CHECK(w[2] == doctest::Approx(0.3));
  CHECK(w[3] == 0.0);
  CHECK_THROWS_AS(rectangle_weights({0.0, 0.0}), SktError);
}

TEST_CASE("mixed norms of constant paths") {
  const Grid g = Grid::line(16, 2.0);
  const SpectralBasis b(g, 2);
  const double c = 1.7;
  const PathRecord path = sampled_path(11, 1.0, [&](double) { return FieldArray::Constant(2, 16, c); });
  NormSpec linf_l1;
  linf_l1.time_exponent = NormSpec::infinity;
  linf_l1.space = SpaceNorm::L1;
  CHECK(mixed_norm(path, b, linf_l1, 0) == doctest::Approx(c * 2.0));
  CHECK(mixed_norm(path, b, linf_l1) == doctest::Approx(2.0 * c * 2.0));

  NormSpec grad_sqrt;
  grad_sqrt.space = SpaceNorm::GradL2;
  grad_sqrt.transform = Transform::sqrt();
  CHECK(mixed_norm(path, b, grad_sqrt, 1) == 0.0);
  grad_sqrt.transform = Transform::pair_sqrt(0, 1);
  CHECK(mixed_norm(path, b, grad_sqrt) == 0.0);

  NormSpec l2l2;
  CHECK(mixed_norm(path, b, l2l2, 0) == doctest::Approx(c * std::sqrt(2.0)));
  CHECK_THROWS_AS(mixed_norm(PathRecord{}, b, l2l2), SktError);
}

TEST_CASE("H1 norm of the heat mode against its closed form") {
  const int n = 128;
  const double T = 0.1;  // 101 samples, spacing 1e-3
  const Grid g = Grid::line(n);
  const SpectralBasis b(g, 2);
  const PathRecord path = sampled_path(101, T, [&](double t) { return heat_field(n, t); });
  NormSpec spec;
  spec.space = SpaceNorm::H1;
  const double measured = std::pow(mixed_norm(path, b, spec, 0), 2);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double exact = T + 0.125 * (1.0 + pi2) * (1.0 - std::exp(-2.0 * pi2 * T)) / (2.0 * pi2);
  CHECK(std::abs(measured - exact) <= 0.02 * exact);
}

TEST_CASE("norms are absolutely homogeneous") {
  const Grid g = Grid::line(24);
  const SpectralBasis b(g, 2);
  std::mt19937_64 gen(3);
  std::vector<FieldArray> fields;
  std::vector<double> times;
  for (int s = 0; s < 8; ++s) {
    FieldArray f(2, 24);
    f.row(0) = (oracle::smooth_field_1d(24, gen, 0.3).array() + 1.5).matrix().transpose();
    f.row(1) = (oracle::smooth_field_1d(24, gen, 0.3).array() + 1.5).matrix().transpose();
    fields.push_back(f);
    times.push_back(0.1 * s);
  }
  const double c = 2.5;
  std::vector<FieldArray> scaled;
  for (const auto& f : fields) scaled.push_back(c * f);
  for (SpaceNorm space : {SpaceNorm::L1, SpaceNorm::L2, SpaceNorm::Lq, SpaceNorm::H1, SpaceNorm::GradL2,
                          SpaceNorm::W11, SpaceNorm::GradL1, SpaceNorm::Dual}) {
    for (double pt : {1.0, 3.0, NormSpec::infinity}) {
      NormSpec spec;
      spec.space = space;
      spec.q = 3.0;
      spec.time_exponent = pt;
      CHECK(mixed_norm(times, scaled, b, spec) == doctest::Approx(c * mixed_norm(times, fields, b, spec)).epsilon(1e-12));
      spec.transform = Transform::sqrt();
      CHECK(mixed_norm(times, scaled, b, spec) ==
            doctest::Approx(std::sqrt(c) * mixed_norm(times, fields, b, spec)).epsilon(1e-12));
      spec.transform = Transform::pair_sqrt(0, 1);
      CHECK(mixed_norm(times, scaled, b, spec) == doctest::Approx(c * mixed_norm(times, fields, b, spec)).epsilon(1e-12));
    }
  }
  NormSpec dual;
  dual.space = SpaceNorm::Dual;
  NormSpec l2;
  for (const auto& f : fields) CHECK(space_norm(b, f, dual) <= space_norm(b, f, l2) + 1e-15);
}

TEST_CASE("Slobodeckij seminorm") {
  std::vector<double> times(513), values(513);
  for (int s = 0; s <= 512; ++s) times[s] = values[s] = s / 512.0;
  const SlobodeckijResult r = slobodeckij_seminorm(times, values, 0.25, 2.0);
  CHECK(std::abs(r.seminorm_pow - 8.0 / 15.0) <= 0.02 * 8.0 / 15.0);
  CHECK(r.lp_part == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  CHECK(r.full == doctest::Approx(std::sqrt(r.lp_part + r.seminorm_pow)));

  const std::vector<double> flat(513, 4.0);
  CHECK(slobodeckij_seminorm(times, flat, 0.25, 2.0).seminorm_pow == 0.0);

  double prev = 0.0;
  for (double alpha : {0.1, 0.2, 0.3, 0.45, 0.6, 0.8}) {
    const double s = slobodeckij_seminorm(times, values, alpha, 2.0).seminorm_pow;
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(slobodeckij_seminorm(times, values, 0.25, 4.0, 2).in_compactness_regime);
  CHECK_FALSE(slobodeckij_seminorm(times, values, 0.6, 4.0, 2).in_compactness_regime);
  CHECK_FALSE(slobodeckij_seminorm(times, values, 0.25, 2.0, 1).in_compactness_regime);
  CHECK_THROWS_AS(slobodeckij_seminorm({0.0}, {1.0}, 0.25, 2.0), SktError);
  CHECK_THROWS_AS(slobodeckij_seminorm(times, values, 1.0, 2.0), SktError);

  SUBCASE("field paths: constant gives zero, dual below L2") {
    const Grid g = Grid::line(16);
    const SpectralBasis b(g, 2);
    const PathRecord flat_path = sampled_path(9, 1.0, [](double) { return FieldArray::Constant(1, 16, 2.0); });
    CHECK(slobodeckij_seminorm(flat_path, b, 0.25, 2.0, SpaceNorm::Dual).seminorm_pow == 0.0);
    const PathRecord heat = sampled_path(9, 0.1, [](double t) { return heat_field(16, t); });
    const double dual = slobodeckij_seminorm(heat, b, 0.25, 2.0, SpaceNorm::Dual).seminorm_pow;
    const double l2 = slobodeckij_seminorm(heat, b, 0.25, 2.0, SpaceNorm::L2).seminorm_pow;
    CHECK(dual > 0.0);
    CHECK(dual <= l2);
    CHECK_THROWS_AS(slobodeckij_seminorm(heat, b, 0.25, 2.0, SpaceNorm::H1), SktError);
  }
}

TEST_CASE("ensemble moments") {
  const MomentResult one = ensemble_moment({3.0}, 2.0);
  CHECK(one.mean == 9.0);
  CHECK_FALSE(one.stderr_value.has_value());
  const MomentResult same = ensemble_moment({2.0, 2.0, 2.0}, 3.0);
  CHECK(same.mean == 8.0);
  CHECK(*same.stderr_value == 0.0);
  const std::vector<double> x{1.0, 2.0, 3.5, 0.5};
  std::vector<double> cx;
  for (double v : x) cx.push_back(3.0 * v);
  CHECK(ensemble_moment(cx, 2.0).mean == doctest::Approx(9.0 * ensemble_moment(x, 2.0).mean).epsilon(1e-15));
  CHECK_THROWS_AS(ensemble_moment(std::vector<double>{}, 2.0), SktError);
  CHECK_THROWS_AS(ensemble_moment(x, 0.5), SktError);
}

TEST_CASE("epsilon study") {
  SimConfig c;
  c.params = SKTParameters::make(Eigen::Vector2d(0.1, 0.1), (Eigen::Matrix2d() << 0.5, 2, 1, 0.5).finished());
  c.grid = Grid::line(16);
  c.dt = 1e-3;
  c.T = 1e-2;
  c.noise.family = noise_family::BoundedRatio{0.5};
  c.finalize();
  SUBCASE("repeated epsilon gives zero difference") {
    SimConfig det = c;
    det.noise.family = noise_family::Zero{};
    det.finalize();
    const auto rows = epsilon_consistency_study(det, {1e-2, 1e-2}, 3);
    REQUIRE(rows.size() == 2);
    CHECK(*rows[0].l2_difference == 0.0);
    CHECK_FALSE(rows[1].l2_difference.has_value());
  }
  SUBCASE("residue bound") {
    const auto rows = epsilon_consistency_study(c, {1e-1, 1e-2}, 3);
    for (const EpsilonRow& r : rows) {
      CHECK(r.regularization_residue <= std::sqrt(2.0 * r.epsilon * r.sup_entropy) + 1e-9);
      CHECK(r.total_newton_iterations > 0);
    }
  }
  CHECK_THROWS_AS(epsilon_consistency_study(c, {1e-3, 1e-2}, 0), SktError);
  CHECK_THROWS_AS(epsilon_consistency_study(c, {}, 0), SktError);
}

TEST_CASE("Gagliardo-Nirenberg ratio is stable under refinement") {
  std::vector<double> ratios;
  for (int n : {32, 64, 128}) {
    const Grid g = Grid::line(n);
    const SpectralBasis b(g, 2);
    const PathRecord path = sampled_path(51, 0.1, [&](double t) { return heat_field(n, t); });
    ratios.push_back(gagliardo_nirenberg_ratio(path, b, 0));
  }
  MESSAGE("ratios " << ratios[0] << " " << ratios[1] << " " << ratios[2]);
  CHECK(std::abs(ratios[2] - ratios[1]) <= 0.05 * ratios[2]);
  CHECK(std::abs(ratios[2] - ratios[1]) <= std::abs(ratios[1] - ratios[0]) + 1e-12);
}
