#include "doctest.h"

#include <random>

#include "sktlab/error.hpp"
#include "sktlab/model.hpp"
#include "support/oracles.hpp"

using namespace sktlab;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const SktError& e) {
    return e.code();
  }
  FAIL("expected an SktError");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("reversible measure of a two-species pair") {
  const Eigen::VectorXd pi = find_reversible_measure(mat({{0, 2}, {1, 0}}));
  CHECK(pi(0) == doctest::Approx(1.0));
  CHECK(pi(1) == doctest::Approx(2.0));
}

TEST_CASE("symmetric coefficients give the uniform measure") {
  const Eigen::VectorXd pi = find_reversible_measure(mat({{1, 3, 2}, {3, 0, 5}, {2, 5, 4}}));
  CHECK((pi.array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("cyclic imbalance is rejected") {
  const Eigen::MatrixXd a = mat({{0, 1, 2}, {2, 0, 1}, {1, 2, 0}});
  CHECK_FALSE(oracle::kolmogorov_holds(a));
  CHECK(code_of([&] { find_reversible_measure(a); }) == ErrorCode::CycleInconsistent);
}

TEST_CASE("one-sided support is rejected") {
  CHECK(code_of([] { find_reversible_measure(mat({{0, 1}, {0, 0}})); }) == ErrorCode::AsymmetricSupport);
}

TEST_CASE("disconnected components are normalized independently") {
  const Eigen::MatrixXd a = mat({{0, 3, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 5}, {0, 0, 2, 0}});
  const Eigen::VectorXd pi = find_reversible_measure(a);
  CHECK(pi(0) == doctest::Approx(1.0));
  CHECK(pi(1) == doctest::Approx(3.0));
  CHECK(pi(2) == doctest::Approx(1.0));
  CHECK(pi(3) == doctest::Approx(2.5));
}

TEST_CASE("random reversible matrices: recovered measure satisfies detailed balance") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> uni(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    Eigen::VectorXd pi_true(n);
    for (int i = 0; i < n; ++i) pi_true(i) = uni(gen);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double s = uni(gen);
        a(i, j) = s / pi_true(i);
        a(j, i) = s / pi_true(j);
      }
    }
    REQUIRE(oracle::kolmogorov_holds(a, 1e-9));
    const Eigen::VectorXd pi = find_reversible_measure(a);
    const Eigen::VectorXd expected = pi_true / pi_true(0);
    CHECK(((pi - expected).array().abs() / expected.array()).maxCoeff() < 1e-12);
  }
}

TEST_CASE("parameter validation") {
  SUBCASE("detailed balance violated by an explicit measure") {
    CHECK(code_of([] { SKTParameters::make(vec({1, 1}), mat({{0, 2}, {1, 0}}), vec({1, 1})); }) ==
          ErrorCode::DetailedBalanceViolated);
  }
  SUBCASE("mode inferred from the diagonal") {
    CHECK(SKTParameters::make(vec({1, 1}), mat({{1, 2}, {1, 1}})).mode == DiffusionMode::WithSelfDiffusion);
    CHECK(SKTParameters::make(vec({1, 1}), mat({{0, 2}, {1, 0}})).mode == DiffusionMode::WithoutSelfDiffusion);
  }
  SUBCASE("partial self-diffusion is ambiguous") {
    CHECK(code_of([] { SKTParameters::make(vec({1, 1}), mat({{1, 2}, {1, 0}})); }) == ErrorCode::InvalidArgument);
  }
  SUBCASE("without self-diffusion every a_i0 must be positive") {
    CHECK(code_of([] { SKTParameters::make(vec({0, 1}), mat({{0, 2}, {1, 0}})); }) == ErrorCode::InvalidArgument);
  }
  SUBCASE("negative coefficients") {
    CHECK(code_of([] { SKTParameters::make(vec({-1}), mat({{1}})); }) == ErrorCode::InvalidArgument);
  }
  SUBCASE("accepted parameters have tiny residual") {
    const auto p = SKTParameters::make(vec({0.1, 0.2, 0.3}), mat({{1, 2, 0}, {1, 1, 3}, {0, 1, 1}}));
    CHECK(p.detailed_balance_residual() <= 1e-12);
  }
}

TEST_CASE("diffusion matrix") {
  const auto p = SKTParameters::make(vec({1, 1}), mat({{0, 1}, {1, 0}}));
  const Eigen::MatrixXd A = diffusion_matrix(p, vec({1, 2}));
  CHECK((A - mat({{3, 1}, {2, 2}})).norm() < 1e-15);

  const auto scalar = SKTParameters::make(vec({2.5}), mat({{0}}));
  CHECK(diffusion_matrix(scalar, vec({7.0}))(0, 0) == 2.5);

  const auto q = SKTParameters::make(vec({0.3, 0.7}), mat({{1, 2}, {1, 4}}));
  const Eigen::MatrixXd small = diffusion_matrix(q, vec({1e-14, 1e-14}));
  CHECK((small - Eigen::Vector2d(0.3, 0.7).asDiagonal().toDenseMatrix()).norm() < 1e-12);
}

TEST_CASE("entropy density") {
  const auto p = SKTParameters::make(vec({1, 1}), mat({{0, 1}, {1, 0}}));
  CHECK(entropy_density(p, vec({1, 1})) == 0.0);
  CHECK(entropy_density(p, vec({std::exp(1.0), 1})) == doctest::Approx(1.0).epsilon(1e-15));
  const auto single = SKTParameters::make(vec({1}), mat({{0}}), vec({2}));
  CHECK(entropy_density(single, vec({0.0})) == 2.0);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> uni(0.01, 20.0), lam(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Eigen::VectorXd u = vec({uni(gen), uni(gen)});
    const Eigen::VectorXd v = vec({uni(gen), uni(gen)});
    const double l = lam(gen);
    CHECK(entropy_density(p, l * u + (1 - l) * v) <=
          l * entropy_density(p, u) + (1 - l) * entropy_density(p, v) + 1e-12);
  }
}

TEST_CASE("entropy variable and its inverse") {
  const auto p = SKTParameters::make(vec({1}), mat({{0}}), vec({2}));
  CHECK(entropy_variable(p, vec({std::exp(1.0)}))(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(inverse_entropy_variable(p, vec({0.0}))(0) == 1.0);
  CHECK(code_of([&] { entropy_variable(p, vec({0.0})); }) == ErrorCode::NonPositiveDensity);

  const auto q = SKTParameters::make(vec({1, 1, 1}), mat({{1, 2, 0}, {1, 1, 3}, {0, 1, 1}}));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd w = q.pi.cwiseProduct(vec({uni(gen), uni(gen), uni(gen)}));
    const Eigen::VectorXd back = entropy_variable(q, inverse_entropy_variable(q, w));
    CHECK((back - w).cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, w.cwiseAbs().maxCoeff()));
    const Eigen::VectorXd u = inverse_entropy_variable(q, w);
    const Eigen::VectorXd u2 = inverse_entropy_variable(q, entropy_variable(q, u));
    CHECK(((u2 - u).array() / u.array()).abs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("mobility matrix") {
  const auto p = SKTParameters::make(vec({1, 1}), mat({{0, 1}, {1, 0}}), vec({1, 1}));
  const Eigen::MatrixXd B = mobility_matrix(p, vec({0.0, std::log(2.0)}));
  CHECK((B - mat({{3, 2}, {2, 4}})).norm() < 1e-14);

  const auto heat = SKTParameters::make(vec({1}), mat({{0}}));
  CHECK(mobility_matrix(heat, vec({std::log(3.0)}))(0, 0) == doctest::Approx(3.0));

  const auto sym = SKTParameters::make(vec({1, 2, 3}), mat({{1, 2, 3}, {2, 1, 4}, {3, 4, 1}}));
  const Eigen::MatrixXd Bs = mobility_matrix(sym, Eigen::VectorXd::Zero(3));
  CHECK((Bs - Bs.transpose()).norm() < 1e-14);

  SUBCASE("Onsager identity: grad w . B grad w = grad u . h'' A grad u") {
    const auto q = SKTParameters::make(vec({0.5, 0.1, 0.2}), mat({{1, 2, 0}, {1, 1, 3}, {0, 1, 1}}));
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd w = vec({uni(gen), uni(gen), uni(gen)});
      const Eigen::VectorXd u = inverse_entropy_variable(q, w);
      const Eigen::VectorXd zp = vec({uni(gen), uni(gen), uni(gen)});
      const Eigen::VectorXd z = (q.pi.array() / u.array() * zp.array()).matrix();
      const double lhs = z.dot(mobility_matrix(q, w) * z);
      const double rhs = entropy_quadratic_form(q, u, zp);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("dissipation lower bound") {
  const auto heat = SKTParameters::make(vec({1}), mat({{0}}));
  CHECK(dissipation_lower_bound(heat, vec({2.0}), vec({3.0})) == doctest::Approx(4.5));
  CHECK(entropy_quadratic_form(heat, vec({2.0}), vec({3.0})) == doctest::Approx(4.5));

  // a0 = 0 is rejected by validation but the algebra is still defined
  SKTParameters raw;
  raw.n = 2;
  raw.a0 = vec({0, 0});
  raw.a = mat({{0, 1}, {1, 0}});
  raw.pi = vec({1, 1});
  raw.mode = DiffusionMode::WithoutSelfDiffusion;
  CHECK(std::abs(dissipation_lower_bound(raw, vec({1, 1}), vec({1, -1}))) < 1e-15);
  CHECK(std::abs(entropy_quadratic_form(raw, vec({1, 1}), vec({1, -1}))) < 1e-15);
  CHECK(dissipation_lower_bound(heat, vec({1.0}), vec({0.0})) == 0.0);

  SUBCASE("random parameters: quadratic form dominates the bound, bound nonnegative") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> logu(std::log(0.01), std::log(100.0));
    std::normal_distribution<double> normal;
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + trial % 4;
      Eigen::VectorXd pi(n), a0(n);
      Eigen::MatrixXd a(n, n);
      for (int i = 0; i < n; ++i) {
        pi(i) = 0.2 + 2.0 * uni(gen);
        a0(i) = uni(gen);
      }
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double s = uni(gen) < 0.3 ? 0.0 : 2.0 * uni(gen);
          a(i, j) = s / pi(i);
          a(j, i) = s / pi(j);
        }
      }
      SKTParameters p;
      p.n = n;
      p.a0 = a0;
      p.a = a;
      p.pi = pi;
      Eigen::VectorXd u(n), z(n);
      for (int i = 0; i < n; ++i) {
        u(i) = std::exp(logu(gen));
        z(i) = normal(gen);
      }
      const double bound = dissipation_lower_bound(p, u, z);
      const double q = entropy_quadratic_form(p, u, z);
      CHECK(q >= bound - 1e-12 * (1.0 + std::abs(bound)));
      CHECK(bound >= 0.0);
      ++checked;
    }
    CHECK(checked == 1000);
  }
}
