#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "sktlab/regularization.hpp"
#include "sktlab/simulator.hpp"
#include "sktlab/spectral.hpp"

using namespace sktlab;

namespace {

SKTParameters pair_params() {
  return SKTParameters::make(Eigen::Vector2d(0.1, 0.1), (Eigen::Matrix2d() << 0.5, 2, 1, 0.5).finished());
}

FieldArray wavy(int cells) {
  FieldArray w(2, cells);
  for (int c = 0; c < cells; ++c) {
    w(0, c) = 0.4 * std::cos(0.3 * c);
    w(1, c) = -0.3 * std::sin(0.17 * c);
  }
  return w;
}

void BM_SpectralRoundTrip(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SpectralBasis basis(Grid::line(n), 2);
  const Eigen::VectorXd f = wavy(n).row(0).transpose();
  for (auto _ : state) {
    Eigen::VectorXd back = basis.from_spectral(basis.to_spectral(f));
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(BM_SpectralRoundTrip)->Arg(64)->Arg(256)->Arg(1024);

void BM_SolveREps(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  NewtonSettings settings;
  settings.dense_limit = state.range(1);
  auto basis = std::make_shared<const SpectralBasis>(Grid::line(n), 2);
  const RegularizationOperator op(basis, pair_params(), 1e-3, settings);
  const GridField v = op.apply_Q_eps(GridField(FieldKind::EntropyVariable, wavy(n)));
  for (auto _ : state) {
    RegularizedSolve s = op.solve_R_eps(v);
    benchmark::DoNotOptimize(s.w.values.data());
  }
}
// second argument: dense limit (0 forces preconditioned CG)
BENCHMARK(BM_SolveREps)->Args({64, 4096})->Args({64, 0})->Args({256, 4096})->Args({256, 0});

void BM_EntropyVariableStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SimConfig c;
  c.params = pair_params();
  c.grid = Grid::line(n);
  c.T = 1e-3;
  c.dt = 1e-3;
  c.initial.constant = Eigen::Vector2d(1.0, 1.0);
  c.initial.amplitude = Eigen::Vector2d(0.5, -0.4);
  c.newton.dense_limit = state.range(1);
  c.finalize();
  const FieldArray u0 = c.initial_density();
  EntropyState s;
  s.w = FieldArray(2, n);
  for (int i = 0; i < 2; ++i) s.w.row(i) = c.params.pi(i) * u0.row(i).array().log();
  s.v = c.regularization->apply_Q_eps(GridField(FieldKind::EntropyVariable, s.w)).values;
  const Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(2, c.noise_model->modes());
  for (auto _ : state) {
    EntropyState next = step_entropy_variable(c, s, dw);
    benchmark::DoNotOptimize(next.v.data());
  }
}
BENCHMARK(BM_EntropyVariableStep)->Args({64, 4096})->Args({256, 4096})->Args({256, 0});

}  // namespace

BENCHMARK_MAIN();
