#include "sktlab/simulator.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "sktlab/error.hpp"
#include "sktlab/linear_solve.hpp"
#include "sktlab/rng.hpp"

namespace sktlab {

namespace {

// forcing term of the inexact Newton iterations
constexpr double kLinearTol = 1e-10;
constexpr double kLaplacianResidualTol = 1e-11;
constexpr double kClipThreshold = 1e-12;
constexpr double kFaceTol = 1e-12;
constexpr int kMaxPolishSteps = 3;

void require_finalized(const SimConfig& config) {
  require(config.finalized(), ErrorCode::InvalidArgument, "simulation config was not finalized");
}

Eigen::Map<const FieldArray> as_field(const Eigen::VectorXd& x, Eigen::Index rows, Eigen::Index cols) {
  return {x.data(), rows, cols};
}

Eigen::VectorXd flatten(const FieldArray& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

/// Dense matrix of the frozen flux operator D on the species-major unknown
/// vector (index i * N + c).
Eigen::MatrixXd dense_flux_operator(const FaceMobility& mob, int n, Eigen::Index cells) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n * cells, n * cells);
  for (std::size_t k = 0; k < mob.faces().size(); ++k) {
    const Face& f = mob.faces()[k];
    const Eigen::MatrixXd b = mob.mobility(k) / (f.spacing * f.spacing);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double c = b(i, j);
        if (c == 0.0) continue;
        const Eigen::Index il = i * cells + f.left, ir = i * cells + f.right;
        const Eigen::Index jl = j * cells + f.left, jr = j * cells + f.right;
        d(il, jr) += c;
        d(il, jl) -= c;
        d(ir, jl) += c;
        d(ir, jr) -= c;
      }
    }
  }
  return d;
}

void check_faces(const SKTParameters& params, const FaceMobility& mob, const FieldArray& w,
                 double cell_volume, StepInfo& info) {
  for (std::size_t k = 0; k < mob.faces().size(); ++k) {
    const Face& f = mob.faces()[k];
    const Eigen::VectorXd z = (w.col(f.right) - w.col(f.left)) / f.spacing;
    const double q = z.dot(mob.mobility(k) * z);
    // grad u = h''(u)^{-1} grad w at the face state
    const Eigen::VectorXd& u = mob.density(k);
    const Eigen::VectorXd zu = u.cwiseQuotient(params.pi).cwiseProduct(z);
    const double bound = dissipation_lower_bound(params, u, zu);
    const double slack = kFaceTol * (1.0 + std::abs(bound));
    if (q < bound - slack || bound < -slack) ++info.face_violations;
    info.face_bound_sum += cell_volume * bound;
    ++info.faces_checked;
  }
}

double laplacian_form_dissipation(const SKTParameters& params, const Grid& grid, const FieldArray& u) {
  double total = 0.0;
  for (const Face& f : interior_faces(grid)) {
    const Eigen::VectorXd mean = 0.5 * (u.col(f.left) + u.col(f.right));
    if ((mean.array() <= 0.0).any()) continue;
    const Eigen::VectorXd z = (u.col(f.right) - u.col(f.left)) / f.spacing;
    total += entropy_quadratic_form(params, mean, z);
  }
  return total * grid.cell_volume();
}

double plain_entropy(const SKTParameters& params, const Grid& grid, const FieldArray& u) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < u.cols(); ++c) total += entropy_density(params, u.col(c));
  return total * grid.cell_volume();
}

Eigen::VectorXd species_l2(const Grid& grid, const FieldArray& u) {
  return (u.array().square().rowwise().sum() * grid.cell_volume()).sqrt().matrix();
}

FieldArray density_of(const SKTParameters& params, const FieldArray& w) {
  FieldArray u(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) u.row(i) = (w.row(i).array() / params.pi(i)).exp();
  return u;
}

Eigen::SparseMatrix<double> sparse_laplacian(const Grid& grid) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (const Face& f : interior_faces(grid)) {
    const double c = 1.0 / (f.spacing * f.spacing);
    triplets.emplace_back(f.left, f.right, c);
    triplets.emplace_back(f.right, f.left, c);
    triplets.emplace_back(f.left, f.left, -c);
    triplets.emplace_back(f.right, f.right, -c);
  }
  Eigen::SparseMatrix<double> lap(grid.cells(), grid.cells());
  lap.setFromTriplets(triplets.begin(), triplets.end());
  return lap;
}

void append_record(PathRecord& rec, const Grid& grid, double t, double entropy, double dissipation,
                   const FieldArray& u, const Eigen::VectorXd& dual_mass, int newton) {
  rec.times.push_back(t);
  rec.entropy.push_back(entropy);
  rec.dissipation.push_back(dissipation);
  rec.mass.push_back(species_mass(grid, u));
  rec.dual_mass.push_back(dual_mass);
  rec.min_u.push_back(u.minCoeff());
  rec.max_u.push_back(u.maxCoeff());
  rec.l2.push_back(species_l2(grid, u));
  rec.newton_iterations.push_back(newton);
}

}  // namespace

std::string to_string(Scheme scheme) {
  return scheme == Scheme::EntropyVariable ? "entropy_variable" : "laplacian_form";
}

std::size_t SimConfig::steps() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "dt must be positive");
  require(std::isfinite(T) && T >= dt * (1.0 - 1e-12), ErrorCode::InvalidArgument,
          "final time T must be at least dt");
  const double ratio = T / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * rounded) {
    std::ostringstream os;
    os << "T = " << T << " is not an integer multiple of dt = " << dt;
    fail(ErrorCode::InvalidArgument, os.str());
  }
  return static_cast<std::size_t>(rounded);
}

void SimConfig::finalize() {
  params.validate();
  grid.validate();
  newton.validate();
  const std::size_t total_steps = steps();
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::InvalidArgument, "epsilon must be positive");

  if (scheme == Scheme::LaplacianForm) {
    require(params.mode == DiffusionMode::WithoutSelfDiffusion, ErrorCode::InvalidArgument,
            "the Laplacian-form scheme requires parameters without self-diffusion");
  } else if (params.mode == DiffusionMode::WithoutSelfDiffusion) {
    require((params.a0.array() > 0.0).all(), ErrorCode::InvalidArgument,
            "the entropy-variable scheme without self-diffusion needs every a_i0 > 0");
  }

  const int minimal = default_sobolev_index(grid.dim);
  if (sobolev_index == 0) sobolev_index = minimal;
  if (sobolev_index < minimal) {
    std::ostringstream os;
    os << "Sobolev index m = " << sobolev_index << " must exceed d/2 + 1 (smallest admissible: "
       << minimal << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }

  if (initial.field) {
    require(initial.field->rows() == params.n && initial.field->cols() == grid.cells(),
            ErrorCode::SizeMismatch, "initial field shape does not match species and grid");
    require(initial.field->allFinite(), ErrorCode::NonFinite, "initial field has non-finite entries");
    require((initial.field->array() > 0.0).all(), ErrorCode::NonPositiveDensity,
            "initial densities must be strictly positive");
  } else {
    if (initial.constant.size() == 0) initial.constant = Eigen::VectorXd::Ones(params.n);
    if (initial.amplitude.size() == 0) initial.amplitude = Eigen::VectorXd::Constant(params.n, 0.5);
    require(initial.constant.size() == params.n && initial.amplitude.size() == params.n,
            ErrorCode::SizeMismatch, "initial constant and amplitude need one entry per species");
    for (int i = 0; i < params.n; ++i) {
      require(std::isfinite(initial.constant(i)) && std::isfinite(initial.amplitude(i)),
              ErrorCode::NonFinite, "initial condition has non-finite entries");
      require(initial.constant(i) > std::abs(initial.amplitude(i)), ErrorCode::NonPositiveDensity,
              "initial constant must exceed the cosine amplitude in absolute value");
    }
  }
  if (save_every == 0) save_every = std::max<std::size_t>(1, total_steps / 100);

  basis = std::make_shared<const SpectralBasis>(grid, sobolev_index);
  regularization = std::make_shared<const RegularizationOperator>(basis, params, epsilon, newton);
  noise_model = std::make_shared<const NoiseModel>(basis, noise.family, noise.rho, noise.modes);
}

FieldArray SimConfig::initial_density() const {
  if (initial.field) return *initial.field;
  FieldArray u(params.n, grid.cells());
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double py = grid.dim == 2 ? std::cos(std::numbers::pi * grid.y(iy) / grid.ly) : 1.0;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double profile = std::cos(std::numbers::pi * grid.x(ix) / grid.lx) * py;
      for (int i = 0; i < params.n; ++i) {
        u(i, grid.index(ix, iy)) = initial.constant(i) + initial.amplitude(i) * profile;
      }
    }
  }
  return u;
}

Eigen::MatrixXd step_increments(const SimConfig& config, std::uint64_t seed, std::uint32_t path_index,
                                std::size_t step) {
  require_finalized(config);
  const NoiseModel& noise = *config.noise_model;
  if (noise.is_zero()) return Eigen::MatrixXd::Zero(config.params.n, noise.modes());
  CounterRng rng(seed, path_index, static_cast<std::uint32_t>(step));
  return sample_wiener_increments(rng, config.params.n, noise.modes(), config.dt);
}

EntropyState step_entropy_variable(const SimConfig& config, const EntropyState& state,
                                   const Eigen::MatrixXd& dw, StepInfo* info) {
  require_finalized(config);
  const SKTParameters& params = config.params;
  const RegularizationOperator& reg = *config.regularization;
  const SpectralBasis& basis = *config.basis;
  const int n = params.n;
  const Eigen::Index cells = basis.size();
  require(state.v.rows() == n && state.v.cols() == cells && state.w.rows() == n &&
              state.w.cols() == cells,
          ErrorCode::SizeMismatch, "state shape does not match config");
  const double dt = config.dt;

  const FaceMobility mob(params, config.grid, state.w);
  FieldArray rhs = state.v;
  if (!config.noise_model->is_zero()) {
    rhs += config.noise_model->increment(density_of(params, state.w), dw).values;
  }

  const auto residual_of = [&](const FieldArray& w, FieldArray& g) {
    g = density_of(params, w) + reg.apply_regularizer(w) - dt * mob.apply(w) - rhs;
    return g.allFinite() ? reg.dual_norm(g) : std::numeric_limits<double>::infinity();
  };

  const VectorNorm dual = [&](const Eigen::VectorXd& r) { return reg.dual_norm(as_field(r, n, cells)); };
  const Eigen::Index unknowns = n * cells;
  const bool dense = unknowns <= config.newton.dense_limit && reg.dense_regularizer() != nullptr;
  Eigen::MatrixXd base;
  if (dense) {
    base = -dt * dense_flux_operator(mob, n, cells);
    for (int i = 0; i < n; ++i) base.block(i * cells, i * cells, cells, cells) += *reg.dense_regularizer();
  }
  const Eigen::VectorXd mean_mobility = mob.mean_diagonal();
  const auto linear_solve = [&](const FieldArray& u_prime, const FieldArray& g) -> FieldArray {
    const Eigen::VectorXd diag = flatten(u_prime);
    const Eigen::VectorXd b = -flatten(g);
    Eigen::VectorXd x;
    if (dense) {
      Eigen::MatrixXd jac = base;
      jac.diagonal() += diag;
      x = dense_spd_solve(jac, b, kLinearTol, dual);
    } else {
      const auto apply = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        const auto yf = as_field(y, n, cells);
        FieldArray out = u_prime.cwiseProduct(FieldArray(yf)) + reg.apply_regularizer(yf) - dt * mob.apply(yf);
        return flatten(out);
      };
      std::vector<Eigen::VectorXd> inverse(n);
      for (int i = 0; i < n; ++i) {
        inverse[i] = (u_prime.row(i).mean() + reg.regularizer_spectrum().array() +
                      dt * mean_mobility(i) * basis.eigenvalues().array())
                         .inverse()
                         .matrix();
      }
      const auto precondition = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
        Eigen::VectorXd z(r.size());
        for (int i = 0; i < n; ++i) {
          z.segment(i * cells, cells) = basis.apply_multiplier(r.segment(i * cells, cells), inverse[i]);
        }
        return z;
      };
      const IterativeResult res = preconditioned_cg(apply, precondition, b, Eigen::VectorXd::Zero(b.size()),
                                                    kLinearTol, static_cast<int>(10 * b.size() + 100), dual);
      require(res.converged, ErrorCode::LinearSolveFailed,
              "CG stopped at relative residual " + format_residual(res.relative_residual));
      x = res.x;
    }
    FieldArray out(n, cells);
    Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) = x;
    return out;
  };

  const double target = config.newton.tol * (1.0 + reg.dual_norm(rhs));
  FieldArray w = state.w;
  FieldArray g;
  double merit = residual_of(w, g);
  bool converged = merit <= target;
  int polish = 0;
  int iterations = 0;
  for (int it = 0; it < config.newton.max_iter; ++it) {
    if (converged && polish >= kMaxPolishSteps) break;
    FieldArray u_prime = density_of(params, w);
    for (int i = 0; i < n; ++i) u_prime.row(i) /= params.pi(i);
    FieldArray step;
    try {
      step = linear_solve(u_prime, g);
    } catch (const SktError&) {
      if (converged) break;
      throw;
    }
    double t = 1.0;
    FieldArray trial = w + step;
    FieldArray g_trial;
    double trial_merit = residual_of(trial, g_trial);
    int halvings = 0;
    while (!(trial_merit < merit) && halvings < config.newton.max_halvings) {
      t *= 0.5;
      trial = w + t * step;
      trial_merit = residual_of(trial, g_trial);
      ++halvings;
    }
    if (!(trial_merit < merit)) {
      if (converged) break;
      std::ostringstream os;
      os << "line search failed at residual " << merit << "; reduce dt";
      fail(ErrorCode::NewtonDiverged, os.str());
    }
    ++iterations;
    const double previous = merit;
    w = std::move(trial);
    g = std::move(g_trial);
    merit = trial_merit;
    if (converged) {
      ++polish;
      if (merit > 0.25 * previous) break;
    }
    if (!converged && merit <= target) converged = true;
  }
  if (!converged) {
    std::ostringstream os;
    os << "no convergence after " << config.newton.max_iter << " iterations, residual " << merit
       << "; reduce dt";
    fail(ErrorCode::NewtonDiverged, os.str());
  }

  EntropyState next;
  next.v = rhs + dt * mob.apply(w);
  next.w = std::move(w);
  if (info) {
    info->newton_iterations = iterations;
    info->residual = merit;
    info->dissipation = mob.quadratic_form(next.w);
    if (config.check_faces) check_faces(params, mob, next.w, config.grid.cell_volume(), *info);
  }
  return next;
}

FieldArray step_laplacian_form(const SimConfig& config, const FieldArray& u, const Eigen::MatrixXd& dw,
                               StepInfo* info) {
  require_finalized(config);
  const SKTParameters& params = config.params;
  const Grid& grid = config.grid;
  require(u.rows() == params.n && u.cols() == grid.cells(), ErrorCode::SizeMismatch,
          "state shape does not match config");
  require((u.array() >= 0.0).all(), ErrorCode::NonPositiveDensity,
          "Laplacian-form state has negative densities");

  FieldArray rhs = u;
  if (!config.noise_model->is_zero()) rhs += config.noise_model->increment(u, dw).values;
  FieldArray coeff = params.a * u;
  coeff.colwise() += params.a0;

  const Eigen::SparseMatrix<double> lap = sparse_laplacian(grid);
  FieldArray next(u.rows(), u.cols());
  for (int i = 0; i < params.n; ++i) {
    // (diag(1/c) - dt Delta_h) p = rhs with p = c u'; symmetric positive definite for c > 0
    Eigen::SparseMatrix<double> m = -config.dt * lap;
    const Eigen::VectorXd c = coeff.row(i).transpose();
    for (Eigen::Index k = 0; k < c.size(); ++k) m.coeffRef(k, k) += 1.0 / c(k);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(m);
    require(solver.info() == Eigen::Success, ErrorCode::LinearSolveFailed,
            "factorization of the Laplacian-form system failed");
    const Eigen::VectorXd b = rhs.row(i).transpose();
    Eigen::VectorXd p = solver.solve(b);
    Eigen::VectorXd r = b - m * p;
    const double scale = std::max(b.norm(), std::numeric_limits<double>::min());
    if (r.norm() > kLaplacianResidualTol * scale) {
      p += solver.solve(r);
      r = b - m * p;
    }
    if (!(r.norm() <= kLaplacianResidualTol * scale)) {
      std::ostringstream os;
      os << "Laplacian-form solve for species " << i + 1 << " reached relative residual "
         << r.norm() / scale;
      fail(ErrorCode::LinearSolveFailed, os.str());
    }
    next.row(i) = p.cwiseQuotient(c).transpose();
  }

  const double size = next.cwiseAbs().maxCoeff();
  std::size_t clipped = 0;
  for (Eigen::Index k = 0; k < next.size(); ++k) {
    double& x = next.data()[k];
    if (x >= 0.0) continue;
    if (x < -kClipThreshold * size) {
      std::ostringstream os;
      os << "density undershoot " << x << " beyond the round-off threshold";
      fail(ErrorCode::PositivityLost, os.str());
    }
    x = 0.0;
    ++clipped;
  }
  if (info) {
    info->clipped = clipped;
    info->dissipation = laplacian_form_dissipation(params, grid, next);
  }
  return next;
}

PathRecord run_path(const SimConfig& config, std::uint64_t seed, std::uint32_t path_index) {
  require_finalized(config);
  const SKTParameters& params = config.params;
  const Grid& grid = config.grid;
  const RegularizationOperator& reg = *config.regularization;
  const std::size_t steps = config.steps();

  PathRecord rec;
  rec.seed = seed;
  rec.path_index = path_index;
  rec.noise_modes = config.noise_model->modes();
  const auto should_save = [&](std::size_t k) { return k % config.save_every == 0 || k == steps; };

  const FieldArray u0 = config.initial_density();
  const auto rethrow = [&](const SktError& e, std::size_t k) {
    std::ostringstream os;
    os << "step " << k + 1 << " (t = " << static_cast<double>(k + 1) * config.dt << "): " << e.what();
    throw SktError(e.code(), os.str());
  };

  if (config.scheme == Scheme::EntropyVariable) {
    EntropyState state;
    state.w.resize(params.n, grid.cells());
    for (Eigen::Index c = 0; c < grid.cells(); ++c) state.w.col(c) = entropy_variable(params, u0.col(c));
    state.v = reg.apply_Q_eps({FieldKind::EntropyVariable, state.w}).values;
    append_record(rec, grid, 0.0, reg.entropy_at(state.w), 0.0, density_of(params, state.w),
                  species_mass(grid, state.v), 0);
    rec.snapshots.push_back({0.0, 0, density_of(params, state.w), state.w});
    for (std::size_t k = 0; k < steps; ++k) {
      const Eigen::MatrixXd dw = step_increments(config, seed, path_index, k);
      StepInfo info;
      try {
        state = step_entropy_variable(config, state, dw, &info);
      } catch (const SktError& e) {
        rethrow(e, k);
      }
      const FieldArray u = density_of(params, state.w);
      const double t = static_cast<double>(k + 1) * config.dt;
      if (!(u.minCoeff() > 0.0)) {
        std::ostringstream os;
        os << "step " << k + 1 << ": density underflowed to " << u.minCoeff();
        fail(ErrorCode::PositivityLost, os.str());
      }
      append_record(rec, grid, t, reg.entropy_at(state.w), info.dissipation, u,
                    species_mass(grid, state.v), info.newton_iterations);
      rec.face_bound_violations += info.face_violations;
      rec.faces_checked += info.faces_checked;
      if (should_save(k + 1)) rec.snapshots.push_back({t, k + 1, u, state.w});
    }
  } else {
    FieldArray u = u0;
    append_record(rec, grid, 0.0, plain_entropy(params, grid, u), 0.0, u, species_mass(grid, u), 0);
    rec.snapshots.push_back({0.0, 0, u, std::nullopt});
    for (std::size_t k = 0; k < steps; ++k) {
      const Eigen::MatrixXd dw = step_increments(config, seed, path_index, k);
      StepInfo info;
      try {
        u = step_laplacian_form(config, u, dw, &info);
      } catch (const SktError& e) {
        rethrow(e, k);
      }
      const double t = static_cast<double>(k + 1) * config.dt;
      append_record(rec, grid, t, plain_entropy(params, grid, u), info.dissipation, u,
                    species_mass(grid, u), 0);
      rec.clip_events += info.clipped;
      if (should_save(k + 1)) rec.snapshots.push_back({t, k + 1, u, std::nullopt});
    }
  }
  return rec;
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

SampleStats describe(const std::vector<double>& values) {
  SampleStats s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - s.mean) * (values[i] - s.mean);
    s.variance = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(values.size() - 1);
  }
  return s;
}

PathSummary summarize(const PathRecord& record) {
  require(record.size() > 0, ErrorCode::MissingData, "empty path record");
  PathSummary s;
  s.path_index = record.path_index;
  s.sup_entropy = *std::max_element(record.entropy.begin(), record.entropy.end());
  std::vector<double> dis;
  for (std::size_t k = 1; k < record.size(); ++k) {
    dis.push_back((record.times[k] - record.times[k - 1]) * record.dissipation[k]);
  }
  s.integrated_dissipation = pairwise_sum(dis.data(), dis.size());
  s.final_entropy = record.entropy.back();
  s.initial_mass = record.mass.front();
  s.final_mass = record.mass.back();
  s.initial_dual_mass = record.dual_mass.front();
  s.final_dual_mass = record.dual_mass.back();
  s.min_density = *std::min_element(record.min_u.begin(), record.min_u.end());
  s.face_bound_violations = record.face_bound_violations;
  return s;
}

EnsembleStats run_ensemble(const SimConfig& config, std::size_t paths, std::uint64_t base_seed,
                           EnsembleOptions options) {
  require_finalized(config);
  require(paths >= 1, ErrorCode::InvalidArgument, "ensemble needs at least one path");
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(paths)));

  std::vector<PathSummary> summaries(paths);
  std::vector<std::vector<double>> entropies(paths);
  std::vector<double> times;
  std::vector<PathRecord> records(options.keep_records ? paths : 0);
  std::vector<std::exception_ptr> errors(paths);
  std::vector<char> done(paths, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  const auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= paths || stop.load()) return;
      try {
        PathRecord rec = run_path(config, base_seed, static_cast<std::uint32_t>(j));
        summaries[j] = summarize(rec);
        entropies[j] = rec.entropy;
        if (j == 0) times = rec.times;
        if (options.keep_records) records[j] = std::move(rec);
        done[j] = 1;
      } catch (...) {
        errors[j] = std::current_exception();
        stop.store(true);
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t j = 0; j < paths; ++j) {
    if (!errors[j]) continue;
    const auto completed = static_cast<std::size_t>(std::count(done.begin(), done.end(), 1));
    try {
      std::rethrow_exception(errors[j]);
    } catch (const SktError& e) {
      std::ostringstream os;
      os << "path " << j << " failed after " << completed << " completed paths: " << e.what();
      throw SktError(e.code(), os.str());
    }
  }

  EnsembleStats stats;
  stats.base_seed = base_seed;
  std::vector<double> sup, dis, fin;
  for (const PathSummary& s : summaries) {
    sup.push_back(s.sup_entropy);
    dis.push_back(s.integrated_dissipation);
    fin.push_back(s.final_entropy);
  }
  stats.sup_entropy = describe(sup);
  stats.integrated_dissipation = describe(dis);
  stats.final_entropy = describe(fin);
  stats.times = times;
  stats.mean_entropy.resize(times.size());
  stats.variance_entropy.resize(times.size());
  std::vector<double> column(paths);
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t j = 0; j < paths; ++j) column[j] = entropies[j][k];
    const SampleStats s = describe(column);
    stats.mean_entropy[k] = s.mean;
    stats.variance_entropy[k] = s.variance;
  }
  stats.paths = std::move(summaries);
  stats.records = std::move(records);
  return stats;
}

std::vector<BalanceStep> entropy_balance_report(const SimConfig& config, const PathRecord& path) {
  require_finalized(config);
  require(config.scheme == Scheme::EntropyVariable, ErrorCode::InvalidArgument,
          "the entropy balance is defined for the entropy-variable scheme");
  const auto& snaps = path.snapshots;
  require(snaps.size() >= 2, ErrorCode::MissingData, "entropy balance needs at least two snapshots");
  const SKTParameters& params = config.params;
  const RegularizationOperator& reg = *config.regularization;
  const NoiseModel& noise = *config.noise_model;
  const double vol = config.grid.cell_volume();

  std::vector<BalanceStep> out;
  out.reserve(snaps.size() - 1);
  for (std::size_t s = 0; s + 1 < snaps.size(); ++s) {
    const Snapshot& a = snaps[s];
    const Snapshot& b = snaps[s + 1];
    require(a.w.has_value() && b.w.has_value(), ErrorCode::MissingData,
            "entropy balance needs entropy-variable snapshots");
    require(b.step == a.step + 1, ErrorCode::MissingData,
            "entropy balance needs a snapshot at every step (save_every = 1)");
    const FieldArray& w_old = *a.w;
    const FieldArray& w_new = *b.w;
    const double dt = b.t - a.t;

    BalanceStep row;
    row.t = b.t;
    row.delta_entropy = reg.entropy_at(w_new) - reg.entropy_at(w_old);
    const FaceMobility mob(params, config.grid, w_old);
    row.dissipation = -dt * mob.quadratic_form(w_new);
    StepInfo faces;
    check_faces(params, mob, w_new, vol, faces);
    row.face_lower_bound = -dt * faces.face_bound_sum;
    row.face_violations = faces.face_violations;

    if (!noise.is_zero()) {
      const FieldArray u_old = density_of(params, w_old);
      const Eigen::MatrixXd dw = step_increments(config, path.seed, path.path_index, a.step);
      const FieldArray xi = noise.increment(u_old, dw).values;
      row.martingale = vol * w_old.cwiseProduct(xi).sum();
      double ito = 0.0;
      for (Eigen::Index k = 0; k < noise.modes(); ++k) {
        FieldArray mode(params.n, u_old.cols());
        for (int i = 0; i < params.n; ++i) mode.row(i) = noise.mode_field(u_old, i, k).transpose();
        const FieldArray resp = reg.dR_eps_apply_at(w_old, {FieldKind::Dual, mode}).values;
        ito += vol * mode.cwiseProduct(resp).sum();
      }
      row.ito_correction = 0.5 * dt * ito;
    }
    row.residual = row.delta_entropy - (row.dissipation + row.martingale + row.ito_correction);
    out.push_back(row);
  }
  return out;
}

}  // namespace sktlab
