#include "sktlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sktlab/error.hpp"

namespace sktlab {

namespace {

FieldArray apply_transform(const FieldArray& u, const Transform& t, std::optional<int> species) {
  switch (t.kind) {
    case Transform::Kind::PairSqrt: {
      require(t.i >= 0 && t.j >= 0 && t.i < u.rows() && t.j < u.rows(), ErrorCode::InvalidArgument,
              "pair_sqrt species out of range");
      FieldArray out(1, u.cols());
      out.row(0) = (u.row(t.i).array() * u.row(t.j).array()).max(0.0).sqrt();
      return out;
    }
    case Transform::Kind::Sqrt:
    case Transform::Kind::Identity:
      break;
  }
  FieldArray base;
  if (species) {
    require(*species >= 0 && *species < u.rows(), ErrorCode::InvalidArgument, "species out of range");
    base = u.row(*species);
  } else {
    base = u;
  }
  if (t.kind == Transform::Kind::Sqrt) base = base.array().max(0.0).sqrt().matrix();
  return base;
}

}  // namespace

void NormSpec::validate() const {
  require(time_exponent >= 1.0, ErrorCode::InvalidArgument, "time exponent must be at least 1");
  if (space == SpaceNorm::Lq) {
    require(q >= 1.0 && std::isfinite(q), ErrorCode::InvalidArgument, "space exponent must be at least 1");
  }
  if (transform.kind == Transform::Kind::PairSqrt) {
    require(transform.i != transform.j, ErrorCode::InvalidArgument, "pair_sqrt needs two distinct species");
  }
}

Eigen::VectorXd gradient_magnitude(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f) {
  require(f.size() == grid.cells(), ErrorCode::SizeMismatch, "field size does not match grid");
  Eigen::VectorXd out(f.size());
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      // mirrored ghost: f_{-1} = f_0, f_{N} = f_{N-1}
      const double left = f(grid.index(std::max(ix - 1, 0), iy));
      const double right = f(grid.index(std::min(ix + 1, grid.nx - 1), iy));
      const double gx = (right - left) / (2.0 * grid.hx());
      double gy = 0.0;
      if (grid.dim == 2) {
        const double down = f(grid.index(ix, std::max(iy - 1, 0)));
        const double up = f(grid.index(ix, std::min(iy + 1, grid.ny - 1)));
        gy = (up - down) / (2.0 * grid.hy());
      }
      out(grid.index(ix, iy)) = std::hypot(gx, gy);
    }
  }
  return out;
}

double space_norm(const SpectralBasis& basis, const FieldArray& f, const NormSpec& spec) {
  const Grid& grid = basis.grid();
  require(f.cols() == grid.cells(), ErrorCode::SizeMismatch, "field does not match the grid");
  const double vol = grid.cell_volume();
  const auto lq = [&](double q) {
    return std::pow(vol * f.array().abs().pow(q).sum(), 1.0 / q);
  };
  const auto grad_sum = [&](double q) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      total += gradient_magnitude(grid, f.row(i).transpose()).array().pow(q).sum();
    }
    return vol * total;
  };
  switch (spec.space) {
    case SpaceNorm::L1:
      return vol * f.cwiseAbs().sum();
    case SpaceNorm::L2:
      return std::sqrt(vol * f.squaredNorm());
    case SpaceNorm::Lq:
      return lq(spec.q);
    case SpaceNorm::H1:
      return std::sqrt(vol * f.squaredNorm() + grad_sum(2.0));
    case SpaceNorm::GradL2:
      return std::sqrt(grad_sum(2.0));
    case SpaceNorm::W11:
      return vol * f.cwiseAbs().sum() + grad_sum(1.0);
    case SpaceNorm::GradL1:
      return grad_sum(1.0);
    case SpaceNorm::Dual:
      return dual_norm(basis, f);
  }
  return 0.0;
}

std::vector<double> rectangle_weights(const std::vector<double>& times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t s = 0; s + 1 < times.size(); ++s) {
    w[s] = times[s + 1] - times[s];
    require(w[s] > 0.0, ErrorCode::InvalidArgument, "sample times must be strictly increasing");
  }
  return w;
}

double mixed_norm(const std::vector<double>& times, const std::vector<FieldArray>& fields,
                  const SpectralBasis& basis, const NormSpec& spec, std::optional<int> species) {
  spec.validate();
  require(!fields.empty() && fields.size() == times.size(), ErrorCode::MissingData,
          "mixed norm needs one field per sample time");
  std::vector<double> values(fields.size());
  for (std::size_t s = 0; s < fields.size(); ++s) {
    values[s] = space_norm(basis, apply_transform(fields[s], spec.transform, species), spec);
  }
  if (std::isinf(spec.time_exponent)) return *std::max_element(values.begin(), values.end());
  require(fields.size() >= 2, ErrorCode::MissingData, "time integral needs at least two snapshots");
  const std::vector<double> w = rectangle_weights(times);
  std::vector<double> terms(values.size());
  for (std::size_t s = 0; s < values.size(); ++s) terms[s] = w[s] * std::pow(values[s], spec.time_exponent);
  return std::pow(pairwise_sum(terms.data(), terms.size()), 1.0 / spec.time_exponent);
}

double mixed_norm(const PathRecord& path, const SpectralBasis& basis, const NormSpec& spec,
                  std::optional<int> species) {
  require(!path.snapshots.empty(), ErrorCode::MissingData, "path has no snapshots");
  std::vector<double> times;
  std::vector<FieldArray> fields;
  for (const Snapshot& s : path.snapshots) {
    times.push_back(s.t);
    fields.push_back(s.u);
  }
  return mixed_norm(times, fields, basis, spec, species);
}

SlobodeckijResult slobodeckij_seminorm(const std::vector<double>& times,
                                       const std::function<double(std::size_t, std::size_t)>& distance,
                                       const std::function<double(std::size_t)>& norm, double alpha,
                                       double p, int dim) {
  require(times.size() >= 2, ErrorCode::MissingData, "Slobodeckij seminorm needs at least two samples");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(p >= 1.0 && std::isfinite(p), ErrorCode::InvalidArgument, "p must be at least 1");
  const std::vector<double> w = rectangle_weights(times);
  const std::size_t m = times.size();
  const double exponent = 1.0 + alpha * p;

  std::vector<double> rows(m, 0.0);
  std::vector<double> row;
  for (std::size_t s = 0; s < m; ++s) {
    if (w[s] == 0.0) continue;
    row.assign(m, 0.0);
    for (std::size_t t = 0; t < m; ++t) {
      if (t == s || w[t] == 0.0) continue;
      row[t] = w[t] * std::pow(distance(s, t), p) / std::pow(std::abs(times[t] - times[s]), exponent);
    }
    rows[s] = w[s] * pairwise_sum(row.data(), row.size());
  }
  SlobodeckijResult r;
  r.seminorm_pow = pairwise_sum(rows.data(), rows.size());
  r.seminorm = std::pow(r.seminorm_pow, 1.0 / p);
  std::vector<double> lp(m);
  for (std::size_t s = 0; s < m; ++s) lp[s] = w[s] * std::pow(norm(s), p);
  r.lp_part = pairwise_sum(lp.data(), lp.size());
  r.full = std::pow(r.lp_part + r.seminorm_pow, 1.0 / p);
  const double regime_p = (2.0 * dim + 4.0) / dim;
  r.in_compactness_regime = alpha < 0.5 && std::abs(p - regime_p) <= 1e-12 * regime_p;
  return r;
}

SlobodeckijResult slobodeckij_seminorm(const std::vector<double>& times, const std::vector<double>& values,
                                       double alpha, double p, int dim) {
  require(values.size() == times.size(), ErrorCode::SizeMismatch, "one value per sample time required");
  return slobodeckij_seminorm(
      times, [&](std::size_t s, std::size_t t) { return std::abs(values[t] - values[s]); },
      [&](std::size_t s) { return std::abs(values[s]); }, alpha, p, dim);
}

SlobodeckijResult slobodeckij_seminorm(const PathRecord& path, const SpectralBasis& basis, double alpha,
                                       double p, SpaceNorm space) {
  require(space == SpaceNorm::Dual || space == SpaceNorm::L2, ErrorCode::InvalidArgument,
          "Slobodeckij seminorm supports the dual and L2 norms");
  const auto& snaps = path.snapshots;
  std::vector<double> times;
  for (const Snapshot& s : snaps) times.push_back(s.t);
  NormSpec spec;
  spec.space = space;
  return slobodeckij_seminorm(
      times,
      [&](std::size_t s, std::size_t t) { return space_norm(basis, snaps[t].u - snaps[s].u, spec); },
      [&](std::size_t s) { return space_norm(basis, snaps[s].u, spec); }, alpha, p, basis.grid().dim);
}

MomentResult ensemble_moment(const std::vector<double>& values, double p) {
  require(!values.empty(), ErrorCode::MissingData, "ensemble moment needs at least one value");
  require(p >= 1.0 && std::isfinite(p), ErrorCode::InvalidArgument, "moment order must be at least 1");
  std::vector<double> powered(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) powered[j] = std::pow(values[j], p);
  const SampleStats s = describe(powered);
  MomentResult r;
  r.mean = s.mean;
  if (values.size() > 1) r.stderr_value = std::sqrt(s.variance / static_cast<double>(values.size()));
  return r;
}

MomentResult ensemble_moment(const std::vector<PathRecord>& paths, const SpectralBasis& basis,
                             const NormSpec& spec, double p, std::optional<int> species) {
  require(!paths.empty(), ErrorCode::MissingData, "ensemble moment needs at least one path");
  std::vector<double> values;
  values.reserve(paths.size());
  for (const PathRecord& path : paths) values.push_back(mixed_norm(path, basis, spec, species));
  return ensemble_moment(values, p);
}

std::vector<EpsilonRow> epsilon_consistency_study(const SimConfig& config, const std::vector<double>& eps_list,
                                                  std::uint64_t seed) {
  require(!eps_list.empty(), ErrorCode::InvalidArgument, "epsilon list is empty");
  require(config.scheme == Scheme::EntropyVariable, ErrorCode::InvalidArgument,
          "the epsilon study runs the entropy-variable scheme");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    require(eps_list[k] > 0.0 && std::isfinite(eps_list[k]), ErrorCode::InvalidArgument,
            "epsilon values must be positive");
    if (k > 0) {
      require(eps_list[k] <= eps_list[k - 1], ErrorCode::InvalidArgument,
              "epsilon list must be in descending order");
    }
  }

  std::vector<EpsilonRow> rows;
  std::vector<PathRecord> paths;
  for (double eps : eps_list) {
    SimConfig run = config;
    run.epsilon = eps;
    run.basis.reset();
    run.regularization.reset();
    run.noise_model.reset();
    run.finalize();
    PathRecord path = run_path(run, seed, 0);

    EpsilonRow row;
    row.epsilon = eps;
    row.sup_entropy = *std::max_element(path.entropy.begin(), path.entropy.end());
    for (int it : path.newton_iterations) row.total_newton_iterations += it;
    for (const Snapshot& s : path.snapshots) {
      const FieldArray residue = run.regularization->apply_regularizer(*s.w);
      row.regularization_residue = std::max(row.regularization_residue, dual_norm(*run.basis, residue));
    }
    rows.push_back(row);
    paths.push_back(std::move(path));
  }

  const double vol = config.grid.cell_volume();
  for (std::size_t k = 0; k + 1 < paths.size(); ++k) {
    const auto& a = paths[k].snapshots;
    const auto& b = paths[k + 1].snapshots;
    require(a.size() == b.size(), ErrorCode::InvalidArgument, "epsilon runs produced different snapshot grids");
    std::vector<double> times;
    for (const Snapshot& s : a) times.push_back(s.t);
    const std::vector<double> w = rectangle_weights(times);
    std::vector<double> terms(a.size());
    for (std::size_t s = 0; s < a.size(); ++s) terms[s] = w[s] * vol * (a[s].u - b[s].u).squaredNorm();
    rows[k].l2_difference = std::sqrt(pairwise_sum(terms.data(), terms.size()));
  }
  return rows;
}

double gagliardo_nirenberg_ratio(const PathRecord& path, const SpectralBasis& basis, int species) {
  const int d = basis.grid().dim;
  const double theta = static_cast<double>(d) / (d + 1.0);
  NormSpec high;
  high.space = SpaceNorm::Lq;
  high.q = 2.0 + 2.0 / d;
  high.time_exponent = high.q;
  NormSpec h1;
  h1.space = SpaceNorm::H1;
  h1.time_exponent = 2.0;
  NormSpec l1;
  l1.space = SpaceNorm::L1;
  l1.time_exponent = NormSpec::infinity;
  const double num = mixed_norm(path, basis, high, species);
  const double den = std::pow(mixed_norm(path, basis, h1, species), theta) *
                     std::pow(mixed_norm(path, basis, l1, species), 1.0 - theta);
  require(den > 0.0, ErrorCode::InvalidArgument, "Gagliardo-Nirenberg ratio of a vanishing path");
  return num / den;
}

}  // namespace sktlab
