#include "sktlab/regularization.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sktlab/error.hpp"
#include "sktlab/linear_solve.hpp"

namespace sktlab {

namespace {

// forcing term of the inexact Newton iterations
constexpr double kLinearTol = 1e-10;
constexpr double kDensityFloor = 1e-12;
constexpr int kMaxPolishSteps = 3;

bool positive_dominated(const Eigen::VectorXd& v) {
  if (v.minCoeff() > 0.0) return true;
  const double positive = v.cwiseMax(0.0).sum();
  const double negative = -v.cwiseMin(0.0).sum();
  return positive > 0.0 && 10.0 * negative <= positive;
}

}  // namespace

void NewtonSettings::validate() const {
  require(tol > 0.0 && std::isfinite(tol), ErrorCode::InvalidArgument, "Newton tolerance must be positive");
  require(max_iter >= 1, ErrorCode::InvalidArgument, "Newton iteration budget must be positive");
  require(max_halvings >= 0, ErrorCode::InvalidArgument, "line-search budget must be nonnegative");
  require(dense_limit >= 0, ErrorCode::InvalidArgument, "dense limit must be nonnegative");
}

RegularizationOperator::RegularizationOperator(std::shared_ptr<const SpectralBasis> basis,
                                               SKTParameters params, double epsilon,
                                               NewtonSettings settings)
    : basis_(std::move(basis)), params_(std::move(params)), epsilon_(epsilon), settings_(settings) {
  require(basis_ != nullptr, ErrorCode::InvalidArgument, "regularization needs a spectral basis");
  require(epsilon_ > 0.0 && std::isfinite(epsilon_), ErrorCode::InvalidArgument,
          "epsilon must be positive");
  settings_.validate();
  params_.validate();
  regularizer_spectrum_ = epsilon_ * basis_->sobolev_weights(basis_->sobolev_index());
  dual_weights_ = basis_->sobolev_weights(-basis_->sobolev_index());
  if (basis_->size() <= settings_.dense_limit) {
    dense_regularizer_ = std::make_shared<const Eigen::MatrixXd>(
        basis_->dense_operator(regularizer_spectrum_));
  }
}

double RegularizationOperator::dual_norm(const FieldArray& f) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const Eigen::VectorXd c = basis_->to_spectral(f.row(i).transpose());
    total += (dual_weights_.array() * c.array().square()).sum();
  }
  return std::sqrt(total);
}

FieldArray RegularizationOperator::apply_regularizer(const FieldArray& x) const {
  FieldArray out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (dense_regularizer_) {
      out.row(i).noalias() = (*dense_regularizer_ * x.row(i).transpose()).transpose();
    } else {
      out.row(i) = basis_->apply_multiplier(x.row(i).transpose(), regularizer_spectrum_).transpose();
    }
  }
  return out;
}

GridField RegularizationOperator::apply_Q_eps(const GridField& w) const {
  require(w.values.rows() == params_.n && w.values.cols() == basis_->size(),
          ErrorCode::SizeMismatch, "entropy variable shape does not match operator");
  require(w.values.allFinite(), ErrorCode::NonFinite, "entropy variable has non-finite entries");
  FieldArray v = apply_regularizer(w.values);
  for (int i = 0; i < params_.n; ++i) {
    v.row(i).array() += (w.values.row(i).array() / params_.pi(i)).exp();
  }
  return {FieldKind::Dual, std::move(v)};
}

Eigen::VectorXd RegularizationOperator::linear_solve(const Eigen::VectorXd& diagonal,
                                                     const Eigen::VectorXd& rhs, double tol) const {
  const VectorNorm dual = [this](const Eigen::VectorXd& r) { return basis_->dual_norm(r); };
  if (dense_regularizer_) {
    Eigen::MatrixXd jac = *dense_regularizer_;
    jac.diagonal() += diagonal;
    return dense_spd_solve(jac, rhs, tol, dual);
  }
  const auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return diagonal.cwiseProduct(x) + basis_->apply_multiplier(x, regularizer_spectrum_);
  };
  const Eigen::VectorXd inv_spectrum =
      (diagonal.mean() + regularizer_spectrum_.array()).inverse().matrix();
  const auto precondition = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    return basis_->apply_multiplier(r, inv_spectrum);
  };
  const IterativeResult res = preconditioned_cg(apply, precondition, rhs,
                                                Eigen::VectorXd::Zero(rhs.size()), tol,
                                                static_cast<int>(10 * rhs.size() + 100), dual);
  require(res.converged, ErrorCode::LinearSolveFailed,
          "CG stopped at relative residual " + format_residual(res.relative_residual));
  return res.x;
}

Eigen::VectorXd RegularizationOperator::newton_species(int species, const Eigen::VectorXd& v,
                                                       Eigen::VectorXd w, double target,
                                                       int& iterations, double& residual) const {
  const double pi = params_.pi(species);
  const auto residual_of = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = (x.array() / pi).exp().matrix() - v;
    if (dense_regularizer_) {
      g.noalias() += *dense_regularizer_ * x;
    } else {
      g += basis_->apply_multiplier(x, regularizer_spectrum_);
    }
    return g.allFinite() ? basis_->dual_norm(g) : std::numeric_limits<double>::infinity();
  };

  Eigen::VectorXd g;
  double merit = residual_of(w, g);
  int polish = 0;
  bool converged = merit <= target;
  for (int it = 0; it < settings_.max_iter; ++it) {
    if (converged && polish >= kMaxPolishSteps) break;
    const Eigen::VectorXd u_prime = (w.array() / pi).exp().matrix() / pi;
    Eigen::VectorXd step;
    try {
      step = linear_solve(u_prime, -g, kLinearTol);
    } catch (const SktError&) {
      if (converged) break;
      throw;
    }

    double t = 1.0;
    Eigen::VectorXd trial = w + step;
    Eigen::VectorXd g_trial;
    double trial_merit = residual_of(trial, g_trial);
    int halvings = 0;
    while (!(trial_merit < merit) && halvings < settings_.max_halvings) {
      t *= 0.5;
      trial = w + t * step;
      trial_merit = residual_of(trial, g_trial);
      ++halvings;
    }
    if (!(trial_merit < merit)) {
      if (converged) break;
      std::ostringstream os;
      os << "line search failed for species " << species + 1 << " at residual " << merit;
      residual = merit;
      fail(ErrorCode::NewtonDiverged, os.str());
    }
    ++iterations;
    const double previous = merit;
    w = std::move(trial);
    g = std::move(g_trial);
    merit = trial_merit;
    if (converged) {
      ++polish;
      // stop polishing once progress is at round-off level
      if (merit > 0.25 * previous) break;
    }
    if (!converged && merit <= target) converged = true;
  }
  residual = merit;
  if (!converged) {
    std::ostringstream os;
    os << "no convergence for species " << species + 1 << " after " << settings_.max_iter
       << " iterations, residual " << merit;
    fail(ErrorCode::NewtonDiverged, os.str());
  }
  return w;
}

Eigen::VectorXd RegularizationOperator::solve_species(int species, const Eigen::VectorXd& v,
                                                      double tol_scale, int& iterations,
                                                      double& residual) const {
  const double target = settings_.tol * tol_scale;
  const double pi = params_.pi(species);
  if (positive_dominated(v)) {
    const Eigen::VectorXd guess = pi * v.cwiseMax(kDensityFloor).array().log().matrix();
    try {
      return newton_species(species, v, guess, target, iterations, residual);
    } catch (const SktError& e) {
      if (e.code() != ErrorCode::NewtonDiverged) throw;
    }
  }
  return newton_species(species, v, Eigen::VectorXd::Zero(v.size()), target, iterations, residual);
}

RegularizedSolve RegularizationOperator::solve_R_eps(const GridField& v) const {
  require(v.values.rows() == params_.n && v.values.cols() == basis_->size(),
          ErrorCode::SizeMismatch, "dual field shape does not match operator");
  require(v.values.allFinite(), ErrorCode::NonFinite, "dual field has non-finite entries");
  RegularizedSolve out;
  out.w = GridField(FieldKind::EntropyVariable, FieldArray(v.values.rows(), v.values.cols()));
  const double scale = 1.0 + dual_norm(v.values);
  double total = 0.0;
  for (int i = 0; i < params_.n; ++i) {
    double residual = 0.0;
    out.w.values.row(i) =
        solve_species(i, v.values.row(i).transpose(), scale, out.iterations, residual).transpose();
    total += residual * residual;
  }
  out.residual = std::sqrt(total);
  return out;
}

double RegularizationOperator::entropy_at(const FieldArray& w) const {
  double local = 0.0;
  for (int i = 0; i < params_.n; ++i) {
    double row = 0.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) row += entropy_kernel(std::exp(w(i, c) / params_.pi(i)));
    local += params_.pi(i) * row;
  }
  local *= basis_->grid().cell_volume();

  const Eigen::VectorXd weights = basis_->sobolev_weights(basis_->sobolev_index());
  double smoothing = 0.0;
  for (int i = 0; i < params_.n; ++i) {
    const Eigen::VectorXd c = basis_->to_spectral(w.row(i).transpose());
    smoothing += (weights.array() * c.array().square()).sum();
  }
  return local + 0.5 * epsilon_ * smoothing;
}

double RegularizationOperator::regularized_entropy(const GridField& v) const {
  return entropy_at(solve_R_eps(v).w.values);
}

GridField RegularizationOperator::dR_eps_apply_at(const FieldArray& w, const GridField& xi) const {
  require(xi.values.rows() == params_.n && xi.values.cols() == basis_->size(),
          ErrorCode::SizeMismatch, "direction shape does not match operator");
  require(xi.values.allFinite(), ErrorCode::NonFinite, "direction has non-finite entries");
  FieldArray b(xi.values.rows(), xi.values.cols());
  for (int i = 0; i < params_.n; ++i) {
    const Eigen::VectorXd u_prime = (w.row(i).transpose().array() / params_.pi(i)).exp().matrix() /
                                    params_.pi(i);
    b.row(i) = linear_solve(u_prime, xi.values.row(i).transpose(), 1e-11).transpose();
  }
  return {FieldKind::EntropyVariable, std::move(b)};
}

GridField RegularizationOperator::dR_eps_apply(const GridField& v, const GridField& xi) const {
  return dR_eps_apply_at(solve_R_eps(v).w.values, xi);
}

}  // namespace sktlab
