#include "sktlab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sktlab/error.hpp"

namespace sktlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_family(const NoiseFamily& family) {
  std::visit(Overloaded{
                 [](const noise_family::Zero&) {},
                 [](const noise_family::BoundedRatio& f) {
                   require(f.eta > 0.0 && std::isfinite(f.eta), ErrorCode::InvalidArgument,
                           "bounded-ratio noise needs eta > 0");
                 },
                 [](const noise_family::Power& f) {
                   require(f.alpha >= 0.5 && f.alpha <= 1.0, ErrorCode::InvalidArgument,
                           "power noise needs 1/2 <= alpha <= 1");
                 },
                 [](const noise_family::PowerDamped& f) {
                   require(f.alpha >= 0.5 && f.alpha <= 1.0, ErrorCode::InvalidArgument,
                           "damped power noise needs 1/2 <= alpha <= 1");
                   require(f.beta >= 0.5 * f.alpha && std::isfinite(f.beta),
                           ErrorCode::InvalidArgument, "damped power noise needs beta >= alpha/2");
                 },
                 [](const noise_family::Custom& f) {
                   require(static_cast<bool>(f.intensity), ErrorCode::InvalidArgument,
                           "custom noise needs an intensity function");
                 },
             },
             family);
}

// sigma(u) - sigma(v) in Hilbert-Schmidt norm, squared.
double hs_distance_squared(const NoiseModel& model, const FieldArray& u, const FieldArray& v) {
  const Eigen::VectorXd& weights = model.cell_weights();
  const double vol = model.basis().grid().cell_volume();
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      const double d = model.intensity(u(i, c)) - model.intensity(v(i, c));
      total += d * d * weights(c);
    }
  }
  return vol * total;
}

void require_shape(const SKTParameters& params, const SpectralBasis& basis, const FieldArray& f,
                   const char* what) {
  if (f.rows() != params.n || f.cols() != basis.size()) {
    std::ostringstream os;
    os << what << " has shape " << f.rows() << "x" << f.cols() << ", expected " << params.n << "x"
       << basis.size();
    fail(ErrorCode::SizeMismatch, os.str());
  }
}

}  // namespace

std::string family_name(const NoiseFamily& family) {
  return std::visit(Overloaded{
                        [](const noise_family::Zero&) -> std::string { return "zero"; },
                        [](const noise_family::BoundedRatio&) -> std::string { return "bounded_ratio"; },
                        [](const noise_family::Power&) -> std::string { return "power"; },
                        [](const noise_family::PowerDamped&) -> std::string { return "power_damped"; },
                        [](const noise_family::Custom& f) -> std::string { return f.name; },
                    },
                    family);
}

double default_spectral_decay(int dim) {
  const double half = 0.5 * dim;
  return 1.1 * half * half + 0.1;
}

NoiseModel::NoiseModel(std::shared_ptr<const SpectralBasis> basis, NoiseFamily family,
                       std::optional<double> rho, std::optional<Eigen::Index> modes)
    : basis_(std::move(basis)), family_(std::move(family)), rho_(0.0), modes_(0) {
  require(basis_ != nullptr, ErrorCode::InvalidArgument, "noise model needs a spectral basis");
  validate_family(family_);
  const int dim = basis_->grid().dim;
  rho_ = rho.value_or(default_spectral_decay(dim));
  const double critical = 0.25 * dim * dim;
  if (!(rho_ > critical) || !std::isfinite(rho_)) {
    std::ostringstream os;
    os << "spectral decay rho = " << rho_ << " must exceed (d/2)^2 = " << critical;
    fail(ErrorCode::InvalidArgument, os.str());
  }

  const Eigen::Index total_modes = basis_->size();
  const Eigen::VectorXd all = basis_->sobolev_weights(-rho_);
  const Eigen::VectorXd squares = all.array().square().matrix();
  const double total = squares.sum();

  if (modes) {
    require(*modes >= 1 && *modes <= total_modes, ErrorCode::InvalidArgument,
            "mode count K must lie in [1, number of cells]");
    modes_ = *modes;
  } else {
    // tail sum_{k>=K} a_k^2 accumulated from the back to avoid cancellation
    Eigen::VectorXd tail(total_modes + 1);
    tail(total_modes) = 0.0;
    for (Eigen::Index k = total_modes - 1; k >= 0; --k) tail(k) = tail(k + 1) + squares(k);
    modes_ = total_modes;
    for (Eigen::Index k = 1; k <= total_modes; ++k) {
      if (tail(k) <= 0.01 * total) {
        modes_ = k;
        break;
      }
    }
  }
  coefficients_ = all.head(modes_);
  tail_fraction_ = squares.tail(total_modes - modes_).sum() / total;

  cell_weights_ = Eigen::VectorXd::Zero(total_modes);
  for (Eigen::Index k = 0; k < modes_; ++k) {
    const Eigen::VectorXd eta = basis_->mode(k);
    const double a2 = squares(k);
    cell_weights_ += a2 * eta.array().square().matrix();
    const double sup = eta.cwiseAbs().maxCoeff();
    sup_norm_sum_ += a2 * sup * sup;
  }
}

double NoiseModel::intensity(double u) const {
  return std::visit(Overloaded{
                        [](const noise_family::Zero&) { return 0.0; },
                        [u](const noise_family::BoundedRatio& f) {
                          return u <= 0.0 ? 0.0 : u / (1.0 + std::pow(u, 0.5 + f.eta));
                        },
                        [u](const noise_family::Power& f) { return u <= 0.0 ? 0.0 : std::pow(u, f.alpha); },
                        [u](const noise_family::PowerDamped& f) {
                          return u <= 0.0 ? 0.0 : std::pow(u, f.alpha) / (1.0 + std::pow(u, f.beta));
                        },
                        [u](const noise_family::Custom& f) { return f.intensity(u); },
                    },
                    family_);
}

GridField NoiseModel::increment(const FieldArray& u, const Eigen::MatrixXd& dw) const {
  require(u.cols() == basis_->size(), ErrorCode::SizeMismatch, "density does not match noise basis");
  if (dw.rows() != u.rows() || dw.cols() != modes_) {
    std::ostringstream os;
    os << "Wiener increment has shape " << dw.rows() << "x" << dw.cols() << ", expected "
       << u.rows() << "x" << modes_;
    fail(ErrorCode::SizeMismatch, os.str());
  }
  FieldArray out = FieldArray::Zero(u.rows(), u.cols());
  if (is_zero()) return {FieldKind::Dual, std::move(out)};
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const Eigen::VectorXd coeff = coefficients_.cwiseProduct(dw.row(i).transpose());
    const Eigen::VectorXd spatial = basis_->from_spectral(coeff);
    for (Eigen::Index c = 0; c < u.cols(); ++c) out(i, c) = intensity(u(i, c)) * spatial(c);
  }
  return {FieldKind::Dual, std::move(out)};
}

Eigen::VectorXd NoiseModel::mode_field(const FieldArray& u, int species, Eigen::Index k) const {
  require(species >= 0 && species < u.rows(), ErrorCode::InvalidArgument, "species out of range");
  require(k >= 0 && k < modes_, ErrorCode::InvalidArgument, "mode out of range");
  const Eigen::VectorXd eta = basis_->mode(k);
  Eigen::VectorXd out(u.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    out(c) = intensity(u(species, c)) * coefficients_(k) * eta(c);
  }
  return out;
}

GridField noise_increment_field(const NoiseModel& model, const SKTParameters& params,
                                const GridField& u, const Eigen::MatrixXd& dw) {
  require_shape(params, model.basis(), u.values, "density");
  return model.increment(u.values, dw);
}

double hilbert_schmidt_norm(const NoiseModel& model, const FieldArray& u) {
  return std::sqrt(hs_distance_squared(model, u, FieldArray::Zero(u.rows(), u.cols())));
}

A4Report check_A4(const NoiseModel& model, const SKTParameters& params,
                  const std::vector<std::pair<GridField, GridField>>& sample_pairs) {
  require(!sample_pairs.empty(), ErrorCode::MissingData, "check_A4 needs at least one sample pair");
  const Grid& grid = model.basis().grid();
  A4Report report;
  std::vector<double> log_norm, log_sigma;
  for (const auto& [u, v] : sample_pairs) {
    require_shape(params, model.basis(), u.values, "sample");
    require_shape(params, model.basis(), v.values, "sample");
    const double diff = l2_norm(grid, u.values - v.values);
    if (diff > 0.0) {
      report.lipschitz =
          std::max(report.lipschitz, std::sqrt(hs_distance_squared(model, u.values, v.values)) / diff);
    }
    for (const FieldArray* f : {&u.values, &v.values}) {
      const double norm = l2_norm(grid, *f);
      const double sigma = hilbert_schmidt_norm(model, *f);
      report.growth = std::max(report.growth, sigma / (1.0 + norm));
      if (norm > 1.0 && sigma > 0.0) {
        log_norm.push_back(std::log(norm));
        log_sigma.push_back(std::log(sigma));
      }
    }
    ++report.samples;
  }
  if (log_norm.size() >= 2) {
    const auto m = static_cast<Eigen::Index>(log_norm.size());
    const Eigen::Map<const Eigen::VectorXd> x(log_norm.data(), m);
    const Eigen::Map<const Eigen::VectorXd> y(log_sigma.data(), m);
    const double xm = x.mean();
    const double ym = y.mean();
    const double sxx = (x.array() - xm).square().sum();
    if (sxx > 0.0) report.exponent = ((x.array() - xm) * (y.array() - ym)).sum() / sxx;
  }
  return report;
}

A5Report check_A5(const NoiseModel& model, const SKTParameters& params, const PathRecord& trajectory) {
  require(!trajectory.snapshots.empty(), ErrorCode::MissingData,
          "check_A5 needs a trajectory with saved fields");
  const SpectralBasis& basis = model.basis();
  const double vol = basis.grid().cell_volume();
  const Eigen::VectorXd& weights = model.cell_weights();
  const Eigen::VectorXd& a = model.coefficients();

  A5Report report;
  double int1 = 0.0, int2 = 0.0, int_h = 0.0;
  const auto& snaps = trajectory.snapshots;
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    const FieldArray& u = snaps[s].u;
    require_shape(params, basis, u, "snapshot");
    const double t = snaps[s].t;
    if (s > 0) {
      // left rectangle: the integrand at the previous snapshot covers [t_{s-1}, t_s)
      const FieldArray& prev = snaps[s - 1].u;
      const double dt = t - snaps[s - 1].t;
      double g1 = 0.0, g2 = 0.0, h = 0.0;
      for (int i = 0; i < params.n; ++i) {
        Eigen::VectorXd f(u.cols());
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
          const double ui = prev(i, c);
          const double si = model.intensity(ui);
          f(c) = ui > 0.0 ? params.pi(i) * std::log(ui) * si : 0.0;
          if (ui > 0.0) g2 += vol * params.pi(i) / ui * si * si * weights(c);
          h += vol * params.pi(i) * entropy_kernel(ui);
        }
        const Eigen::VectorXd fhat = basis.to_spectral(f);
        g1 += (a.array().square() * fhat.head(a.size()).array().square()).sum();
      }
      int1 += dt * g1;
      int2 += dt * g2;
      int_h += dt * h;
    }
    report.ratio1 = std::max(report.ratio1, std::sqrt(int1) / (1.0 + int_h));
    report.ratio2 = std::max(report.ratio2, int2 / (1.0 + int_h));
  }
  return report;
}

}  // namespace sktlab
