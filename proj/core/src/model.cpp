#include "sktlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "sktlab/error.hpp"

namespace sktlab {

namespace {

constexpr double kBalanceTolerance = 1e-12;
constexpr double kCycleTolerance = 1e-10;

std::string pair_name(Eigen::Index i, Eigen::Index j) {
  std::ostringstream os;
  os << "(" << i + 1 << "," << j + 1 << ")";
  return os.str();
}

}  // namespace

SKTParameters SKTParameters::make(Eigen::VectorXd a0, Eigen::MatrixXd a,
                                  std::optional<Eigen::VectorXd> pi,
                                  std::optional<DiffusionMode> mode) {
  SKTParameters p;
  p.n = static_cast<int>(a0.size());
  require(p.n >= 1, ErrorCode::InvalidArgument, "species count must be at least 1");
  require(a.rows() == p.n && a.cols() == p.n, ErrorCode::SizeMismatch,
          "coefficient matrix must be n x n with n = len(a0)");
  p.a0 = std::move(a0);
  p.a = std::move(a);
  p.pi = pi ? std::move(*pi) : find_reversible_measure(p.a);

  if (mode) {
    p.mode = *mode;
  } else {
    const bool all_self = (p.a.diagonal().array() > 0.0).all();
    const bool no_self = (p.a.diagonal().array() == 0.0).all();
    require(all_self || no_self, ErrorCode::InvalidArgument,
            "self-diffusion must be present for all species or for none");
    p.mode = all_self ? DiffusionMode::WithSelfDiffusion : DiffusionMode::WithoutSelfDiffusion;
  }
  p.validate();
  return p;
}

void SKTParameters::validate() const {
  require(n >= 1, ErrorCode::InvalidArgument, "species count must be at least 1");
  require(a0.size() == n && a.rows() == n && a.cols() == n && pi.size() == n,
          ErrorCode::SizeMismatch, "parameter shapes disagree with species count");
  require(a0.allFinite() && a.allFinite() && pi.allFinite(), ErrorCode::NonFinite,
          "non-finite coefficient");
  require((a0.array() >= 0.0).all(), ErrorCode::InvalidArgument, "a0 must be nonnegative");
  require((a.array() >= 0.0).all(), ErrorCode::InvalidArgument, "a must be nonnegative");
  require((pi.array() > 0.0).all(), ErrorCode::InvalidArgument, "pi must be positive");

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double lhs = pi(i) * a(i, j);
      const double rhs = pi(j) * a(j, i);
      if (std::abs(lhs - rhs) > kBalanceTolerance * std::max(1.0, lhs)) {
        fail(ErrorCode::DetailedBalanceViolated,
             "pi_i a_ij != pi_j a_ji at " + pair_name(i, j));
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (mode == DiffusionMode::WithSelfDiffusion) {
      require(a(i, i) > 0.0, ErrorCode::InvalidArgument,
              "with self-diffusion every a_ii must be positive");
    } else {
      require(a(i, i) == 0.0, ErrorCode::InvalidArgument,
              "without self-diffusion every a_ii must vanish");
      require(a0(i) > 0.0, ErrorCode::InvalidArgument,
              "without self-diffusion every a_i0 must be positive");
    }
  }
}

double SKTParameters::detailed_balance_residual() const {
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double lhs = pi(i) * a(i, j);
      worst = std::max(worst, std::abs(lhs - pi(j) * a(j, i)) / std::max(1.0, lhs));
    }
  }
  return worst;
}

Eigen::VectorXd find_reversible_measure(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  require(a.cols() == n && n >= 1, ErrorCode::SizeMismatch, "coefficient matrix must be square");
  require(a.allFinite() && (a.array() >= 0.0).all(), ErrorCode::InvalidArgument,
          "coefficient matrix must be finite and nonnegative");

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && (a(i, j) > 0.0) != (a(j, i) > 0.0)) {
        fail(ErrorCode::AsymmetricSupport, "a_ij > 0 but a_ji = 0 at " + pair_name(i, j));
      }
    }
  }

  // Spanning-tree propagation of pi_j = pi_i a_ij / a_ji from the smallest
  // unvisited index of each component.
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Eigen::Index root = 0; root < n; ++root) {
    if (seen[root]) continue;
    pi(root) = 1.0;
    seen[root] = true;
    std::queue<Eigen::Index> frontier;
    frontier.push(root);
    while (!frontier.empty()) {
      const Eigen::Index i = frontier.front();
      frontier.pop();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || seen[j] || a(i, j) <= 0.0) continue;
        pi(j) = pi(i) * a(i, j) / a(j, i);
        seen[j] = true;
        frontier.push(j);
      }
    }
  }

  // Every non-tree edge closes a cycle; the Kolmogorov criterion holds iff all
  // edges balance.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (a(i, j) <= 0.0) continue;
      const double lhs = pi(i) * a(i, j);
      const double rhs = pi(j) * a(j, i);
      if (std::abs(lhs - rhs) > kCycleTolerance * std::max(lhs, rhs)) {
        fail(ErrorCode::CycleInconsistent,
             "cycle products through edge " + pair_name(i, j) + " do not balance");
      }
    }
  }
  return pi;
}

Eigen::MatrixXd diffusion_matrix(const SKTParameters& p, const Eigen::VectorXd& u) {
  require(u.size() == p.n, ErrorCode::SizeMismatch, "density length must equal n");
  Eigen::MatrixXd A = p.a.array().colwise() * u.array();
  A.diagonal() += p.a0 + p.a * u;
  return A;
}

double entropy_density(const SKTParameters& p, const Eigen::VectorXd& u) {
  require(u.size() == p.n, ErrorCode::SizeMismatch, "density length must equal n");
  double h = 0.0;
  for (int i = 0; i < p.n; ++i) h += p.pi(i) * entropy_kernel(u(i));
  return h;
}

Eigen::VectorXd entropy_variable(const SKTParameters& p, const Eigen::VectorXd& u) {
  require(u.size() == p.n, ErrorCode::SizeMismatch, "density length must equal n");
  require((u.array() > 0.0).all(), ErrorCode::NonPositiveDensity,
          "entropy variable needs strictly positive densities");
  return p.pi.array() * u.array().log();
}

Eigen::VectorXd inverse_entropy_variable(const SKTParameters& p, const Eigen::VectorXd& w) {
  require(w.size() == p.n, ErrorCode::SizeMismatch, "entropy variable length must equal n");
  return (w.array() / p.pi.array()).exp();
}

Eigen::MatrixXd mobility_from_density(const SKTParameters& p, const Eigen::VectorXd& u) {
  Eigen::MatrixXd B = diffusion_matrix(p, u);
  B.array().rowwise() *= (u.array() / p.pi.array()).transpose();
  return B;
}

Eigen::MatrixXd mobility_matrix(const SKTParameters& p, const Eigen::VectorXd& w) {
  return mobility_from_density(p, inverse_entropy_variable(p, w));
}

double entropy_quadratic_form(const SKTParameters& p, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& z) {
  const Eigen::VectorXd hz = (p.pi.array() / u.array()) * z.array();
  return hz.dot(diffusion_matrix(p, u) * z);
}

double dissipation_lower_bound(const SKTParameters& p, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& z) {
  require(u.size() == p.n && z.size() == p.n, ErrorCode::SizeMismatch,
          "density and direction must have length n");
  double bound = 0.0;
  for (int i = 0; i < p.n; ++i) {
    bound += p.pi(i) * (p.a0(i) * z(i) * z(i) / u(i) + 2.0 * p.a(i, i) * z(i) * z(i));
  }
  for (int i = 0; i < p.n; ++i) {
    for (int j = 0; j < p.n; ++j) {
      if (i == j || p.a(i, j) == 0.0) continue;
      const double r = std::sqrt(u(j) / u(i));
      const double s = r * z(i) + z(j) / r;
      bound += 0.5 * p.pi(i) * p.a(i, j) * s * s;
    }
  }
  return bound;
}

}  // namespace sktlab
