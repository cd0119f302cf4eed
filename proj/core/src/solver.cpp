#include "nbreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nbreg {

namespace {

// Evaluates L and grad L at one point of the iteration from a shared eta.
struct SmoothPart {
  const Dataset& data;
  double r;

  double value(const Eigen::VectorXd& beta) const {
    return detail::loss_from_eta(data.X() * beta, data.y(), r);
  }

  double value_and_gradient(const Eigen::VectorXd& beta, Eigen::VectorXd& grad) const {
    const Eigen::VectorXd eta = data.X() * beta;
    const double f = detail::loss_from_eta(eta, data.y(), r);
    grad = -(data.X().transpose() * detail::score_weights(eta, data.y(), r)) /
           static_cast<double>(data.n());
    return f;
  }
};

std::vector<bool> penalty_mask(Index p, const std::vector<Index>& unpenalized) {
  std::vector<bool> penalized(static_cast<std::size_t>(p), true);
  for (Index j : unpenalized) {
    if (j < 0 || j >= p) throw ConfigError("unpenalized index out of range");
    penalized[static_cast<std::size_t>(j)] = false;
  }
  return penalized;
}

double l1_norm(const Eigen::VectorXd& beta, const std::vector<bool>& penalized) {
  double total = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (penalized[static_cast<std::size_t>(j)]) total += std::abs(beta[j]);
  }
  return total;
}

double kkt_from_gradient(const Eigen::VectorXd& beta, const Eigen::VectorXd& grad,
                         double lambda, const std::vector<bool>& penalized) {
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    double dist;
    if (!penalized[static_cast<std::size_t>(j)]) {
      dist = std::abs(grad[j]);
    } else if (beta[j] != 0.0) {
      dist = std::abs(grad[j] + lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    } else {
      dist = std::max(std::abs(grad[j]) - lambda, 0.0);
    }
    worst = std::max(worst, dist);
  }
  return worst;
}

Eigen::VectorXd prox(const Eigen::VectorXd& z, double threshold,
                     const std::vector<bool>& penalized) {
  Eigen::VectorXd out(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    out[j] = penalized[static_cast<std::size_t>(j)] ? soft_threshold(z[j], threshold) : z[j];
  }
  return out;
}

}  // namespace

void FitConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(tol_kkt > 0.0)) throw ConfigError("tol_kkt must be positive");
  if (!(backtrack_shrink > 0.0 && backtrack_shrink < 1.0)) {
    throw ConfigError("backtrack_shrink must lie in (0, 1)");
  }
  if (!(init_step > 0.0) || !std::isfinite(init_step)) {
    throw ConfigError("init_step must be positive");
  }
}

double kkt_residual(const Dataset& data, double r, double lambda, const Eigen::VectorXd& beta,
                    const std::vector<Index>& unpenalized) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  const Eigen::VectorXd grad = gradient(NBModel{r, beta}, data);
  return kkt_from_gradient(beta, grad, lambda, penalty_mask(data.p(), unpenalized));
}

double penalized_objective(const Dataset& data, double r, double lambda,
                           const Eigen::VectorXd& beta, const std::vector<Index>& unpenalized) {
  return loss(NBModel{r, beta}, data) +
         lambda * l1_norm(beta, penalty_mask(data.p(), unpenalized));
}

double lambda_max(const Dataset& data, double r) {
  return gradient(NBModel{r, Eigen::VectorXd::Zero(data.p())}, data).lpNorm<Eigen::Infinity>();
}

FitResult fit(const Dataset& data, double r, const FitConfig& config,
              const std::optional<Eigen::VectorXd>& beta_init) {
  config.validate();
  if (!std::isfinite(r) || r <= 0.0) throw DomainError("dispersion r must be positive");
  const Index p = data.p();
  const std::vector<bool> penalized = penalty_mask(p, config.unpenalized);
  const double lambda = config.lambda;

  FitResult result;
  if (!data.standardized() && !Dataset::columns_standardized(data.X(), config.unpenalized)) {
    result.warnings.emplace_back("design columns are not standardized");
  }

  Eigen::VectorXd x = beta_init.value_or(Eigen::VectorXd::Zero(p));
  if (x.size() != p) throw DomainError("beta_init length does not match covariate count");
  if (!x.allFinite()) throw DomainError("beta_init has non-finite entries");

  const SmoothPart smooth{data, r};
  auto objective_of = [&](double f, const Eigen::VectorXd& beta) {
    return f + lambda * l1_norm(beta, penalized);
  };

  Eigen::VectorXd grad_x;
  double f_x = smooth.value_and_gradient(x, grad_x);
  double obj_x = objective_of(f_x, x);
  double kkt = kkt_from_gradient(x, grad_x, lambda, penalized);
  result.objective_trace.push_back(obj_x);
  result.kkt_trace.push_back(kkt);

  Eigen::VectorXd y = x;
  Eigen::VectorXd grad_y = grad_x;
  double f_y = f_x;
  double momentum = 1.0;
  double step = config.init_step;
  int iter = 0;

  while (kkt > config.tol_kkt && iter < config.max_iter) {
    ++iter;
    Eigen::VectorXd z;
    double f_z = 0.0;
    // Backtracking on the quadratic upper model around y.
    for (;;) {
      z = prox(y - step * grad_y, step * lambda, penalized);
      const Eigen::VectorXd d = z - y;
      try {
        f_z = smooth.value(z);
      } catch (const NumericError&) {
        f_z = std::numeric_limits<double>::infinity();
      }
      const double model = f_y + grad_y.dot(d) + d.squaredNorm() / (2.0 * step);
      if (f_z <= model + 1e-12 * std::abs(f_y) || d.squaredNorm() == 0.0) break;
      step *= config.backtrack_shrink;
      if (step < 1e-300) throw NumericError("line search step underflow");
    }

    const double obj_z = objective_of(f_z, z);
    if (!std::isfinite(obj_z)) throw NumericError("non-finite objective during fit");

    if (config.acceleration && obj_z > obj_x && y != x) {
      // Restart from the last accepted iterate.
      momentum = 1.0;
      y = x;
      grad_y = grad_x;
      f_y = f_x;
      continue;
    }

    Eigen::VectorXd grad_z;
    smooth.value_and_gradient(z, grad_z);
    if (config.acceleration) {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = z + ((momentum - 1.0) / next) * (z - x);
      momentum = next;
      if (y == z) {
        grad_y = grad_z;
        f_y = f_z;
      } else {
        f_y = smooth.value_and_gradient(y, grad_y);
      }
    } else {
      y = z;
      grad_y = grad_z;
      f_y = f_z;
    }
    x = std::move(z);
    grad_x = std::move(grad_z);
    f_x = f_z;
    obj_x = obj_z;
    kkt = kkt_from_gradient(x, grad_x, lambda, penalized);
    result.objective_trace.push_back(obj_x);
    result.kkt_trace.push_back(kkt);
  }

  result.beta_hat = x;
  result.objective = obj_x;
  result.kkt_residual = kkt;
  result.iterations = iter;
  result.converged = kkt <= config.tol_kkt;
  for (Index j = 0; j < p; ++j) {
    if (x[j] != 0.0) result.active_set.push_back(j);
  }
  if (!result.converged) {
    result.warnings.emplace_back("solver stopped after " + std::to_string(iter) +
                                 " iterations with KKT residual " + std::to_string(kkt));
  }
  return result;
}

}  // namespace nbreg
