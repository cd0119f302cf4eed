#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "nbreg/model.hpp"

namespace nbreg {

struct FitConfig {
  double lambda = 0.0;
  int max_iter = 5000;
  double tol_kkt = 1e-6;
  double backtrack_shrink = 0.5;
  double init_step = 1.0;
  bool acceleration = true;
  /// Coordinates excluded from the l1 term (an intercept column, typically).
  std::vector<Index> unpenalized;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<Index> active_set;
  std::vector<double> objective_trace;
  std::vector<double> kkt_trace;
  Warnings warnings;
};

/// sign(z) max(|z| - t, 0).
inline double soft_threshold(double z, double t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// max_j dist(grad_j L(beta), lambda * subdiff|beta_j|); unpenalized
/// coordinates contribute |grad_j L|.
double kkt_residual(const Dataset& data, double r, double lambda, const Eigen::VectorXd& beta,
                    const std::vector<Index>& unpenalized = {});

/// L(beta) + lambda * ||beta||_1 over the penalized coordinates.
double penalized_objective(const Dataset& data, double r, double lambda,
                           const Eigen::VectorXd& beta,
                           const std::vector<Index>& unpenalized = {});

/// Smallest lambda for which beta = 0 is optimal: ||grad L(0)||_inf.
double lambda_max(const Dataset& data, double r);

/// Minimizes L(beta) + lambda ||beta||_1 by accelerated proximal gradient with
/// backtracking and objective-increase restarts. Failure to reach tol_kkt
/// within max_iter is reported through `converged`, not thrown.
FitResult fit(const Dataset& data, double r, const FitConfig& config,
              const std::optional<Eigen::VectorXd>& beta_init = std::nullopt);

}  // namespace nbreg
