#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

#include "nbreg/model.hpp"
#include "nbreg/solver.hpp"

namespace nbreg {

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

/// Phi^{-1}(q) for q in (0, 1); absolute error below 1e-9 on [1e-12, 1 - 1e-12].
/// Throws DomainError outside (0, 1).
double inverse_normal_cdf(double q);

enum class PenaltyKind { Exact, Asymptotic, Fixed, CrossValidated };

std::string_view to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(std::string_view name);

struct PenaltyChoice {
  PenaltyKind kind = PenaltyKind::Asymptotic;
  double c = 1.1;
  double alpha = 0.05;
  int mc_reps = 2000;
  double lambda = 0.0;  ///< resulting level (the input level for Fixed)

  void validate() const;
};

/// c v_n n^{-1/2} Phi^{-1}(1 - alpha / (2p)). Appends a warning when p / alpha <= 8.
double lambda_asymptotic(double v_n, Index n, Index p, double c, double alpha,
                         Warnings* warnings = nullptr);

/// V = ||grad L(beta*)||_inf for the responses currently held in `data`.
double sup_gradient(const Dataset& data, const NBModel& truth);

/// Lower (inverted-CDF) (1 - alpha)-quantile of V conditional on X, by
/// resampling y_i ~ NB(r, mu_i) mc_reps times. Replicate k uses the seed stream
/// derive_seed(seed, k), so the value is independent of `threads`.
double sup_gradient_quantile(const Dataset& data, const NBModel& truth, double alpha,
                             int mc_reps, std::uint64_t seed, unsigned threads = 1);

/// c times sup_gradient_quantile. Throws ConfigError when mc_reps < 100.
double lambda_exact(const Dataset& data, const NBModel& truth, double c, double alpha,
                    int mc_reps, std::uint64_t seed, unsigned threads = 1);

/// k-th smallest element with k = ceil(level * m), the inverted-CDF quantile.
double lower_quantile(std::vector<double> values, double level);

struct PilotResult {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  bool converged = false;
  Warnings warnings;
};

/// Plug-in estimate of beta* for data-mode penalty rules: one fit at the
/// asymptotic level with v_n evaluated at beta = 0, i.e. v_i = sqrt(r / (1 + r)).
PilotResult pilot_beta(const Dataset& data, double r, double c = 1.1, double alpha = 0.05,
                       const FitConfig& base = {});

}  // namespace nbreg
