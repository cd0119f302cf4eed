#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "nbreg/model.hpp"
#include "nbreg/solver.hpp"

namespace nbreg {

struct ConditionOptions {
  double gamma = 3.0;        ///< cone parameter, > 1
  int n_cone_samples = 2000;
  std::uint64_t seed = 0;
  double lambda = 0.0;       ///< level tested against the smallness hypothesis
  double c = 1.1;
};

/// Empirical check of sparsity, bounded design, the dimension range and the
/// restricted-eigenvalue condition at beta*.
struct ConditionReport {
  Index n = 0;
  Index p = 0;
  Index s = 0;
  double R = 0.0;           ///< max_ij |x_ij|
  /// Minimum of <d, H d> / ||d_S||^2 over sampled cone directions. Sampling can
  /// only overestimate the true constant, so this is an upper bound on phi_0^2.
  double re_phi0_sq = 0.0;
  double gamma = 0.0;
  bool sparsity_ok = false;          ///< s < n
  bool c3_ok = false;                ///< sqrt(n) < p
  bool lambda_smallness_ok = false;  ///< lambda s <= (c-1)^2 phi0^2 / (6 c R (c+1))
  bool support_empty = false;        ///< S empty; re_phi0_sq taken over the full sphere
  int n_cone_samples = 0;
  double lambda = 0.0;
  double c = 0.0;
};

ConditionReport check_conditions(const Dataset& data, const NBModel& truth,
                                 const ConditionOptions& options);

/// Smallest <d, H d> / ||d_S||^2 found for the Hessian H over sampled cone
/// directions {||d_{S^c}||_1 <= gamma ||d_S||_1}. For each sampled d_S and
/// l1-sphere direction u on S^c the ray d_S + t u is minimized exactly over
/// t in [0, gamma ||d_S||_1]; with a fixed seed the estimate is therefore
/// non-increasing in gamma.
double cone_restricted_eigenvalue(const Eigen::MatrixXd& hessian,
                                  const std::vector<Index>& support, double gamma,
                                  int samples, std::uint64_t seed);

struct TheoremLedger {
  double c = 0.0;
  double c1 = 0.0;
  double lambda = 0.0;
  double C = 0.0;        ///< 2 c1 c (c+1) / (c-1)^2
  double R_tilde = 0.0;  ///< 2 c R sqrt(s) / (c-1)
  double h = 0.0;        ///< 2 c (c+1) lambda R s / ((c-1)^2 phi0^2)
  double bound_l1 = 0.0;    ///< C lambda s / phi0^2
  double bound_loss = 0.0;  ///< C lambda^2 s / phi0^2
  bool hypothesis_met = false;  ///< h <= 1/3
};

/// Throws DomainError when c <= 1 or c1 is outside (2, 3].
TheoremLedger theorem_ledger(const ConditionReport& report, double lambda, double c,
                             double c1 = 3.0);

struct BoundCheck {
  bool l1_ok = false;
  bool loss_ok = false;
  bool cone_ok = false;
  double slack_l1 = 0.0;    ///< bound_l1 - ||beta_hat - beta*||_1
  double slack_loss = 0.0;  ///< bound_loss - |L(beta_hat) - L(beta*)|
  double l1_error = 0.0;
  double loss_gap = 0.0;
  double sup_gradient = 0.0;   ///< V at beta*
  bool event_holds = false;    ///< lambda >= c V
  bool hypothesis_met = false; ///< smallness condition; bounds are only claimed when true
};

BoundCheck verify_bounds(const Dataset& data, const NBModel& truth, const FitResult& fit,
                         const TheoremLedger& ledger);

struct TailRow {
  double a = 0.0;
  double exceedance = 0.0;  ///< empirical P(|eps_i| > a)
};

struct TailDiagnostic {
  std::vector<TailRow> rows;
  /// Log-linear fit of log P(|eps| > a) against a on the upper half of the
  /// grid: slope -1/w1.
  double w1 = 0.0;
  double r_squared = 0.0;
  int tail_points = 0;
};

/// Exceedance frequencies of standardized residuals under fresh responses drawn
/// from `model`. Requires mc_reps >= 10^4.
TailDiagnostic tail_diagnostic(const NBModel& model, const Dataset& data,
                               const std::vector<double>& a_grid, int mc_reps,
                               std::uint64_t seed, unsigned threads = 1);

}  // namespace nbreg
