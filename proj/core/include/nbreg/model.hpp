#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "nbreg/errors.hpp"
#include "nbreg/random.hpp"

namespace nbreg {

using Index = Eigen::Index;

/// Covariates and count responses. Construction validates the invariants: y
/// non-negative and integer-valued, matching row counts, and, when
/// `standardized` is set, every column with mean 0 and mean square 1.
class Dataset {
 public:
  static constexpr double kMeanTolerance = 1e-10;
  static constexpr double kMeanSquareTolerance = 1e-8;

  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y, bool standardized = false);

  const Eigen::MatrixXd& X() const noexcept { return X_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  Index n() const noexcept { return X_.rows(); }
  Index p() const noexcept { return X_.cols(); }
  bool standardized() const noexcept { return standardized_; }

  /// Rows in the given order, standardized flag dropped.
  Dataset rows(const std::vector<Index>& index) const;

  /// True when every listed column satisfies the standardization invariant.
  static bool columns_standardized(const Eigen::MatrixXd& X,
                                   const std::vector<Index>& skip = {});

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  bool standardized_;
};

/// NB(r, mu_i) regression model with mu_i = exp(x_i' beta).
struct NBModel {
  double r = 1.0;
  Eigen::VectorXd beta;

  /// Throws DomainError unless r > 0 (finite) and every beta_j is finite.
  void validate() const;
};

struct LinearPredictor {
  Eigen::VectorXd eta;
  Eigen::VectorXd mu;
};

LinearPredictor linear_predictor(const NBModel& model, const Dataset& data);

/// Log of the NB(r, mu) probability mass at y, evaluated with log-gamma.
double nb_log_pmf(std::uint64_t y, double r, double mu);
double nb_pmf(std::uint64_t y, double r, double mu);

/// One draw from NB(r, mu) as the gamma-Poisson mixture
/// g ~ Gamma(r, mu / r), y ~ Poisson(g).
std::uint64_t nb_sample(double r, double mu, Rng& rng);

/// Fresh response vector y_i ~ NB(r, exp(x_i' beta)) for the rows of X.
Eigen::VectorXd sample_responses(const Eigen::MatrixXd& X, const NBModel& model,
                                 Rng& rng);

/// Negative mean log-likelihood
///   L(beta) = -1/n sum_i [ y_i (eta_i - ln(r + e^eta_i)) - r ln(r + e^eta_i) ].
double loss(const NBModel& model, const Dataset& data);

/// Gradient of `loss`, -1/n sum_i x_i r (y_i - mu_i) / (r + mu_i).
Eigen::VectorXd gradient(const NBModel& model, const Dataset& data);

/// The same gradient assembled as -1/n sum_i x_i v_i eps_i from the variance
/// weights and standardized residuals. Used as a cross-check of `gradient`.
Eigen::VectorXd gradient_factored(const NBModel& model, const Dataset& data);

/// d^2 L[v, v] = 1/n sum (x_i'v)^2 r mu_i (y_i + r) / (r + mu_i)^2. Never negative.
double hessian_quadratic_form(const NBModel& model, const Dataset& data,
                              const Eigen::VectorXd& v);

/// Full p x p Hessian of L at the model's beta.
Eigen::MatrixXd hessian_matrix(const NBModel& model, const Dataset& data);

/// d^3 L[u, v, v] = 1/n sum (x_i'u)(x_i'v)^2 r mu_i (y_i + r)(r - mu_i) / (r + mu_i)^3.
double third_derivative_form(const NBModel& model, const Dataset& data,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// eps_i = (y_i - mu_i) / sqrt(mu_i (r + mu_i) / r).
Eigen::VectorXd standardized_residuals(const NBModel& model, const Dataset& data);

struct VWeights {
  Eigen::VectorXd v;  ///< v_i = sqrt(r mu_i / (mu_i + r))
  double v_max = 0.0; ///< v_n = max_i v_i
};

VWeights v_weights(const NBModel& model, const Dataset& data);

/// Building blocks shared with the solver, operating on a precomputed eta.
namespace detail {

/// ln(r + e^eta) without overflow for large |eta|.
double log_r_plus_exp(double eta, double r) noexcept;

double loss_from_eta(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, double r);

/// Per-observation factor r (y_i - mu_i) / (r + mu_i); gradient = -X' w / n.
Eigen::VectorXd score_weights(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                              double r);

/// Per-observation curvature r mu_i (y_i + r) / (r + mu_i)^2.
Eigen::VectorXd curvature_weights(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                                  double r);

void check_model_matches(const NBModel& model, const Dataset& data);

}  // namespace detail

}  // namespace nbreg
