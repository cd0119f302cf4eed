#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nbreg/model.hpp"
#include "nbreg/penalty.hpp"
#include "nbreg/solver.hpp"

namespace nbreg {

enum class CVScore { Deviance, PredictionError };

std::string_view to_string(CVScore score);
CVScore cv_score_from_string(std::string_view name);

struct CVSpec {
  int folds = 10;
  /// Candidate levels. Empty: `grid_size` log-spaced levels from lambda_max
  /// down to lambda_max * grid_ratio.
  std::vector<double> lambda_grid;
  int grid_size = 20;
  double grid_ratio = 1e-3;
  CVScore score = CVScore::Deviance;
  std::uint64_t seed = 0;
};

/// One cell of the simulation grid.
struct ScenarioSpec {
  Index n = 100;
  Index p = 30;
  double r = 2.0;
  double rho = 0.5;
  Index s = 5;
  double beta_lo = -1.0;
  double beta_hi = 1.0;
  int reps = 100;
  std::uint64_t seed = 1;
  PenaltyChoice penalty;
  CVSpec cv;  ///< used when penalty.kind is CrossValidated
  FitConfig fit;

  void validate() const;
};

struct Metrics {
  double l1_error = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

struct MetricsSummary {
  double est_error_mean = 0.0;
  double est_error_sd = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  int reps = 0;
  int converged = 0;       ///< replications whose fit met tol_kkt
  double mean_lambda = 0.0;
  std::vector<Metrics> per_rep;  ///< converged replications, in replication order
};

/// n x p rows of N(0, Sigma) with Sigma_jk = rho^|j-k|, columns standardized.
Eigen::MatrixXd gen_design(Index n, Index p, double rho, std::uint64_t seed);

/// s nonzero coordinates at uniformly chosen positions with values uniform on
/// [lo, hi], redrawn while |value| < 0.1.
Eigen::VectorXd gen_truth(Index p, Index s, double lo, double hi, std::uint64_t seed);

/// l1 error, sensitivity |S_hat & S| / |S| and specificity |S_hat^c & S^c| / |S^c|.
Metrics metrics(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);

/// Replications are independent; replication k draws everything from
/// derive_seed(spec.seed, k). Throws NumericError when fewer than 80% converge.
MetricsSummary run_scenario(const ScenarioSpec& spec, unsigned threads = 1);

/// Mean NB unit deviance 2[y ln(y/mu) - (y+r) ln((y+r)/(mu+r))].
double mean_deviance(const NBModel& model, const Dataset& data);

/// Mean squared error between observed counts and fitted means.
double prediction_error(const NBModel& model, const Dataset& test);

struct CVRow {
  double lambda = 0.0;
  double mean_score = 0.0;
  std::vector<double> fold_scores;
};

struct CVResult {
  double lambda_star = 0.0;
  std::vector<CVRow> table;  ///< descending lambda
};

/// lambda_max that accounts for unpenalized coordinates: sup-norm of the
/// penalized gradient at the fit with every penalized coefficient at zero.
double lambda_max(const Dataset& data, double r, const std::vector<Index>& unpenalized);

/// Grid levels, descending. Uses cv.lambda_grid when non-empty.
std::vector<double> cv_grid(const Dataset& data, double r, const CVSpec& cv,
                            const std::vector<Index>& unpenalized = {});

/// K-fold cross validation on a uniform random fold assignment. Ties go to
/// the larger lambda.
CVResult cross_validate(const Dataset& data, double r, const CVSpec& cv,
                        const FitConfig& base = {}, unsigned threads = 1);

struct SplitSpec {
  Index train_size = 500;
  Index test_size = 500;
  std::uint64_t seed = 0;
};

struct PipelineReport {
  std::vector<std::string> names;  ///< coefficient labels, "Intercept" first when present
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
  CVResult cv;
  Eigen::VectorXd penalized;  ///< standardized-scale coefficients at lambda_star
  Eigen::VectorXd mle;        ///< unpenalized fit on the same training rows
  bool penalized_converged = false;
  bool mle_converged = false;
  double pe_penalized = 0.0;
  double pe_mle = 0.0;
  Warnings warnings;
};

/// Seeded split without replacement, standardization fitted on the training
/// rows, cross validation on train, final fit at lambda_star and a held-out
/// comparison against the unpenalized MLE.
PipelineReport train_test_pipeline(const Dataset& data, double r, const SplitSpec& split,
                                   const CVSpec& cv,
                                   const std::vector<std::string>& covariate_names = {},
                                   bool intercept = true, const FitConfig& base = {},
                                   unsigned threads = 1);

struct Table2Row {
  std::string label;
  std::optional<double> penalized;
  std::optional<double> mle;
};

/// "PE" followed by one row per coefficient; exact zeros are left blank.
std::vector<Table2Row> table2_rows(const PipelineReport& report);

}  // namespace nbreg
