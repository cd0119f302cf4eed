#include "nbreg/experiments.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nbreg/io.hpp"

namespace nbreg {

namespace {

// Fixed stream indices inside one replication.
enum Stream : std::uint64_t { kDesign = 0, kTruth = 1, kResponse = 2, kPenalty = 3, kFolds = 4 };

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<Index> shuffled_indices(Index n, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

double cv_score(CVScore score, const NBModel& model, const Dataset& held_out) {
  return score == CVScore::Deviance ? mean_deviance(model, held_out)
                                    : prediction_error(model, held_out);
}

}  // namespace

std::string_view to_string(CVScore score) {
  return score == CVScore::Deviance ? "deviance" : "prediction_error";
}

CVScore cv_score_from_string(std::string_view name) {
  if (name == "deviance") return CVScore::Deviance;
  if (name == "prediction_error" || name == "pe" || name == "mse") return CVScore::PredictionError;
  throw ConfigError("unknown CV score '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  if (n < 2 || p < 1) throw ConfigError("scenario needs n >= 2 and p >= 1");
  if (s < 0 || s > p) throw ConfigError("scenario sparsity must satisfy 0 <= s <= p");
  if (!(r > 0.0)) throw ConfigError("scenario dispersion r must be positive");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("scenario rho must satisfy |rho| < 1");
  if (!(beta_lo < beta_hi)) throw ConfigError("scenario beta range is empty");
  if (s > 0 && std::max(std::abs(beta_lo), std::abs(beta_hi)) < 0.1) {
    throw ConfigError("beta range admits no value with |value| >= 0.1");
  }
  if (reps < 1) throw ConfigError("scenario reps must be >= 1");
  penalty.validate();
  fit.validate();
}

Eigen::MatrixXd gen_design(Index n, Index p, double rho, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("rho must satisfy |rho| < 1");
  if (n < 2 || p < 1) throw DomainError("design needs n >= 2 and p >= 1");
  Eigen::MatrixXd sigma(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index k = 0; k < p; ++k) sigma(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const Eigen::MatrixXd lower = llt.matrixL();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd Z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) Z(i, j) = normal(rng);
  }
  const Eigen::MatrixXd X = Z * lower.transpose();
  return standardize(Dataset(X, Eigen::VectorXd::Zero(n))).data.X();
}

Eigen::VectorXd gen_truth(Index p, Index s, double lo, double hi, std::uint64_t seed) {
  if (s < 0 || s > p) throw DomainError("sparsity must satisfy 0 <= s <= p");
  if (s > 0 && std::max(std::abs(lo), std::abs(hi)) < 0.1) {
    throw DomainError("beta range admits no value with |value| >= 0.1");
  }
  Rng rng(seed);
  std::vector<Index> positions(static_cast<std::size_t>(p));
  std::iota(positions.begin(), positions.end(), Index{0});
  std::shuffle(positions.begin(), positions.end(), rng);
  std::uniform_real_distribution<double> value(lo, hi);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Index k = 0; k < s; ++k) {
    double v;
    do {
      v = value(rng);
    } while (std::abs(v) < 0.1);
    beta[positions[static_cast<std::size_t>(k)]] = v;
  }
  return beta;
}

Metrics metrics(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true) {
  if (beta_hat.size() != beta_true.size()) throw DomainError("coefficient length mismatch");
  Metrics m;
  m.l1_error = (beta_hat - beta_true).lpNorm<1>();
  Index support = 0, hit = 0, null = 0, null_kept = 0;
  for (Index j = 0; j < beta_true.size(); ++j) {
    const bool truth = beta_true[j] != 0.0;
    const bool selected = beta_hat[j] != 0.0;
    if (truth) {
      ++support;
      if (selected) ++hit;
    } else {
      ++null;
      if (!selected) ++null_kept;
    }
  }
  m.sensitivity = support == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(support);
  m.specificity = null == 0 ? 1.0 : static_cast<double>(null_kept) / static_cast<double>(null);
  return m;
}

MetricsSummary run_scenario(const ScenarioSpec& spec, unsigned threads) {
  spec.validate();
  struct Outcome {
    Metrics metrics;
    double lambda = 0.0;
    bool converged = false;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(spec.reps));

  parallel_for(outcomes.size(), threads, [&](std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(spec.seed, rep);
    const Eigen::MatrixXd X = gen_design(spec.n, spec.p, spec.rho, derive_seed(rep_seed, kDesign));
    const NBModel truth{spec.r, gen_truth(spec.p, spec.s, spec.beta_lo, spec.beta_hi,
                                          derive_seed(rep_seed, kTruth))};
    Rng response_rng(derive_seed(rep_seed, kResponse));
    Eigen::VectorXd y = sample_responses(X, truth, response_rng);
    const Dataset data(X, std::move(y), true);

    double lambda = 0.0;
    switch (spec.penalty.kind) {
      case PenaltyKind::Asymptotic:
        lambda = lambda_asymptotic(v_weights(truth, data).v_max, spec.n, spec.p, spec.penalty.c,
                                   spec.penalty.alpha);
        break;
      case PenaltyKind::Exact:
        lambda = lambda_exact(data, truth, spec.penalty.c, spec.penalty.alpha,
                              spec.penalty.mc_reps, derive_seed(rep_seed, kPenalty));
        break;
      case PenaltyKind::Fixed:
        lambda = spec.penalty.lambda;
        break;
      case PenaltyKind::CrossValidated: {
        CVSpec cv = spec.cv;
        cv.seed = derive_seed(rep_seed, kFolds);
        lambda = cross_validate(data, spec.r, cv, spec.fit).lambda_star;
        break;
      }
    }

    FitConfig config = spec.fit;
    config.lambda = lambda;
    const FitResult result = fit(data, spec.r, config);
    outcomes[rep] = {metrics(result.beta_hat, truth.beta), lambda, result.converged};
  });

  MetricsSummary summary;
  summary.reps = spec.reps;
  std::vector<double> errors, sens, spec_values, lambdas;
  for (const Outcome& o : outcomes) {
    if (!o.converged) continue;
    ++summary.converged;
    summary.per_rep.push_back(o.metrics);
    errors.push_back(o.metrics.l1_error);
    sens.push_back(o.metrics.sensitivity);
    spec_values.push_back(o.metrics.specificity);
    lambdas.push_back(o.lambda);
  }
  if (static_cast<double>(summary.converged) < 0.8 * static_cast<double>(spec.reps)) {
    throw NumericError("only " + std::to_string(summary.converged) + " of " +
                       std::to_string(spec.reps) + " replications converged");
  }
  summary.est_error_mean = mean_of(errors);
  summary.est_error_sd = sample_sd(errors);
  summary.sensitivity = mean_of(sens);
  summary.specificity = mean_of(spec_values);
  summary.mean_lambda = mean_of(lambdas);
  return summary;
}

double mean_deviance(const NBModel& model, const Dataset& data) {
  const LinearPredictor lp = linear_predictor(model, data);
  const double r = model.r;
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const double y = data.y()[i];
    const double mu = lp.mu[i];
    const double first = y > 0.0 ? y * std::log(y / mu) : 0.0;
    total += 2.0 * (first - (y + r) * std::log((y + r) / (mu + r)));
  }
  return total / static_cast<double>(data.n());
}

double prediction_error(const NBModel& model, const Dataset& test) {
  const LinearPredictor lp = linear_predictor(model, test);
  return (test.y() - lp.mu).squaredNorm() / static_cast<double>(test.n());
}

double lambda_max(const Dataset& data, double r, const std::vector<Index>& unpenalized) {
  if (unpenalized.empty()) return lambda_max(data, r);
  FitConfig config;
  config.lambda = std::numeric_limits<double>::max() / 4.0;
  config.unpenalized = unpenalized;
  config.tol_kkt = 1e-10;
  const FitResult base = fit(data, r, config);
  Eigen::VectorXd grad = gradient(NBModel{r, base.beta_hat}, data);
  for (Index j : unpenalized) grad[j] = 0.0;
  return grad.lpNorm<Eigen::Infinity>();
}

std::vector<double> cv_grid(const Dataset& data, double r, const CVSpec& cv,
                            const std::vector<Index>& unpenalized) {
  std::vector<double> grid = cv.lambda_grid;
  if (grid.empty()) {
    if (cv.grid_size < 1) throw ConfigError("grid_size must be positive");
    if (!(cv.grid_ratio > 0.0 && cv.grid_ratio < 1.0)) {
      throw ConfigError("grid_ratio must lie in (0, 1)");
    }
    const double top = lambda_max(data, r, unpenalized);
    if (cv.grid_size == 1) {
      grid.push_back(top);
    } else {
      for (int k = 0; k < cv.grid_size; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(cv.grid_size - 1);
        grid.push_back(top * std::pow(cv.grid_ratio, frac));
      }
    }
  }
  for (double l : grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda grid values must be >= 0");
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  return grid;
}

CVResult cross_validate(const Dataset& data, double r, const CVSpec& cv, const FitConfig& base,
                        unsigned threads) {
  if (cv.folds < 2 || cv.folds > data.n()) throw ConfigError("folds must satisfy 2 <= folds <= n");
  const std::vector<double> grid = cv_grid(data, r, cv, base.unpenalized);
  const std::vector<Index> order = shuffled_indices(data.n(), cv.seed);
  std::vector<int> fold_of(static_cast<std::size_t>(data.n()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    fold_of[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(cv.folds));
  }

  // scores[fold][grid index]
  std::vector<std::vector<double>> scores(static_cast<std::size_t>(cv.folds),
                                          std::vector<double>(grid.size()));
  parallel_for(scores.size(), threads, [&](std::size_t fold) {
    std::vector<Index> train, held;
    for (Index i = 0; i < data.n(); ++i) {
      (fold_of[static_cast<std::size_t>(i)] == static_cast<int>(fold) ? held : train).push_back(i);
    }
    const Dataset train_data = data.rows(train);
    const Dataset held_data = data.rows(held);
    std::optional<Eigen::VectorXd> warm;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      FitConfig config = base;
      config.lambda = grid[g];
      FitResult result = fit(train_data, r, config, warm);
      scores[fold][g] = cv_score(cv.score, NBModel{r, result.beta_hat}, held_data);
      warm = std::move(result.beta_hat);
    }
  });

  CVResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CVRow row;
    row.lambda = grid[g];
    for (const auto& fold_scores : scores) row.fold_scores.push_back(fold_scores[g]);
    row.mean_score = mean_of(row.fold_scores);
    // Descending grid and strict comparison keep the larger lambda on ties.
    if (row.mean_score < best) {
      best = row.mean_score;
      out.lambda_star = row.lambda;
    }
    out.table.push_back(std::move(row));
  }
  if (!std::isfinite(best)) out.lambda_star = grid.front();
  return out;
}

PipelineReport train_test_pipeline(const Dataset& data, double r, const SplitSpec& split,
                                   const CVSpec& cv,
                                   const std::vector<std::string>& covariate_names, bool intercept,
                                   const FitConfig& base, unsigned threads) {
  if (split.train_size < 2 || split.test_size < 1) {
    throw ConfigError("split needs train_size >= 2 and test_size >= 1");
  }
  if (split.train_size + split.test_size > data.n()) {
    throw ConfigError("train_size + test_size exceeds the " + std::to_string(data.n()) +
                      " available rows");
  }
  if (!covariate_names.empty() && static_cast<Index>(covariate_names.size()) != data.p()) {
    throw ConfigError("covariate name count does not match design columns");
  }
  PipelineReport report;
  const std::vector<Index> order = shuffled_indices(data.n(), split.seed);
  report.train_rows.assign(order.begin(), order.begin() + split.train_size);
  report.test_rows.assign(order.begin() + split.train_size,
                          order.begin() + split.train_size + split.test_size);

  const Dataset raw_train = data.rows(report.train_rows);
  const Dataset raw_test = data.rows(report.test_rows);
  const StandardizedData standardized = standardize(raw_train);
  if (standardized.record.any_constant()) {
    report.warnings.emplace_back("constant covariate columns in the training rows");
  }
  Eigen::MatrixXd Xtrain = standardized.data.X();
  Eigen::MatrixXd Xtest = apply_standardization(standardized.record, raw_test.X());
  FitConfig config = base;
  if (intercept) {
    Xtrain = with_intercept(Xtrain);
    Xtest = with_intercept(Xtest);
    config.unpenalized.push_back(0);
    report.names.emplace_back("Intercept");
  }
  for (Index j = 0; j < data.p(); ++j) {
    report.names.push_back(covariate_names.empty() ? "x" + std::to_string(j + 1)
                                                   : covariate_names[static_cast<std::size_t>(j)]);
  }
  const Dataset train(std::move(Xtrain), raw_train.y());
  const Dataset test(std::move(Xtest), raw_test.y());

  report.cv = cross_validate(train, r, cv, config, threads);

  config.lambda = report.cv.lambda_star;
  FitResult penalized = fit(train, r, config);
  report.penalized_converged = penalized.converged;
  for (auto& w : penalized.warnings) report.warnings.push_back("penalized fit: " + w);
  report.penalized = std::move(penalized.beta_hat);

  FitConfig mle_config = base;
  mle_config.lambda = 0.0;
  mle_config.unpenalized = config.unpenalized;
  FitResult mle = fit(train, r, mle_config);
  report.mle_converged = mle.converged;
  for (auto& w : mle.warnings) report.warnings.push_back("unpenalized fit: " + w);
  report.mle = std::move(mle.beta_hat);

  report.pe_penalized = prediction_error(NBModel{r, report.penalized}, test);
  report.pe_mle = prediction_error(NBModel{r, report.mle}, test);
  return report;
}

std::vector<Table2Row> table2_rows(const PipelineReport& report) {
  std::vector<Table2Row> rows;
  rows.push_back({"PE", report.pe_penalized, report.pe_mle});
  auto blank_zero = [](double v) -> std::optional<double> {
    if (v == 0.0) return std::nullopt;
    return v;
  };
  for (std::size_t j = 0; j < report.names.size(); ++j) {
    const auto idx = static_cast<Index>(j);
    rows.push_back({report.names[j], blank_zero(report.penalized[idx]), blank_zero(report.mle[idx])});
  }
  return rows;
}

}  // namespace nbreg
