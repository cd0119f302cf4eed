#include "nbreg/experiments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nbreg/io.hpp"
#include "nbreg/report.hpp"

namespace nbreg {
namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ca = a.array() - a.mean();
  const Eigen::ArrayXd cb = b.array() - b.mean();
  return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

Dataset section3_data(Index n, Index p, Index s, double r, std::uint64_t seed,
                      Eigen::VectorXd* truth_out = nullptr) {
  const Eigen::MatrixXd X = gen_design(n, p, 0.5, seed);
  const Eigen::VectorXd beta = gen_truth(p, s, -1.0, 1.0, seed + 1);
  if (truth_out) *truth_out = beta;
  Rng rng(seed + 2);
  return Dataset(X, sample_responses(X, NBModel{r, beta}, rng), true);
}

TEST(GenDesignTest, CorrelationStructure) {
  const Index n = 5000;
  const Eigen::MatrixXd indep = gen_design(n, 4, 0.0, 1);
  const double band = 3.0 / std::sqrt(static_cast<double>(n));
  EXPECT_LE(std::abs(correlation(indep.col(0), indep.col(1))), band);
  EXPECT_LE(std::abs(correlation(indep.col(2), indep.col(3))), band);

  const Eigen::MatrixXd ar = gen_design(n, 4, 0.5, 2);
  for (Index j = 0; j + 1 < 4; ++j) {
    EXPECT_NEAR(correlation(ar.col(j), ar.col(j + 1)), 0.5, band);
  }
  EXPECT_NEAR(correlation(ar.col(0), ar.col(2)), 0.25, band);
  for (Index j = 0; j < 4; ++j) {
    EXPECT_LE(std::abs(ar.col(j).mean()), 1e-10);
    EXPECT_NEAR(ar.col(j).squaredNorm() / n, 1.0, 1e-10);
  }
  EXPECT_TRUE(Dataset::columns_standardized(ar));
  EXPECT_THROW(gen_design(10, 3, 1.0, 1), DomainError);
}

TEST(GenTruthTest, SupportAndValues) {
  EXPECT_EQ(gen_truth(10, 0, -1.0, 1.0, 1).lpNorm<Eigen::Infinity>(), 0.0);
  const Eigen::VectorXd full = gen_truth(6, 6, -1.0, 1.0, 2);
  EXPECT_EQ((full.array() != 0.0).count(), 6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd beta = gen_truth(30, 5, -1.0, 1.0, seed);
    EXPECT_EQ((beta.array() != 0.0).count(), 5);
    for (double b : beta) {
      if (b != 0.0) {
        EXPECT_GE(std::abs(b), 0.1);
        EXPECT_LE(std::abs(b), 1.0);
      }
    }
  }
  EXPECT_EQ(gen_truth(30, 5, -1.0, 1.0, 3), gen_truth(30, 5, -1.0, 1.0, 3));
}

TEST(MetricsTest, Examples) {
  Eigen::VectorXd truth(4), hat(4);
  truth << 1.0, -2.0, 0.0, 0.0;
  const Metrics same = metrics(truth, truth);
  EXPECT_EQ(same.l1_error, 0.0);
  EXPECT_EQ(same.sensitivity, 1.0);
  EXPECT_EQ(same.specificity, 1.0);

  hat << 0.5, 0.0, 0.3, 0.0;
  const Metrics mixed = metrics(hat, truth);
  EXPECT_DOUBLE_EQ(mixed.sensitivity, 0.5);
  EXPECT_DOUBLE_EQ(mixed.specificity, 0.5);
  EXPECT_DOUBLE_EQ(mixed.l1_error, 0.5 + 2.0 + 0.3);

  const Eigen::VectorXd beta = gen_truth(30, 5, -1.0, 1.0, 4);
  const Metrics zero = metrics(Eigen::VectorXd::Zero(30), beta);
  EXPECT_EQ(zero.sensitivity, 0.0);
  EXPECT_EQ(zero.specificity, 1.0);

  const Metrics empty = metrics(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  EXPECT_EQ(empty.sensitivity, 1.0);
  EXPECT_THROW(metrics(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)), DomainError);
}

TEST(PredictionErrorTest, Examples) {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 0.0;
  Eigen::VectorXd y(2);
  y << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(prediction_error(NBModel{1.0, Eigen::VectorXd::Zero(1)}, Dataset(X, y)), 1.0);

  Eigen::MatrixXd Xe(2, 1);
  Xe << std::log(3.0), std::log(5.0);
  Eigen::VectorXd ye(2);
  ye << 3.0, 5.0;
  EXPECT_NEAR(prediction_error(NBModel{1.0, Eigen::VectorXd::Ones(1)}, Dataset(Xe, ye)), 0.0, 1e-24);

  // Constant model at the sample mean: biased sample variance.
  Eigen::VectorXd yc(5);
  yc << 1, 4, 0, 2, 8;
  const double mean = yc.mean();
  Eigen::MatrixXd Xc = Eigen::MatrixXd::Constant(5, 1, std::log(mean));
  const double var = (yc.array() - mean).square().mean();
  EXPECT_NEAR(prediction_error(NBModel{1.0, Eigen::VectorXd::Ones(1)}, Dataset(Xc, yc)), var, 1e-12);
}

TEST(MeanDevianceTest, ZeroAtPerfectFitAndPositiveOtherwise) {
  Eigen::MatrixXd X(2, 1);
  X << std::log(3.0), std::log(5.0);
  Eigen::VectorXd y(2);
  y << 3.0, 5.0;
  EXPECT_NEAR(mean_deviance(NBModel{2.0, Eigen::VectorXd::Ones(1)}, Dataset(X, y)), 0.0, 1e-12);
  EXPECT_GT(mean_deviance(NBModel{2.0, Eigen::VectorXd::Zero(1)}, Dataset(X, y)), 0.0);
  y << 0.0, 0.0;
  EXPECT_GT(mean_deviance(NBModel{2.0, Eigen::VectorXd::Ones(1)}, Dataset(X, y)), 0.0);
}

ScenarioSpec small_scenario() {
  ScenarioSpec spec;
  spec.n = 100;
  spec.p = 10;
  spec.s = 3;
  spec.reps = 6;
  spec.seed = 42;
  return spec;
}

TEST(RunScenarioTest, DeterministicAndScheduleIndependent) {
  const ScenarioSpec spec = small_scenario();
  const MetricsSummary a = run_scenario(spec, 1);
  const MetricsSummary b = run_scenario(spec, 4);
  ASSERT_EQ(a.per_rep.size(), b.per_rep.size());
  for (std::size_t k = 0; k < a.per_rep.size(); ++k) {
    EXPECT_EQ(a.per_rep[k].l1_error, b.per_rep[k].l1_error);
  }
  EXPECT_EQ(a.est_error_mean, b.est_error_mean);
  EXPECT_EQ(a.reps, 6);
  EXPECT_GE(a.est_error_sd, 0.0);
  EXPECT_GE(a.sensitivity, 0.0);
  EXPECT_LE(a.specificity, 1.0);

  ScenarioSpec other = spec;
  other.seed = 43;
  EXPECT_NE(run_scenario(other, 2).est_error_mean, a.est_error_mean);
}

TEST(RunScenarioTest, ExactAndFixedRules) {
  ScenarioSpec spec = small_scenario();
  spec.reps = 3;
  spec.penalty.kind = PenaltyKind::Exact;
  spec.penalty.mc_reps = 200;
  const MetricsSummary exact = run_scenario(spec, 2);
  EXPECT_GT(exact.mean_lambda, 0.0);
  spec.penalty.kind = PenaltyKind::Fixed;
  spec.penalty.lambda = 1e3;
  const MetricsSummary fixed = run_scenario(spec, 2);
  EXPECT_EQ(fixed.sensitivity, 0.0);
  EXPECT_EQ(fixed.specificity, 1.0);
  EXPECT_DOUBLE_EQ(fixed.mean_lambda, 1e3);
}

TEST(ScenarioSpecTest, Validation) {
  ScenarioSpec spec;
  spec.s = 31;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = ScenarioSpec{};
  spec.reps = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = ScenarioSpec{};
  spec.r = -1.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(CrossValidateTest, ShapeAndSingleLambda) {
  const Dataset data = section3_data(120, 10, 3, 2.0, 5);
  CVSpec cv;
  cv.folds = 5;
  cv.grid_size = 8;
  cv.seed = 1;
  const CVResult result = cross_validate(data, 2.0, cv, {}, 3);
  ASSERT_EQ(result.table.size(), 8u);
  for (std::size_t k = 0; k < result.table.size(); ++k) {
    const auto& row = result.table[k];
    ASSERT_EQ(row.fold_scores.size(), 5u);
    double sum = 0.0;
    for (double v : row.fold_scores) sum += v;
    EXPECT_NEAR(row.mean_score, sum / 5.0, 1e-12);
    if (k > 0) EXPECT_LT(row.lambda, result.table[k - 1].lambda);
  }
  const auto best = std::min_element(result.table.begin(), result.table.end(),
                                     [](const CVRow& a, const CVRow& b) {
                                       return a.mean_score < b.mean_score;
                                     });
  EXPECT_EQ(result.lambda_star, best->lambda);

  cv.lambda_grid = {0.05};
  EXPECT_EQ(cross_validate(data, 2.0, cv).lambda_star, 0.05);

  CVSpec serial = cv;
  serial.lambda_grid.clear();
  EXPECT_EQ(cross_validate(data, 2.0, serial, {}, 1).lambda_star,
            cross_validate(data, 2.0, serial, {}, 4).lambda_star);

  cv.folds = 1;
  EXPECT_THROW(cross_validate(data, 2.0, cv), ConfigError);
}

TEST(CrossValidateTest, NearOracleHeldOutDeviance) {
  const Dataset train = section3_data(400, 10, 3, 2.0, 6);
  // Fresh responses on a fresh design from the same truth.
  Eigen::VectorXd truth;
  section3_data(400, 10, 3, 2.0, 6, &truth);
  const Eigen::MatrixXd Xt = gen_design(2000, 10, 0.5, 1006);
  Rng rng(7);
  const Dataset test(Xt, sample_responses(Xt, NBModel{2.0, truth}, rng), true);

  CVSpec cv;
  cv.seed = 8;
  const CVResult result = cross_validate(train, 2.0, cv, {}, 4);
  double best = 1e300, chosen = 0.0;
  for (const auto& row : result.table) {
    FitConfig config;
    config.lambda = row.lambda;
    const double dev = mean_deviance(NBModel{2.0, fit(train, 2.0, config).beta_hat}, test);
    best = std::min(best, dev);
    if (row.lambda == result.lambda_star) chosen = dev;
  }
  EXPECT_LE(chosen, 1.05 * best);
}

TEST(CrossValidateTest, ZeroSignalGivesSparseFits) {
  std::vector<double> false_positives;
  for (std::uint64_t seed = 0; seed < 7; ++seed) {
    const Eigen::MatrixXd X = gen_design(200, 20, 0.5, 100 + seed);
    Rng rng(200 + seed);
    const Dataset data(X, sample_responses(X, NBModel{1.0, Eigen::VectorXd::Zero(20)}, rng), true);
    CVSpec cv;
    cv.seed = seed;
    const CVResult result = cross_validate(data, 1.0, cv, {}, 4);
    FitConfig config;
    config.lambda = result.lambda_star;
    false_positives.push_back(static_cast<double>(fit(data, 1.0, config).active_set.size()));
  }
  std::nth_element(false_positives.begin(), false_positives.begin() + 3, false_positives.end());
  EXPECT_LE(false_positives[3], 2.0);
}

Dataset raw_counts(Index n, std::uint64_t seed) {
  // Unstandardized covariates with nonzero means and scales.
  Eigen::MatrixXd X = gen_design(n, 8, 0.3, seed);
  for (Index j = 0; j < X.cols(); ++j) {
    X.col(j) = X.col(j) * (1.0 + j) + Eigen::VectorXd::Constant(n, 2.0 * j);
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(8);
  beta[0] = 0.4;
  beta[3] = -0.1;
  Eigen::MatrixXd Xc = X;
  for (Index j = 0; j < X.cols(); ++j) Xc.col(j).array() -= 2.0 * j;
  Rng rng(seed + 1);
  return Dataset(X, sample_responses(Xc, NBModel{1.0, beta}, rng));
}

TEST(PipelineTest, DeterministicAndShaped) {
  const Dataset data = raw_counts(400, 9);
  SplitSpec split{200, 150, 3};
  CVSpec cv;
  cv.folds = 5;
  cv.grid_size = 10;
  cv.seed = 4;
  const PipelineReport a = train_test_pipeline(data, 1.0, split, cv, {}, true, {}, 1);
  const PipelineReport b = train_test_pipeline(data, 1.0, split, cv, {}, true, {}, 4);
  EXPECT_EQ(dump_json(to_json(a)), dump_json(to_json(b)));
  EXPECT_EQ(a.train_rows.size(), 200u);
  EXPECT_EQ(a.test_rows.size(), 150u);
  std::vector<Index> all = a.train_rows;
  all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());

  ASSERT_EQ(a.names.size(), 9u);
  EXPECT_EQ(a.names.front(), "Intercept");
  EXPECT_EQ(a.penalized.size(), 9);
  EXPECT_GT(a.pe_penalized, 0.0);
  EXPECT_GT(a.pe_mle, 0.0);

  const auto rows = table2_rows(a);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows.front().label, "PE");
  EXPECT_DOUBLE_EQ(*rows.front().penalized, a.pe_penalized);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].label, a.names[k - 1]);
    EXPECT_EQ(rows[k].penalized.has_value(), a.penalized[static_cast<Index>(k - 1)] != 0.0);
  }

  split.seed = 5;
  EXPECT_NE(dump_json(to_json(train_test_pipeline(data, 1.0, split, cv))), dump_json(to_json(a)));
}

TEST(PipelineTest, InsufficientRowsIsConfigError) {
  const Dataset data = raw_counts(100, 10);
  EXPECT_THROW(train_test_pipeline(data, 1.0, SplitSpec{80, 40, 1}, CVSpec{}), ConfigError);
}

}  // namespace
}  // namespace nbreg
