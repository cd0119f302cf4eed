#include "nbreg/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"

namespace nbreg {
namespace {

Dataset column_data(std::initializer_list<double> x, std::initializer_list<double> y) {
  Eigen::VectorXd xs(static_cast<Index>(x.size()));
  Eigen::VectorXd ys(static_cast<Index>(y.size()));
  Index k = 0;
  for (double v : x) xs[k++] = v;
  k = 0;
  for (double v : y) ys[k++] = v;
  return Dataset(Eigen::MatrixXd(xs), ys);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

TEST(DatasetTest, RejectsInvalidResponses) {
  EXPECT_THROW(column_data({1.0, 2.0}, {1.0, -1.0}), DomainError);
  EXPECT_THROW(column_data({1.0, 2.0}, {1.0, 2.5}), DomainError);
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(2)), DomainError);
}

TEST(DatasetTest, StandardizedFlagIsChecked) {
  Eigen::MatrixXd X(2, 1);
  X << 1.0, -1.0;
  EXPECT_NO_THROW(Dataset(X, Eigen::VectorXd::Zero(2), true));
  X << 2.0, -1.0;
  EXPECT_THROW(Dataset(X, Eigen::VectorXd::Zero(2), true), DomainError);
}

TEST(NBModelTest, ValidatesDispersionAndCoefficients) {
  EXPECT_THROW((NBModel{0.0, Eigen::VectorXd::Zero(1)}.validate()), DomainError);
  EXPECT_THROW((NBModel{-1.0, Eigen::VectorXd::Zero(1)}.validate()), DomainError);
  Eigen::VectorXd bad(1);
  bad << std::nan("");
  EXPECT_THROW((NBModel{1.0, bad}.validate()), DomainError);
}

TEST(PmfTest, ClosedFormsAtZero) {
  EXPECT_NEAR(nb_pmf(0, 1.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(nb_pmf(0, 2.0, 2.0), 0.25, 1e-15);
}

TEST(PmfTest, MatchesProductOracle) {
  const long double oracle = oracle::nb_pmf_product(3, 0.5L, 1.7L);
  // Independently evaluated to 40 digits: 0.068738872631063272530...
  EXPECT_NEAR(static_cast<double>(oracle), 0.0687388726310632725, 1e-15);
  EXPECT_NEAR(nb_pmf(3, 0.5, 1.7), 0.0687388726310632725, 1e-13);
  for (std::uint64_t y : {0u, 1u, 7u, 40u}) {
    for (double r : {0.25, 1.0, 9.5}) {
      const double expected = static_cast<double>(oracle::nb_pmf_product(y, r, 2.3L));
      EXPECT_LE(relative_error(nb_pmf(y, r, 2.3), expected), 1e-11) << y << " " << r;
    }
  }
}

TEST(PmfTest, SumsToOne) {
  double total = 0.0;
  for (std::uint64_t y = 0; y < 2000; ++y) total += nb_pmf(y, 0.7, 4.0);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(PmfTest, DomainErrors) {
  EXPECT_THROW(nb_pmf(1, 0.0, 1.0), DomainError);
  EXPECT_THROW(nb_pmf(1, 1.0, std::nan("")), DomainError);
  EXPECT_THROW(nb_pmf(1, std::numeric_limits<double>::infinity(), 1.0), DomainError);
}

struct Moments {
  double mean;
  double variance;
};

Moments sample_moments(double r, double mu, int draws, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double y = static_cast<double>(nb_sample(r, mu, rng));
    sum += y;
    sum_sq += y * y;
  }
  const double mean = sum / draws;
  return {mean, (sum_sq - draws * mean * mean) / (draws - 1)};
}

TEST(SampleTest, MeanAndVarianceAtTwoThree) {
  const Moments m = sample_moments(2.0, 3.0, 100000, 11);
  EXPECT_NEAR(m.mean, 3.0, 0.05);
  EXPECT_NEAR(m.variance, 7.5, 0.3);
}

TEST(SampleTest, PoissonLimitForLargeDispersion) {
  const Moments m = sample_moments(1e6, 2.0, 100000, 12);
  EXPECT_NEAR(m.variance, 2.0, 0.1);
}

TEST(SampleTest, DeterministicForSeed) {
  Rng a(5), b(5);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(nb_sample(0.5, 3.0, a), nb_sample(0.5, 3.0, b));
}

TEST(LossTest, ClosedFormAtZero) {
  const Dataset two = column_data({1.0, -1.0}, {0.0, 2.0});
  EXPECT_NEAR(loss(NBModel{1.0, Eigen::VectorXd::Zero(1)}, two), 2.0 * std::log(2.0), 1e-14);
  const Dataset three = column_data({1.0, 0.0, -1.0}, {1.0, 1.0, 1.0});
  EXPECT_NEAR(loss(NBModel{2.0, Eigen::VectorXd::Zero(1)}, three), 3.0 * std::log(3.0), 1e-14);
}

TEST(LossTest, MatchesExtendedPrecisionSum) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(rng, 5, 3);
    const Dataset data(inst.X, inst.y);
    const double expected = static_cast<double>(oracle::loss(inst.X, inst.y, inst.r, inst.beta));
    EXPECT_LE(relative_error(loss(NBModel{inst.r, inst.beta}, data), expected), 1e-13);
  }
}

TEST(LossTest, FiniteAtExtremeLinearPredictors) {
  const Dataset data = column_data({1.0, -1.0}, {3.0, 0.0});
  for (double b : {700.0, -700.0}) {
    Eigen::VectorXd beta(1);
    beta << b;
    const NBModel model{1.5, beta};
    EXPECT_TRUE(std::isfinite(loss(model, data)));
    EXPECT_TRUE(gradient(model, data).allFinite());
    EXPECT_TRUE(std::isfinite(hessian_quadratic_form(model, data, Eigen::VectorXd::Ones(1))));
  }
}

TEST(LossTest, DimensionMismatchIsDomainError) {
  const Dataset data = column_data({1.0, -1.0}, {3.0, 0.0});
  EXPECT_THROW(loss(NBModel{1.0, Eigen::VectorXd::Zero(2)}, data), DomainError);
}

TEST(GradientTest, VanishesWhenResponsesEqualMeans) {
  const Dataset data = column_data({std::log(2.0), std::log(3.0)}, {2.0, 3.0});
  const Eigen::VectorXd g = gradient(NBModel{1.7, Eigen::VectorXd::Ones(1)}, data);
  EXPECT_NEAR(g[0], 0.0, 1e-14);
}

TEST(GradientTest, SingleObservation) {
  const Dataset data = column_data({1.0}, {0.0});
  EXPECT_NEAR(gradient(NBModel{1.0, Eigen::VectorXd::Zero(1)}, data)[0], 0.5, 1e-15);
}

TEST(GradientTest, CentralDifferencesAndFactoredForm) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    const auto inst = oracle::random_instance(rng, 10 + trial, 1 + trial % 10);
    const Dataset data(inst.X, inst.y);
    const NBModel model{inst.r, inst.beta};
    const Eigen::VectorXd g = gradient(model, data);
    const Eigen::VectorXd gf = gradient_factored(model, data);
    const double h = 1e-6;
    for (Index j = 0; j < data.p(); ++j) {
      Eigen::VectorXd up = inst.beta, down = inst.beta;
      up[j] += h;
      down[j] -= h;
      const double fd = (loss(NBModel{inst.r, up}, data) - loss(NBModel{inst.r, down}, data)) / (2 * h);
      EXPECT_LE(std::abs(fd - g[j]) / std::max(std::abs(g[j]), 1e-3), 1e-5);
    }
    EXPECT_LE((g - gf).lpNorm<Eigen::Infinity>() / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300),
              1e-12);
  }
}

TEST(HessianTest, ZeroDirectionAndSingleObservation) {
  const Dataset one = column_data({1.0}, {1.0});
  const NBModel model{1.0, Eigen::VectorXd::Zero(1)};
  EXPECT_EQ(hessian_quadratic_form(model, one, Eigen::VectorXd::Zero(1)), 0.0);
  EXPECT_NEAR(hessian_quadratic_form(model, one, Eigen::VectorXd::Ones(1)), 0.5, 1e-15);
}

TEST(HessianTest, SecondDifferencesAndMatrixForm) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(rng, 30, 4);
    const Dataset data(inst.X, inst.y);
    const NBModel model{inst.r, inst.beta};
    Eigen::VectorXd v(4);
    for (auto& x : v) x = normal(rng);
    const double form = hessian_quadratic_form(model, data, v);
    EXPECT_GE(form, 0.0);
    const double h = 1e-4;
    const double f0 = loss(model, data);
    const double fp = loss(NBModel{inst.r, inst.beta + h * v}, data);
    const double fm = loss(NBModel{inst.r, inst.beta - h * v}, data);
    EXPECT_LE(relative_error((fp - 2 * f0 + fm) / (h * h), form), 1e-4);
    const Eigen::MatrixXd H = hessian_matrix(model, data);
    EXPECT_LE(relative_error(v.dot(H * v), form), 1e-12);
  }
}

TEST(ThirdDerivativeTest, VanishingCases) {
  std::mt19937_64 rng(6);
  const auto inst = oracle::random_instance(rng, 12, 3);
  const Dataset data(inst.X, inst.y);
  const NBModel model{inst.r, inst.beta};
  EXPECT_EQ(third_derivative_form(model, data, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)),
            0.0);
  // exp(x_i' beta) = r for every row.
  const Dataset at_r = column_data({std::log(2.0), std::log(2.0)}, {0.0, 5.0});
  EXPECT_NEAR(third_derivative_form(NBModel{2.0, Eigen::VectorXd::Ones(1)}, at_r,
                                    Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)),
              0.0, 1e-15);
}

TEST(ThirdDerivativeTest, MatchesDifferenceOfHessianForms) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const auto inst = oracle::random_instance(rng, 25, 3);
  const Dataset data(inst.X, inst.y);
  Eigen::VectorXd u(3), v(3);
  for (auto& x : u) x = normal(rng);
  for (auto& x : v) x = normal(rng);
  const double h = 1e-5;
  const double fd = (hessian_quadratic_form(NBModel{inst.r, inst.beta + h * u}, data, v) -
                     hessian_quadratic_form(NBModel{inst.r, inst.beta - h * u}, data, v)) /
                    (2 * h);
  EXPECT_LE(relative_error(fd, third_derivative_form(NBModel{inst.r, inst.beta}, data, u, v)), 1e-6);
}

TEST(ThirdDerivativeTest, SelfConcordanceBound) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_instance(rng, 5 + trial % 45, 1 + trial % 10);
    const Dataset data(inst.X, inst.y);
    const NBModel model{inst.r, inst.beta};
    Eigen::VectorXd u(data.p()), v(data.p());
    for (auto& x : u) x = normal(rng);
    for (auto& x : v) x = normal(rng);
    const double R = data.X().cwiseAbs().maxCoeff();
    const double lhs = std::abs(third_derivative_form(model, data, u, v));
    const double rhs = R * u.lpNorm<1>() * hessian_quadratic_form(model, data, v);
    EXPECT_LE(lhs, rhs * (1 + 1e-12));
  }
}

TEST(ResidualTest, ZeroWhenResponsesEqualMeans) {
  const Dataset data = column_data({std::log(2.0), std::log(3.0)}, {2.0, 3.0});
  const Eigen::VectorXd eps = standardized_residuals(NBModel{0.8, Eigen::VectorXd::Ones(1)}, data);
  EXPECT_NEAR(eps.lpNorm<Eigen::Infinity>(), 0.0, 1e-14);
}

TEST(ResidualTest, MonteCarloMeanZeroVarianceOne) {
  const double mu = std::exp(0.3);
  const int draws = 100000;
  Eigen::MatrixXd X = Eigen::MatrixXd::Constant(draws, 1, 0.3);
  const NBModel model{1.0, Eigen::VectorXd::Ones(1)};
  Rng rng(9);
  const Dataset data(X, sample_responses(X, model, rng));
  const Eigen::VectorXd eps = standardized_residuals(model, data);
  const double mean = eps.mean();
  const double var = (eps.array() - mean).square().sum() / (draws - 1);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
  EXPECT_NEAR(data.y().mean(), mu, 0.03);
}

TEST(VWeightsTest, KnownValues) {
  const Dataset zero = column_data({0.0, 0.0}, {0.0, 0.0});
  const VWeights w = v_weights(NBModel{1.0, Eigen::VectorXd::Ones(1)}, zero);
  EXPECT_NEAR(w.v[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(w.v_max, 0.70711, 1e-5);

  const Dataset far = column_data({-700.0, -40.0}, {0.0, 0.0});
  const VWeights small = v_weights(NBModel{1.0, Eigen::VectorXd::Ones(1)}, far);
  EXPECT_LT(small.v[0], 1e-150);
  EXPECT_GT(small.v[0], 0.0);

  const Dataset four = column_data({std::log(4.0), 0.0}, {0.0, 0.0});
  EXPECT_NEAR(v_weights(NBModel{4.0, Eigen::VectorXd::Ones(1)}, four).v[0], std::sqrt(2.0), 1e-14);
}

TEST(VWeightsTest, BoundedBySqrtR) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(rng, 20, 3);
    const VWeights w = v_weights(NBModel{inst.r, inst.beta}, Dataset(inst.X, inst.y));
    EXPECT_GT(w.v.minCoeff(), 0.0);
    EXPECT_LT(w.v_max, std::sqrt(inst.r));
  }
}

TEST(LinearPredictorTest, MuIsExpEta) {
  std::mt19937_64 rng(11);
  const auto inst = oracle::random_instance(rng, 15, 4);
  const LinearPredictor lp = linear_predictor(NBModel{inst.r, inst.beta}, Dataset(inst.X, inst.y));
  for (Index i = 0; i < lp.eta.size(); ++i) {
    EXPECT_LE(relative_error(lp.mu[i], std::exp(lp.eta[i])), 1e-12);
    EXPECT_GT(lp.mu[i], 0.0);
  }
}

}  // namespace
}  // namespace nbreg
