#include "nbreg/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nbreg {

namespace {

void check_c_alpha(double c, double alpha) {
  if (!(c > 1.0) || !std::isfinite(c)) throw DomainError("penalty constant c must exceed 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

}  // namespace

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::Exact:
      return "exact";
    case PenaltyKind::Asymptotic:
      return "asymptotic";
    case PenaltyKind::Fixed:
      return "fixed";
    case PenaltyKind::CrossValidated:
      return "cv";
  }
  return "unknown";
}

PenaltyKind penalty_kind_from_string(std::string_view name) {
  if (name == "exact") return PenaltyKind::Exact;
  if (name == "asymptotic") return PenaltyKind::Asymptotic;
  if (name == "fixed") return PenaltyKind::Fixed;
  if (name == "cv" || name == "cross-validated") return PenaltyKind::CrossValidated;
  throw ConfigError("unknown penalty rule '" + std::string(name) + "'");
}

void PenaltyChoice::validate() const {
  if (kind == PenaltyKind::Exact || kind == PenaltyKind::Asymptotic) check_c_alpha(c, alpha);
  if (kind == PenaltyKind::Exact && mc_reps < 100) {
    throw ConfigError("exact penalty needs mc_reps >= 100");
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
}

double lambda_asymptotic(double v_n, Index n, Index p, double c, double alpha,
                         Warnings* warnings) {
  check_c_alpha(c, alpha);
  if (!(v_n > 0.0) || !std::isfinite(v_n)) throw DomainError("v_n must be positive");
  if (n < 1 || p < 1) throw DomainError("n and p must be positive");
  const double pd = static_cast<double>(p);
  if (warnings && !(pd / alpha > 8.0)) {
    warnings->emplace_back("p / alpha = " + std::to_string(pd / alpha) +
                           " does not exceed 8; quantile bracketing does not apply");
  }
  const double t = inverse_normal_cdf(1.0 - alpha / (2.0 * pd));
  return c * v_n * t / std::sqrt(static_cast<double>(n));
}

double sup_gradient(const Dataset& data, const NBModel& truth) {
  return gradient(truth, data).lpNorm<Eigen::Infinity>();
}

double lower_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(level > 0.0 && level <= 1.0)) throw DomainError("quantile level must lie in (0, 1]");
  const auto m = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil(level * m - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   values.end());
  return values[k - 1];
}

double sup_gradient_quantile(const Dataset& data, const NBModel& truth, double alpha,
                             int mc_reps, std::uint64_t seed, unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (mc_reps < 1) throw ConfigError("mc_reps must be positive");
  detail::check_model_matches(truth, data);
  const Eigen::VectorXd eta = data.X() * truth.beta;
  const Eigen::VectorXd mu = eta.array().exp().matrix();
  std::vector<double> sups(static_cast<std::size_t>(mc_reps));
  parallel_for(sups.size(), threads, [&](std::size_t k) {
    Rng rng = make_rng(seed, k);
    Eigen::VectorXd y(data.n());
    for (Index i = 0; i < data.n(); ++i) {
      y[i] = static_cast<double>(nb_sample(truth.r, mu[i], rng));
    }
    const Eigen::VectorXd w = detail::score_weights(eta, y, truth.r);
    sups[k] = (data.X().transpose() * w).lpNorm<Eigen::Infinity>() /
              static_cast<double>(data.n());
  });
  return lower_quantile(std::move(sups), 1.0 - alpha);
}

double lambda_exact(const Dataset& data, const NBModel& truth, double c, double alpha,
                    int mc_reps, std::uint64_t seed, unsigned threads) {
  check_c_alpha(c, alpha);
  if (mc_reps < 100) throw ConfigError("exact penalty needs mc_reps >= 100");
  return c * sup_gradient_quantile(data, truth, alpha, mc_reps, seed, threads);
}

PilotResult pilot_beta(const Dataset& data, double r, double c, double alpha,
                       const FitConfig& base) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("dispersion r must be positive");
  PilotResult pilot;
  const double v_null = std::sqrt(r / (1.0 + r));
  pilot.lambda = lambda_asymptotic(v_null, data.n(), data.p(), c, alpha, &pilot.warnings);
  FitConfig config = base;
  config.lambda = pilot.lambda;
  FitResult result = fit(data, r, config);
  pilot.beta = std::move(result.beta_hat);
  pilot.converged = result.converged;
  for (auto& w : result.warnings) pilot.warnings.push_back("pilot fit: " + w);
  return pilot;
}

}  // namespace nbreg
