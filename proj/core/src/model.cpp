#include "nbreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nbreg {

namespace {

void require_finite_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw DomainError(std::string(name) + " must be finite and positive");
  }
}

// Linear predictor with a finiteness check that names the failing row.
Eigen::VectorXd checked_eta(const NBModel& model, const Dataset& data) {
  detail::check_model_matches(model, data);
  Eigen::VectorXd eta = data.X() * model.beta;
  for (Index i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta[i])) {
      throw NumericError("non-finite linear predictor at observation " + std::to_string(i),
                         static_cast<std::size_t>(i));
    }
  }
  return eta;
}

template <typename Vec>
void check_finite_result(const Vec& values, const char* what) {
  for (Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string("non-finite ") + what + " at index " + std::to_string(i),
                         static_cast<std::size_t>(i));
    }
  }
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd y, bool standardized)
    : X_(std::move(X)), y_(std::move(y)), standardized_(standardized) {
  if (X_.rows() < 1 || X_.cols() < 1) throw DomainError("dataset needs n >= 1 and p >= 1");
  if (y_.size() != X_.rows()) {
    throw DomainError("response length " + std::to_string(y_.size()) +
                      " does not match design rows " + std::to_string(X_.rows()));
  }
  for (Index i = 0; i < y_.size(); ++i) {
    const double yi = y_[i];
    if (!std::isfinite(yi) || yi < 0.0 || yi != std::floor(yi)) {
      throw DomainError("response at row " + std::to_string(i) +
                        " is not a non-negative integer");
    }
  }
  if (!X_.allFinite()) throw DomainError("design matrix contains non-finite entries");
  if (standardized_ && !columns_standardized(X_)) {
    throw DomainError("design flagged standardized but columns are not mean 0 / mean square 1");
  }
}

Dataset Dataset::rows(const std::vector<Index>& index) const {
  Eigen::MatrixXd X(static_cast<Index>(index.size()), p());
  Eigen::VectorXd y(static_cast<Index>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k) {
    X.row(static_cast<Index>(k)) = X_.row(index[k]);
    y[static_cast<Index>(k)] = y_[index[k]];
  }
  return Dataset(std::move(X), std::move(y));
}

bool Dataset::columns_standardized(const Eigen::MatrixXd& X, const std::vector<Index>& skip) {
  const double n = static_cast<double>(X.rows());
  for (Index j = 0; j < X.cols(); ++j) {
    if (std::find(skip.begin(), skip.end(), j) != skip.end()) continue;
    const double mean = X.col(j).sum() / n;
    const double mean_sq = X.col(j).squaredNorm() / n;
    if (std::abs(mean) > kMeanTolerance || std::abs(mean_sq - 1.0) > kMeanSquareTolerance) {
      return false;
    }
  }
  return true;
}

void NBModel::validate() const {
  require_finite_positive(r, "dispersion r");
  if (!beta.allFinite()) throw DomainError("coefficient vector has non-finite entries");
}

namespace detail {

void check_model_matches(const NBModel& model, const Dataset& data) {
  model.validate();
  if (model.beta.size() != data.p()) {
    throw DomainError("coefficient length " + std::to_string(model.beta.size()) +
                      " does not match covariate count " + std::to_string(data.p()));
  }
}

double log_r_plus_exp(double eta, double r) noexcept {
  // eta > 0: eta + ln(1 + r e^-eta); otherwise ln r + ln(1 + e^eta / r).
  if (eta > 0.0) return eta + std::log1p(r * std::exp(-eta));
  return std::log(r) + std::log1p(std::exp(eta) / r);
}

double loss_from_eta(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, double r) {
  double total = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double term = (y[i] + r) * log_r_plus_exp(eta[i], r) - y[i] * eta[i];
    if (!std::isfinite(term)) {
      throw NumericError("non-finite loss term at observation " + std::to_string(i),
                         static_cast<std::size_t>(i));
    }
    total += term;
  }
  return total / static_cast<double>(eta.size());
}

Eigen::VectorXd score_weights(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, double r) {
  Eigen::VectorXd w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    if (eta[i] > 0.0) {
      const double e = std::exp(-eta[i]);  // 1 / mu
      w[i] = r * (y[i] * e - 1.0) / (r * e + 1.0);
    } else {
      const double mu = std::exp(eta[i]);
      w[i] = r * (y[i] - mu) / (r + mu);
    }
  }
  return w;
}

Eigen::VectorXd curvature_weights(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                                  double r) {
  Eigen::VectorXd w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    if (eta[i] > 0.0) {
      const double e = std::exp(-eta[i]);
      const double d = r * e + 1.0;
      w[i] = r * e * (y[i] + r) / (d * d);
    } else {
      const double mu = std::exp(eta[i]);
      const double d = r + mu;
      w[i] = r * mu * (y[i] + r) / (d * d);
    }
  }
  return w;
}

}  // namespace detail

LinearPredictor linear_predictor(const NBModel& model, const Dataset& data) {
  LinearPredictor lp;
  lp.eta = checked_eta(model, data);
  lp.mu = lp.eta.array().exp().matrix();
  return lp;
}

double nb_log_pmf(std::uint64_t y, double r, double mu) {
  require_finite_positive(r, "dispersion r");
  require_finite_positive(mu, "mean mu");
  const double yd = static_cast<double>(y);
  // r ln(r/(r+mu)) + y ln(mu/(r+mu)) + ln Gamma(r+y) - ln Gamma(r) - ln y!
  return -r * std::log1p(mu / r) - yd * std::log1p(r / mu) + std::lgamma(r + yd) -
         std::lgamma(r) - std::lgamma(yd + 1.0);
}

double nb_pmf(std::uint64_t y, double r, double mu) { return std::exp(nb_log_pmf(y, r, mu)); }

std::uint64_t nb_sample(double r, double mu, Rng& rng) {
  require_finite_positive(r, "dispersion r");
  require_finite_positive(mu, "mean mu");
  std::gamma_distribution<double> gamma(r, mu / r);
  const double rate = gamma(rng);
  if (!(rate > 0.0)) return 0;
  if (rate > 1e15) throw NumericError("Poisson rate too large to sample: " + std::to_string(rate));
  std::poisson_distribution<std::uint64_t> poisson(rate);
  return poisson(rng);
}

Eigen::VectorXd sample_responses(const Eigen::MatrixXd& X, const NBModel& model, Rng& rng) {
  model.validate();
  if (model.beta.size() != X.cols()) throw DomainError("coefficient length mismatch");
  const Eigen::VectorXd eta = X * model.beta;
  Eigen::VectorXd y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    y[i] = static_cast<double>(nb_sample(model.r, std::exp(eta[i]), rng));
  }
  return y;
}

double loss(const NBModel& model, const Dataset& data) {
  return detail::loss_from_eta(checked_eta(model, data), data.y(), model.r);
}

Eigen::VectorXd gradient(const NBModel& model, const Dataset& data) {
  const Eigen::VectorXd w = detail::score_weights(checked_eta(model, data), data.y(), model.r);
  Eigen::VectorXd g = -(data.X().transpose() * w) / static_cast<double>(data.n());
  check_finite_result(g, "gradient");
  return g;
}

Eigen::VectorXd gradient_factored(const NBModel& model, const Dataset& data) {
  const VWeights weights = v_weights(model, data);
  const Eigen::VectorXd eps = standardized_residuals(model, data);
  const Eigen::VectorXd w = weights.v.cwiseProduct(eps);
  Eigen::VectorXd g = -(data.X().transpose() * w) / static_cast<double>(data.n());
  check_finite_result(g, "gradient");
  return g;
}

double hessian_quadratic_form(const NBModel& model, const Dataset& data,
                              const Eigen::VectorXd& v) {
  if (v.size() != data.p()) throw DomainError("direction length mismatch");
  const Eigen::VectorXd w = detail::curvature_weights(checked_eta(model, data), data.y(), model.r);
  const Eigen::VectorXd xv = data.X() * v;
  const double value = (xv.array().square() * w.array()).sum() / static_cast<double>(data.n());
  if (!std::isfinite(value)) throw NumericError("non-finite Hessian form");
  return value;
}

Eigen::MatrixXd hessian_matrix(const NBModel& model, const Dataset& data) {
  const Eigen::VectorXd w = detail::curvature_weights(checked_eta(model, data), data.y(), model.r);
  const Eigen::MatrixXd weighted = data.X().array().colwise() * w.array();
  Eigen::MatrixXd H = data.X().transpose() * weighted / static_cast<double>(data.n());
  return 0.5 * (H + H.transpose());
}

double third_derivative_form(const NBModel& model, const Dataset& data,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != data.p() || v.size() != data.p()) {
    throw DomainError("direction length mismatch");
  }
  const Eigen::VectorXd eta = checked_eta(model, data);
  const Eigen::VectorXd xu = data.X() * u;
  const Eigen::VectorXd xv = data.X() * v;
  const double r = model.r;
  double total = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double yr = data.y()[i] + r;
    double weight;
    if (eta[i] > 0.0) {
      const double e = std::exp(-eta[i]);
      const double d = r * e + 1.0;
      weight = r * e * yr * (r * e - 1.0) / (d * d * d);
    } else {
      const double mu = std::exp(eta[i]);
      const double d = r + mu;
      weight = r * mu * yr * (r - mu) / (d * d * d);
    }
    total += xu[i] * xv[i] * xv[i] * weight;
  }
  total /= static_cast<double>(data.n());
  if (!std::isfinite(total)) throw NumericError("non-finite third-derivative form");
  return total;
}

Eigen::VectorXd standardized_residuals(const NBModel& model, const Dataset& data) {
  const Eigen::VectorXd eta = checked_eta(model, data);
  const double r = model.r;
  Eigen::VectorXd eps(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    const double y = data.y()[i];
    if (eta[i] > 0.0) {
      // Divide numerator and sqrt(mu (r + mu) / r) by mu.
      const double e = std::exp(-eta[i]);
      eps[i] = (y * e - 1.0) / std::sqrt((r * e + 1.0) / r);
    } else {
      const double mu = std::exp(eta[i]);
      eps[i] = (y - mu) / std::sqrt(mu * (r + mu) / r);
    }
  }
  check_finite_result(eps, "standardized residual");
  return eps;
}

VWeights v_weights(const NBModel& model, const Dataset& data) {
  const Eigen::VectorXd eta = checked_eta(model, data);
  const double r = model.r;
  VWeights out;
  out.v.resize(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    // r mu / (mu + r) = r / (1 + r e^-eta)
    out.v[i] = eta[i] > 0.0 ? std::sqrt(r / (1.0 + r * std::exp(-eta[i])))
                            : std::sqrt(r * std::exp(eta[i]) / (std::exp(eta[i]) + r));
  }
  out.v_max = out.v.maxCoeff();
  return out;
}

}  // namespace nbreg
