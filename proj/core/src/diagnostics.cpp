#include "nbreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nbreg/penalty.hpp"

namespace nbreg {

namespace {

std::vector<Index> support_of(const Eigen::VectorXd& beta) {
  std::vector<Index> support;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) support.push_back(j);
  }
  return support;
}

double l1_on(const Eigen::VectorXd& v, const std::vector<bool>& in_support, bool want) {
  double total = 0.0;
  for (Index j = 0; j < v.size(); ++j) {
    if (in_support[static_cast<std::size_t>(j)] == want) total += std::abs(v[j]);
  }
  return total;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double cone_restricted_eigenvalue(const Eigen::MatrixXd& hessian,
                                  const std::vector<Index>& support, double gamma,
                                  int samples, std::uint64_t seed) {
  if (!(gamma > 1.0)) throw DomainError("cone parameter gamma must exceed 1");
  if (samples < 1) throw ConfigError("cone sample count must be positive");
  const Index p = hessian.rows();
  std::vector<bool> in_support(static_cast<std::size_t>(p), false);
  for (Index j : support) in_support[static_cast<std::size_t>(j)] = true;
  std::vector<Index> off;
  for (Index j = 0; j < p; ++j) {
    if (!in_support[static_cast<std::size_t>(j)]) off.push_back(j);
  }

  Rng rng(derive_seed(seed, 0));
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution coin(0.5);

  double best = kInf;
  Eigen::VectorXd a(p), u(p);
  for (int k = 0; k < samples; ++k) {
    a.setZero();
    if (support.empty()) {
      // Full sphere: ||d||_2 = 1 replaces ||d_S||_2.
      for (Index j = 0; j < p; ++j) a[j] = normal(rng);
      a.normalize();
      best = std::min(best, a.dot(hessian * a));
      continue;
    }
    for (Index j : support) a[j] = normal(rng);
    a.normalize();
    const double aHa = a.dot(hessian * a);
    if (off.empty()) {
      best = std::min(best, aHa);
      continue;
    }
    // u uniform on the l1 unit sphere of the off-support block.
    u.setZero();
    double total = 0.0;
    for (Index j : off) {
      u[j] = expo(rng);
      total += u[j];
    }
    for (Index j : off) u[j] = (coin(rng) ? 1.0 : -1.0) * u[j] / total;
    const double radius = gamma * a.lpNorm<1>();
    const Eigen::VectorXd Hu = hessian * u;
    const double uHu = u.dot(Hu);
    const double aHu = a.dot(Hu);
    double t = uHu > 0.0 ? -aHu / uHu : (aHu < 0.0 ? radius : 0.0);
    t = std::clamp(t, 0.0, radius);
    best = std::min(best, aHa + 2.0 * t * aHu + t * t * uHu);
  }
  return std::max(best, 0.0);
}

ConditionReport check_conditions(const Dataset& data, const NBModel& truth,
                                 const ConditionOptions& options) {
  detail::check_model_matches(truth, data);
  if (!(options.gamma > 1.0)) throw DomainError("cone parameter gamma must exceed 1");
  if (!(options.lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  ConditionReport report;
  report.n = data.n();
  report.p = data.p();
  const std::vector<Index> support = support_of(truth.beta);
  report.s = static_cast<Index>(support.size());
  report.R = data.X().cwiseAbs().maxCoeff();
  report.gamma = options.gamma;
  report.n_cone_samples = options.n_cone_samples;
  report.support_empty = support.empty();
  report.sparsity_ok = report.s < report.n;
  report.c3_ok = std::sqrt(static_cast<double>(report.n)) < static_cast<double>(report.p);
  report.lambda = options.lambda;
  report.c = options.c;

  const Eigen::MatrixXd H = hessian_matrix(truth, data);
  report.re_phi0_sq =
      cone_restricted_eigenvalue(H, support, options.gamma, options.n_cone_samples, options.seed);

  const double c = options.c;
  if (c > 1.0 && report.R > 0.0) {
    const double limit = (c - 1.0) * (c - 1.0) * report.re_phi0_sq / (6.0 * c * report.R * (c + 1.0));
    report.lambda_smallness_ok = options.lambda * static_cast<double>(report.s) <= limit;
  }
  return report;
}

TheoremLedger theorem_ledger(const ConditionReport& report, double lambda, double c, double c1) {
  if (!(c > 1.0) || !std::isfinite(c)) throw DomainError("constant c must exceed 1");
  if (!(c1 > 2.0 && c1 <= 3.0)) throw DomainError("constant c1 must lie in (2, 3]");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  TheoremLedger ledger;
  ledger.c = c;
  ledger.c1 = c1;
  ledger.lambda = lambda;
  const double s = static_cast<double>(report.s);
  const double cm1_sq = (c - 1.0) * (c - 1.0);
  ledger.C = 2.0 * c1 * c * (c + 1.0) / cm1_sq;
  ledger.R_tilde = 2.0 * c * report.R * std::sqrt(s) / (c - 1.0);
  const double phi = report.re_phi0_sq;
  if (phi > 0.0) {
    ledger.h = 2.0 * c * (c + 1.0) * lambda * report.R * s / (cm1_sq * phi);
    ledger.bound_l1 = ledger.C * lambda * s / phi;
    ledger.bound_loss = ledger.C * lambda * lambda * s / phi;
  } else {
    const bool zero = lambda * s == 0.0;
    ledger.h = zero ? 0.0 : kInf;
    ledger.bound_l1 = zero ? 0.0 : kInf;
    ledger.bound_loss = zero ? 0.0 : kInf;
  }
  ledger.hypothesis_met = ledger.h <= 1.0 / 3.0;
  return ledger;
}

BoundCheck verify_bounds(const Dataset& data, const NBModel& truth, const FitResult& fit,
                         const TheoremLedger& ledger) {
  detail::check_model_matches(truth, data);
  if (fit.beta_hat.size() != truth.beta.size()) throw DomainError("fit length mismatch");
  BoundCheck check;
  const Eigen::VectorXd delta = fit.beta_hat - truth.beta;
  check.l1_error = delta.lpNorm<1>();
  check.loss_gap =
      std::abs(loss(NBModel{truth.r, fit.beta_hat}, data) - loss(truth, data));
  check.slack_l1 = ledger.bound_l1 - check.l1_error;
  check.slack_loss = ledger.bound_loss - check.loss_gap;
  check.l1_ok = check.slack_l1 >= 0.0;
  check.loss_ok = check.slack_loss >= 0.0;

  std::vector<bool> in_support(static_cast<std::size_t>(truth.beta.size()));
  for (Index j = 0; j < truth.beta.size(); ++j) {
    in_support[static_cast<std::size_t>(j)] = truth.beta[j] != 0.0;
  }
  const double cone_gamma = (ledger.c + 1.0) / (ledger.c - 1.0);
  const double off = l1_on(delta, in_support, false);
  const double on = l1_on(delta, in_support, true);
  check.cone_ok = off <= cone_gamma * on + 1e-12;

  check.sup_gradient = sup_gradient(data, truth);
  check.event_holds = ledger.lambda >= ledger.c * check.sup_gradient;
  check.hypothesis_met = ledger.hypothesis_met;
  return check;
}

TailDiagnostic tail_diagnostic(const NBModel& model, const Dataset& data,
                               const std::vector<double>& a_grid, int mc_reps,
                               std::uint64_t seed, unsigned threads) {
  if (mc_reps < 10000) throw ConfigError("tail diagnostic needs mc_reps >= 10^4");
  if (a_grid.empty()) throw ConfigError("threshold grid is empty");
  for (double a : a_grid) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("thresholds must be >= 0");
  }
  detail::check_model_matches(model, data);
  std::vector<double> grid = a_grid;
  std::sort(grid.begin(), grid.end());

  const Eigen::VectorXd eta = data.X() * model.beta;
  const Eigen::VectorXd mu = eta.array().exp().matrix();
  const Eigen::VectorXd scale =
      (mu.array() * (model.r + mu.array()) / model.r).sqrt().matrix();

  std::vector<std::vector<std::uint64_t>> counts(
      static_cast<std::size_t>(mc_reps), std::vector<std::uint64_t>(grid.size(), 0));
  parallel_for(counts.size(), threads, [&](std::size_t k) {
    Rng rng = make_rng(seed, k);
    auto& row = counts[k];
    for (Index i = 0; i < data.n(); ++i) {
      const double y = static_cast<double>(nb_sample(model.r, mu[i], rng));
      const double eps = std::abs((y - mu[i]) / scale[i]);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (eps > grid[g]) ++row[g];
      }
    }
  });

  TailDiagnostic out;
  const double total = static_cast<double>(mc_reps) * static_cast<double>(data.n());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::uint64_t hits = 0;
    for (const auto& row : counts) hits += row[g];
    out.rows.push_back({grid[g], static_cast<double>(hits) / total});
  }

  // Least squares of log frequency on a over the upper half of the grid.
  std::vector<double> xs, ys;
  const double median = grid[grid.size() / 2];
  for (const auto& row : out.rows) {
    if (row.a >= median && row.exceedance > 0.0) {
      xs.push_back(row.a);
      ys.push_back(std::log(row.exceedance));
    }
  }
  out.tail_points = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    const double m = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxx += (xs[k] - mx) * (xs[k] - mx);
      sxy += (xs[k] - mx) * (ys[k] - my);
      syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.w1 = slope < 0.0 ? -1.0 / slope : kInf;
    out.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  } else {
    out.w1 = std::numeric_limits<double>::quiet_NaN();
    out.r_squared = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace nbreg
